'''
@date:    19/10/2026
@brief:   Bounded FIFO replay buffer with a per-state inclusion filter.

The inclusion filter is what starves a state of data: a transition
leaving state s is only stored with probability inclusion_prob[s]. The
filter acts at push time, stored transitions are never re-filtered.
'''

import numpy as np

from PyUADRL.general.decorators import check_state_action
from PyUADRL.general.element import Printing
from PyUADRL.mdp.mdp_core import EmptyBuffer, IndexOutOfRange, TransitionBatch


class ReplayBuffer(Printing):
    '''Ring buffer over numpy arrays. len(buffer) never exceeds
    capacity; when full, the oldest transition is evicted.

    Counters n_offered and n_accepted (per state) record how many
    transitions were pushed and how many passed the inclusion filter.
    Evicting a transition of a filtered state warns once.
    '''

    def __init__(self, capacity, n_states, *args, **kwargs):
        if int(capacity) < 1:
            raise ValueError('ReplayBuffer: capacity must be >= 1')
        self.capacity = int(capacity)
        self.n_states = int(n_states)
        self.inclusion_prob = np.ones(self.n_states, dtype=np.float64)
        self.n_offered = np.zeros(self.n_states, dtype=np.int64)
        self.n_accepted = np.zeros(self.n_states, dtype=np.int64)

        self._states = np.zeros(self.capacity, dtype=np.int64)
        self._actions = np.zeros(self.capacity, dtype=np.int64)
        self._rewards = np.zeros(self.capacity, dtype=np.float64)
        self._next_states = np.zeros(self.capacity, dtype=np.int64)
        self._terminals = np.zeros(self.capacity, dtype=bool)
        self._start = 0
        self._size = 0
        self._warned_eviction = False

    def __len__(self):
        return self._size

    @property
    def is_full(self):
        return self._size == self.capacity

    def _store(self, state, action, reward, next_state, terminal):
        slot = (self._start + self._size) % self.capacity
        if self.is_full:
            evicted = int(self._states[slot])
            if (self.inclusion_prob[evicted] < 1. and
                    not self._warned_eviction):
                self.warns('replay buffer full, evicting a transition of '
                           'filtered state {:d} (inclusion probability '
                           '{})'.format(evicted,
                                        self.inclusion_prob[evicted]))
                self._warned_eviction = True
            self._start = (self._start + 1) % self.capacity
        else:
            self._size += 1
        self._states[slot] = state
        self._actions[slot] = action
        self._rewards[slot] = reward
        self._next_states[slot] = next_state
        self._terminals[slot] = terminal

    def push(self, transition, rng):
        '''Offer one transition. Exactly one uniform number is drawn from
        rng per call, accepted or not. Returns whether it was stored.
        '''
        state = int(transition.state)
        if not 0 <= state < self.n_states:
            raise IndexOutOfRange('push: state {} not in [0, {})'.format(
                state, self.n_states))
        self.n_offered[state] += 1
        if not rng.random() < self.inclusion_prob[state]:
            return False
        self.n_accepted[state] += 1
        self._store(state, transition.action, transition.reward,
                    transition.next_state, transition.terminal)
        return True

    def extend(self, transitions, rng):
        '''Offer a whole dataset (TransitionBatch or iterable of
        Transitions) in order. Returns the number of accepted
        transitions. Stream consumption is identical to calling push
        for every transition.
        '''
        batch = TransitionBatch.from_transitions(transitions)
        n = len(batch)
        if n == 0:
            return 0
        if batch.states.min() < 0 or batch.states.max() >= self.n_states:
            raise IndexOutOfRange('extend: state index out of range')
        accepted = rng.random(n) < self.inclusion_prob[batch.states]
        np.add.at(self.n_offered, batch.states, 1)
        np.add.at(self.n_accepted, batch.states[accepted], 1)
        for k in np.nonzero(accepted)[0]:
            self._store(batch.states[k], batch.actions[k], batch.rewards[k],
                        batch.next_states[k], batch.terminals[k])
        return int(accepted.sum())

    def _positions(self, fifo_index):
        return (self._start + np.asarray(fifo_index)) % self.capacity

    def _gather(self, positions):
        return TransitionBatch(self._states[positions],
                               self._actions[positions],
                               self._rewards[positions],
                               self._next_states[positions],
                               self._terminals[positions])

    def sample_batch(self, batch_size, rng):
        '''Draw batch_size transitions uniformly with replacement.'''
        if self._size == 0:
            raise EmptyBuffer('sample_batch: replay buffer is empty')
        fifo_index = rng.integers(0, self._size, size=int(batch_size))
        return self._gather(self._positions(fifo_index))

    def entries(self):
        '''All stored transitions, oldest first.'''
        return self._gather(self._positions(np.arange(self._size)))

    def clear(self):
        self._start = 0
        self._size = 0

    def __repr__(self):
        return 'ReplayBuffer({:d}/{:d} transitions, {:d} filtered states)'.format(
            self._size, self.capacity, int(np.sum(self.inclusion_prob < 1.)))


def push(buffer, t, rng):
    '''Offer transition t to buffer, see ReplayBuffer.push .'''
    return buffer.push(t, rng)


def sample_batch(buffer, batch_size, rng):
    '''Uniform sample with replacement, EmptyBuffer if buffer is empty.'''
    return buffer.sample_batch(batch_size, rng)


def _buffer_states(buffer):
    return buffer.n_states


@check_state_action(_buffer_states, with_action=False)
def starve(buffer, state, p):
    '''Set the inclusion probability of state to p.'''
    p = float(p)
    if not 0. <= p <= 1.:
        raise ValueError('starve: inclusion probability {} not in '
                         '[0, 1]'.format(p))
    buffer.inclusion_prob[int(state)] = p
    return buffer
