'''
@date:    19/10/2026
@brief:   Finite Markov decision processes, episode simulation and the
          exact return distribution oracle.

A TabularMdp stores its transition kernel as a sparse matrix with one
row per (state, action) pair and one column per next state. Rewards are
attached to the non-zero kernel entries, i.e. they are defined on
(state, action, next_state) triples and carry no randomness beyond the
next-state draw. Terminal states self-loop with reward 0.
'''

import csv
import json
from collections import namedtuple

import numpy as np
from scipy import sparse

from PyUADRL.general.decorators import check_state_action


class TerminalStateStep(RuntimeError):
    '''Raise if a step is requested from a terminal state.'''
    def __init__(self, message):
        super(TerminalStateStep, self).__init__(message)
        self.message = message


class IndexOutOfRange(IndexError):
    '''Raise if a state or action index lies outside the MDP.'''
    def __init__(self, message):
        super(IndexOutOfRange, self).__init__(message)
        self.message = message


class EmptyBuffer(RuntimeError):
    '''Raise if transitions are requested from an empty replay buffer.'''
    def __init__(self, message='replay buffer is empty'):
        super(EmptyBuffer, self).__init__(message)
        self.message = message


class ExplosionGuard(RuntimeError):
    '''Raise if the return distribution enumeration exceeds its atom
    budget.'''
    def __init__(self, message):
        super(ExplosionGuard, self).__init__(message)
        self.message = message


class MdpInvalid(ValueError):
    '''Raise if an MDP violates the kernel, discount or terminal
    invariants.'''
    def __init__(self, message):
        super(MdpInvalid, self).__init__(message)
        self.message = message


Transition = namedtuple('Transition',
                        ['state', 'action', 'reward', 'next_state', 'terminal'])


class TransitionBatch(object):
    '''Struct-of-arrays view on a set of transitions. Iterating over a
    TransitionBatch yields Transition tuples.
    '''

    def __init__(self, states, actions, rewards, next_states, terminals):
        self.states = np.asarray(states, dtype=np.int64)
        self.actions = np.asarray(actions, dtype=np.int64)
        self.rewards = np.asarray(rewards, dtype=np.float64)
        self.next_states = np.asarray(next_states, dtype=np.int64)
        self.terminals = np.asarray(terminals, dtype=bool)

    @classmethod
    def from_transitions(cls, transitions):
        if isinstance(transitions, TransitionBatch):
            return transitions
        transitions = list(transitions)
        if not transitions:
            return cls([], [], [], [], [])
        columns = list(zip(*transitions))
        return cls(*columns)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, index):
        return Transition(int(self.states[index]), int(self.actions[index]),
                          float(self.rewards[index]),
                          int(self.next_states[index]),
                          bool(self.terminals[index]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        return list(self) == list(TransitionBatch.from_transitions(other))


class TabularMdp(object):
    '''Finite MDP with states 0..n_states-1 and actions 0..n_actions-1.

    The kernel is given as entries (state, action, next_state, prob,
    reward). Duplicate (state, action, next_state) entries are merged:
    their probabilities add up and their rewards are averaged with the
    probabilities as weights. Entries with zero probability are dropped.

    Optional metadata:
        - coords: per-state (row, col) labels of grid worlds
        - start_distribution: per-state probabilities. If given,
          episodes start from a draw of it instead of initial_state.
        - name: free text label
    '''

    def __init__(self, n_states, n_actions, entries, gamma,
                 initial_state=0, terminals=(), coords=None,
                 start_distribution=None, name=None, validate=True):
        self.n_states = int(n_states)
        self.n_actions = int(n_actions)
        self.gamma = float(gamma)
        self.initial_state = int(initial_state)
        self.terminals = frozenset(int(s) for s in terminals)
        self.coords = None if coords is None else [tuple(c) for c in coords]
        self.start_distribution = (None if start_distribution is None else
                                   np.asarray(start_distribution,
                                              dtype=np.float64))
        self.name = name
        self._build_kernel(entries)
        if validate:
            self.validate()

    @classmethod
    def from_dense(cls, transition, reward, gamma, **kwargs):
        '''Create from dense (S, A, S) transition and reward arrays.'''
        transition = np.asarray(transition, dtype=np.float64)
        reward = np.broadcast_to(np.asarray(reward, dtype=np.float64),
                                 transition.shape)
        n_states, n_actions, _ = transition.shape
        s, a, s2 = np.nonzero(transition)
        entries = zip(s, a, s2, transition[s, a, s2], reward[s, a, s2])
        return cls(n_states, n_actions, list(entries), gamma, **kwargs)

    def _build_kernel(self, entries):
        S, A = self.n_states, self.n_actions
        entries = list(entries)
        if entries:
            s, a, s2, p, r = (np.asarray(col) for col in zip(*entries))
        else:
            s = a = s2 = np.zeros(0, dtype=np.int64)
            p = r = np.zeros(0)
        s = s.astype(np.int64)
        a = a.astype(np.int64)
        s2 = s2.astype(np.int64)
        p = p.astype(np.float64)
        r = r.astype(np.float64)
        if len(s) and (s.min() < 0 or s.max() >= S or s2.min() < 0 or
                       s2.max() >= S or a.min() < 0 or a.max() >= A):
            raise MdpInvalid('kernel entry refers to an index outside '
                             '{:d} states x {:d} actions'.format(S, A))
        if np.any(p < 0):
            raise MdpInvalid('negative transition probability')
        key = (s * A + a) * S + s2
        unique_keys, inverse = np.unique(key, return_inverse=True)
        probs = np.bincount(inverse, weights=p, minlength=len(unique_keys))
        weighted = np.bincount(inverse, weights=p * r,
                               minlength=len(unique_keys))
        keep = probs > 0
        unique_keys = unique_keys[keep]
        probs = probs[keep]
        rewards = weighted[keep] / probs
        rows = unique_keys // S
        indices = unique_keys % S
        indptr = np.searchsorted(rows, np.arange(S * A + 1))
        self.kernel = sparse.csr_matrix((probs, indices, indptr),
                                        shape=(S * A, S))
        self.reward_data = rewards

    def validate(self):
        '''Check the TabularMdp invariants, raise MdpInvalid otherwise.'''
        if not 0. <= self.gamma < 1.:
            raise MdpInvalid('gamma={} not in [0, 1)'.format(self.gamma))
        if self.n_states < 1 or self.n_actions < 1:
            raise MdpInvalid('need at least one state and one action')
        if not 0 <= self.initial_state < self.n_states:
            raise MdpInvalid('initial_state {} out of range'.format(
                self.initial_state))
        for s in self.terminals:
            if not 0 <= s < self.n_states:
                raise MdpInvalid('terminal state {} out of range'.format(s))
        row_sums = np.asarray(self.kernel.sum(axis=1)).ravel()
        bad = np.nonzero(np.abs(row_sums - 1.) > 1e-9)[0]
        if len(bad):
            s, a = divmod(int(bad[0]), self.n_actions)
            raise MdpInvalid('transition distribution of (s={}, a={}) sums '
                             'to {!r}'.format(s, a, row_sums[bad[0]]))
        for s in self.terminals:
            for a in range(self.n_actions):
                next_states, probs, rewards = self.transition_probs(s, a)
                if (len(next_states) != 1 or next_states[0] != s or
                        rewards[0] != 0.):
                    raise MdpInvalid('terminal state {} must self-loop with '
                                     'reward 0'.format(s))
        if self.coords is not None and len(self.coords) != self.n_states:
            raise MdpInvalid('coords must label every state')
        if self.start_distribution is not None:
            start = self.start_distribution
            if (start.shape != (self.n_states,) or np.any(start < 0) or
                    abs(start.sum() - 1.) > 1e-9):
                raise MdpInvalid('start_distribution must be a probability '
                                 'vector over the states')

    @property
    def terminal_mask(self):
        mask = np.zeros(self.n_states, dtype=bool)
        mask[list(self.terminals)] = True
        return mask

    def is_terminal(self, state):
        return int(state) in self.terminals

    @property
    def max_abs_reward(self):
        if len(self.reward_data) == 0:
            return 0.
        return float(np.max(np.abs(self.reward_data)))

    def transition_probs(self, state, action):
        '''Return (next_states, probabilities, rewards) of (state,
        action) as arrays over the successors with non-zero probability.
        '''
        row = int(state) * self.n_actions + int(action)
        lo, hi = self.kernel.indptr[row], self.kernel.indptr[row + 1]
        return (self.kernel.indices[lo:hi], self.kernel.data[lo:hi],
                self.reward_data[lo:hi])

    def successors(self, state, action):
        '''List of (next_state, probability) with non-zero probability.'''
        next_states, probs, _ = self.transition_probs(state, action)
        return [(int(s2), float(p)) for s2, p in zip(next_states, probs)]

    def reward(self, state, action, next_state):
        next_states, _, rewards = self.transition_probs(state, action)
        hit = np.nonzero(next_states == int(next_state))[0]
        return float(rewards[hit[0]]) if len(hit) else 0.

    def expected_rewards(self):
        '''Return the (S, A) array of expected one-step rewards.'''
        weighted = sparse.csr_matrix(
            (self.kernel.data * self.reward_data, self.kernel.indices,
             self.kernel.indptr), shape=self.kernel.shape)
        return np.asarray(weighted.sum(axis=1)).reshape(
            self.n_states, self.n_actions)

    def dense_kernel(self):
        '''Return the dense (S, A, S) transition array (small MDPs).'''
        return self.kernel.toarray().reshape(
            self.n_states, self.n_actions, self.n_states)

    def dense_reward(self):
        '''Return the dense (S, A, S) reward array, 0 where the kernel
        has no mass.'''
        reward = sparse.csr_matrix(
            (self.reward_data, self.kernel.indices, self.kernel.indptr),
            shape=self.kernel.shape)
        return reward.toarray().reshape(
            self.n_states, self.n_actions, self.n_states)

    def entries(self):
        '''Iterate over the (state, action, next_state, prob, reward)
        entries with non-zero probability.'''
        for row in range(self.n_states * self.n_actions):
            s, a = divmod(row, self.n_actions)
            lo, hi = self.kernel.indptr[row], self.kernel.indptr[row + 1]
            for k in range(lo, hi):
                yield (s, a, int(self.kernel.indices[k]),
                       float(self.kernel.data[k]), float(self.reward_data[k]))

    def __repr__(self):
        return ('TabularMdp({}{:d} states x {:d} actions, gamma={}, '
                '{:d} terminals)'.format(
                    '' if self.name is None else self.name + ': ',
                    self.n_states, self.n_actions, self.gamma,
                    len(self.terminals)))


def _n_states(mdp):
    return mdp.n_states


def _n_actions(mdp):
    return mdp.n_actions


@check_state_action(_n_states, _n_actions)
def step(mdp, state, action, rng):
    '''Advance the MDP by one step from (state, action). The next state
    is drawn from the kernel with the given numpy Generator, the
    reward is looked up on (state, action, next_state).

    Raises TerminalStateStep if state is terminal and IndexOutOfRange
    for invalid indices.
    '''
    if mdp.is_terminal(state):
        raise TerminalStateStep('step: state {} is terminal'.format(state))
    next_states, probs, rewards = mdp.transition_probs(state, action)
    if len(next_states) == 1:
        # keep stream consumption independent of the kernel shape
        rng.random()
        k = 0
    else:
        cumulative = np.cumsum(probs)
        k = int(np.searchsorted(cumulative, rng.random() * cumulative[-1],
                                side='right'))
        k = min(k, len(next_states) - 1)
    next_state = int(next_states[k])
    return Transition(int(state), int(action), float(rewards[k]), next_state,
                      mdp.is_terminal(next_state))


def as_policy(policy):
    '''Accept a callable state -> action or a per-state action array and
    return a callable.'''
    if callable(policy):
        return policy
    actions = np.asarray(policy, dtype=np.int64)
    return lambda state: int(actions[state])


def draw_start_state(mdp, rng):
    if mdp.start_distribution is None:
        return mdp.initial_state
    return int(rng.choice(mdp.n_states, p=mdp.start_distribution))


def sample_episode(mdp, policy, rng, max_steps):
    '''Roll out one episode from the initial state (or a draw of the
    start distribution) following policy. Stops when a terminal state is
    entered or after max_steps steps. Returns the ordered transitions.
    '''
    if max_steps < 1:
        raise ValueError('sample_episode: max_steps must be >= 1')
    policy = as_policy(policy)
    state = draw_start_state(mdp, rng)
    episode = []
    while len(episode) < max_steps and not mdp.is_terminal(state):
        transition = step(mdp, state, policy(state), rng)
        episode.append(transition)
        state = transition.next_state
    return episode


def discounted_return(episode, gamma):
    '''Return sum_t gamma^t r_t of an episode.'''
    rewards = np.array([t.reward for t in episode], dtype=np.float64)
    return float(np.sum(rewards * gamma**np.arange(len(rewards))))


class ReturnDistribution(object):
    '''Discrete law of the discounted return, given as atoms (value,
    probability). Atoms are kept sorted by value.
    '''

    def __init__(self, atoms, tolerance=1e-9):
        atoms = sorted((float(v), float(p)) for v, p in atoms)
        self.values = np.array([v for v, _ in atoms], dtype=np.float64)
        self.probabilities = np.array([p for _, p in atoms], dtype=np.float64)
        if abs(self.probabilities.sum() - 1.) > tolerance:
            raise ValueError('ReturnDistribution: probabilities sum to '
                             '{!r}'.format(self.probabilities.sum()))

    @property
    def atoms(self):
        return list(zip(self.values.tolist(), self.probabilities.tolist()))

    def __len__(self):
        return len(self.values)

    def mean(self):
        return float(np.dot(self.values, self.probabilities))

    def variance(self):
        return float(np.dot((self.values - self.mean())**2,
                            self.probabilities))

    def cdf(self, x):
        return float(self.probabilities[self.values <= x].sum())

    def quantile(self, tau):
        '''Left-continuous inverse of the cdf: the smallest atom value
        whose cumulative probability reaches tau.'''
        cumulative = np.cumsum(self.probabilities)
        k = int(np.searchsorted(cumulative, tau - 1e-12, side='left'))
        return float(self.values[min(k, len(self.values) - 1)])

    def quantiles(self, taus):
        return np.array([self.quantile(tau) for tau in taus])

    def __repr__(self):
        return 'ReturnDistribution({})'.format(self.atoms)


def merge_atoms(values, probabilities, value_resolution):
    '''Sort the atoms and merge neighbours closer than value_resolution
    into one atom at their probability-weighted mean value.'''
    values = np.asarray(values, dtype=np.float64)
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if len(values) == 0:
        return values, probabilities
    order = np.argsort(values, kind='stable')
    values = values[order]
    probabilities = probabilities[order]
    starts = np.concatenate(
        ([0], np.nonzero(np.diff(values) > value_resolution)[0] + 1))
    mass = np.add.reduceat(probabilities, starts)
    weighted = np.add.reduceat(values * probabilities, starts)
    merged_values = np.where(mass > 0, weighted / np.where(mass > 0, mass, 1.),
                             values[starts])
    return merged_values, mass


def default_horizon(mdp, tolerance=1e-4):
    '''Smallest H with gamma^H * max|r| < tolerance (at least 1).'''
    r_max = mdp.max_abs_reward
    if r_max == 0. or mdp.gamma == 0.:
        return 1
    horizon = int(np.ceil(np.log(tolerance / r_max) / np.log(mdp.gamma)))
    while mdp.gamma**horizon * r_max >= tolerance:
        horizon += 1
    return max(horizon, 1)


def exact_return_distribution(mdp, policy, state, action, horizon=None,
                              value_resolution=1e-6, max_atoms=10**6):
    '''Exact law of sum_t gamma^t R_t from (state, action) following the
    deterministic policy afterwards, truncated at horizon steps.

    The trajectory tree is enumerated forward; per step, the atoms
    reaching the same state are merged within value_resolution, atoms
    entering a terminal state are finished. Atoms still alive at the
    horizon are kept with their truncated value.

    Raises ExplosionGuard if more than max_atoms atoms are alive.
    '''
    if not 0 <= int(state) < mdp.n_states:
        raise IndexOutOfRange('state {} out of range'.format(state))
    if not 0 <= int(action) < mdp.n_actions:
        raise IndexOutOfRange('action {} out of range'.format(action))
    if mdp.is_terminal(state):
        return ReturnDistribution([(0., 1.)])
    policy = as_policy(policy)
    if horizon is None:
        horizon = default_horizon(mdp)

    frontier = {int(state): (np.zeros(1), np.ones(1))}
    done_values, done_probs = [], []
    discount = 1.
    for t in range(horizon):
        reached = {}
        for s, (values, probs) in frontier.items():
            a = int(action) if t == 0 else policy(s)
            next_states, kernel_probs, rewards = mdp.transition_probs(s, a)
            for s2, p, r in zip(next_states, kernel_probs, rewards):
                new_values = values + discount * r
                new_probs = probs * p
                if mdp.is_terminal(s2):
                    done_values.append(new_values)
                    done_probs.append(new_probs)
                else:
                    reached.setdefault(int(s2), []).append(
                        (new_values, new_probs))
        discount *= mdp.gamma
        frontier = {}
        n_alive = 0
        for s2, parts in reached.items():
            values = np.concatenate([v for v, _ in parts])
            probs = np.concatenate([p for _, p in parts])
            frontier[s2] = merge_atoms(values, probs, value_resolution)
            n_alive += len(frontier[s2][0])
        if done_values:
            merged = merge_atoms(np.concatenate(done_values),
                                 np.concatenate(done_probs), value_resolution)
            done_values, done_probs = [merged[0]], [merged[1]]
            n_alive += len(merged[0])
        if n_alive > max_atoms:
            raise ExplosionGuard(
                'exact_return_distribution: {:d} atoms after {:d} steps '
                'exceed the limit of {:d}'.format(n_alive, t + 1, max_atoms))
        if not frontier:
            break
    for values, probs in frontier.values():
        done_values.append(values)
        done_probs.append(probs)
    values, probs = merge_atoms(np.concatenate(done_values),
                                np.concatenate(done_probs), value_resolution)
    probs = probs / probs.sum()
    return ReturnDistribution(zip(values, probs), tolerance=1e-6)


def policy_return_distributions(mdp, policy, horizon=None):
    '''Exact return laws of every state following the deterministic
    policy from the first step on, truncated at horizon steps. Returns
    a list with one ReturnDistribution per state, a point mass at 0 for
    terminal states.

    All states are propagated at once: the return of a path is fixed by
    the step t and the reward r of its terminal entry,
    c (1 - gamma^t) / (1 - gamma) + gamma^t r, so every transition
    between non-terminal states must carry the same reward c. Raises
    MdpInvalid otherwise. Paths still alive at the horizon keep their
    truncated value.
    '''
    policy = as_policy(policy)
    if horizon is None:
        horizon = default_horizon(mdp)
    n_states, gamma = mdp.n_states, mdp.gamma
    terminal = mdp.terminal_mask
    alive_kernel = np.zeros((n_states, n_states))
    step_rewards, exits = set(), []
    for s in np.nonzero(~terminal)[0]:
        next_states, probs, rewards = mdp.transition_probs(s, policy(s))
        for s2, p, r in zip(next_states, probs, rewards):
            if terminal[s2]:
                exits.append((s, float(r), p))
            else:
                alive_kernel[s, s2] += p
                step_rewards.add(float(r))
    if len(step_rewards) > 1:
        raise MdpInvalid('policy_return_distributions: transitions between '
                         'non-terminal states carry different rewards '
                         '{}'.format(sorted(step_rewards)))
    c = step_rewards.pop() if step_rewards else 0.
    exit_rewards = sorted({r for _, r, _ in exits})
    exit_mass = np.zeros((n_states, len(exit_rewards)))
    for s, r, p in exits:
        exit_mass[s, exit_rewards.index(r)] += p
    exit_rewards = np.array(exit_rewards)

    alive = np.eye(n_states)
    values, masses = [], []
    discount, accumulated = 1., 0.
    for _ in range(horizon):
        values.append(accumulated + discount * exit_rewards)
        masses.append(alive @ exit_mass)
        alive = alive @ alive_kernel
        accumulated += c * discount
        discount *= gamma
        if not alive.any():
            break
    values.append(np.array([accumulated]))
    masses.append(alive.sum(axis=1, keepdims=True))
    values = np.concatenate(values)
    masses = np.concatenate(masses, axis=1)

    laws = []
    for s in range(n_states):
        if terminal[s]:
            laws.append(ReturnDistribution([(0., 1.)]))
            continue
        keep = masses[s] > 0.
        merged = merge_atoms(values[keep], masses[s, keep], 1e-12)
        probs = merged[1] / merged[1].sum()
        laws.append(ReturnDistribution(zip(merged[0], probs), tolerance=1e-6))
    return laws


def mix_actions(mdp):
    '''Return the random walker version of mdp: for every action the
    kernel row is the uniform mixture of all action rows of the state,
    rewards are mixed with the transition probabilities as weights.
    '''
    entries = []
    for s, a, s2, p, r in mdp.entries():
        for b in range(mdp.n_actions):
            entries.append((s, b, s2, p / mdp.n_actions, r))
    return TabularMdp(mdp.n_states, mdp.n_actions, entries, mdp.gamma,
                      initial_state=mdp.initial_state,
                      terminals=mdp.terminals, coords=mdp.coords,
                      start_distribution=mdp.start_distribution,
                      name=None if mdp.name is None
                      else mdp.name + ' (random walker)')


def mdp_to_dict(mdp):
    '''JSON-ready document of the MDP.'''
    transitions = []
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            next_states, probs, rewards = mdp.transition_probs(s, a)
            transitions.append({
                's': s, 'a': a,
                'next': [{'s2': int(s2), 'p': float(p)}
                         for s2, p in zip(next_states, probs)],
                'rewards': [{'s2': int(s2), 'r': float(r)}
                            for s2, r in zip(next_states, rewards)],
            })
    document = {
        'n_states': mdp.n_states,
        'n_actions': mdp.n_actions,
        'gamma': mdp.gamma,
        'initial_state': mdp.initial_state,
        'terminals': sorted(mdp.terminals),
        'transitions': transitions,
    }
    if mdp.coords is not None:
        document['coords'] = [list(c) for c in mdp.coords]
    if mdp.start_distribution is not None:
        document['start_distribution'] = mdp.start_distribution.tolist()
    if mdp.name is not None:
        document['name'] = mdp.name
    return document


def mdp_from_dict(document):
    entries = []
    for row in document['transitions']:
        rewards = {item['s2']: item['r'] for item in row.get('rewards', [])}
        for item in row['next']:
            entries.append((row['s'], row['a'], item['s2'], item['p'],
                            rewards.get(item['s2'], 0.)))
    return TabularMdp(document['n_states'], document['n_actions'], entries,
                      document['gamma'],
                      initial_state=document['initial_state'],
                      terminals=document['terminals'],
                      coords=document.get('coords'),
                      start_distribution=document.get('start_distribution'),
                      name=document.get('name'))


def save_mdp(mdp, filename):
    with open(filename, 'w') as f:
        json.dump(mdp_to_dict(mdp), f, indent=1, sort_keys=True)


def load_mdp(filename):
    with open(filename, 'r') as f:
        return mdp_from_dict(json.load(f))


def save_return_distribution_csv(distribution, filename):
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['value', 'probability'])
        for value, prob in distribution.atoms:
            writer.writerow([repr(value), repr(prob)])
