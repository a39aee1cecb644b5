'''
@date:    19/10/2026
@brief:   Seeded synthetic stand-in for a sparse clinical-style MDP with
          a retrospective behavior dataset.

The last two states are the absorbing outcomes (success, failure), all
others are regular states. Regular states have a power-law popularity:
successors of every (state, action) are drawn weighted by it, and
episodes of the behavior dataset start from it, so a few states are
visited very often and most states rarely.
'''

import csv
from dataclasses import asdict, dataclass

import numpy as np

from PyUADRL.envs.gridworlds import SpecInvalid
from PyUADRL.general import streams
from PyUADRL.mdp.mdp_core import TabularMdp, TransitionBatch, step


@dataclass
class SyntheticClinicalSpec:
    n_states: int = 752
    n_actions: int = 25
    branching: int = 4
    terminal_frac: float = 0.1
    reward_success: float = 1.
    reward_failure: float = -1.
    seed: int = 0
    behavior_temperature: float = 1.
    gamma: float = 0.99
    n_transitions: int = 200000
    max_episode_steps: int = 20
    popularity_exponent: float = 1.2

    @property
    def n_regular(self):
        return self.n_states - 2

    @property
    def success_state(self):
        return self.n_states - 2

    @property
    def failure_state(self):
        return self.n_states - 1

    def validate(self):
        if self.n_regular < 1 or self.n_actions < 1:
            raise SpecInvalid('need at least one regular state and action')
        if not 1 <= self.branching <= self.n_regular:
            raise SpecInvalid('branching {} not in [1, {}]'.format(
                self.branching, self.n_regular))
        if not 0. < self.terminal_frac < 1.:
            raise SpecInvalid('terminal_frac {} not in (0, 1)'.format(
                self.terminal_frac))
        if self.behavior_temperature <= 0.:
            raise SpecInvalid('behavior_temperature must be positive')
        if self.seed is None:
            raise SpecInvalid('seed is mandatory')
        if not 0. <= self.gamma < 1.:
            raise SpecInvalid('gamma {} not in [0, 1)'.format(self.gamma))
        if self.n_transitions < 0 or self.max_episode_steps < 1:
            raise SpecInvalid('n_transitions >= 0 and max_episode_steps >= 1 '
                              'required')
        if self.popularity_exponent < 0.:
            raise SpecInvalid('popularity_exponent must be non-negative')
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, document):
        unknown = set(document) - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecInvalid('unknown clinical spec keys {}'.format(
                sorted(unknown)))
        return cls(**document)


def _popularity(spec, rng):
    '''Power law over a random ranking of the regular states.'''
    ranking = rng.permutation(spec.n_regular)
    weights = np.empty(spec.n_regular)
    weights[ranking] = np.arange(1, spec.n_regular + 1,
                                 dtype=np.float64)**(-spec.popularity_exponent)
    return weights / weights.sum()


def build_clinical_mdp(spec):
    '''Build the MDP part only. Returns (mdp, behavior_probs) with
    behavior_probs the (n_regular, n_actions) softmax behavior policy.
    '''
    spec.validate()
    structure = streams.make_rng(spec.seed, streams.MDP_STRUCTURE)
    S, A, B = spec.n_regular, spec.n_actions, spec.branching
    popularity = _popularity(spec, structure)
    log_popularity = np.log(popularity)
    # per-state prognosis and per-action effect set the success odds
    prognosis = structure.normal(0., 1., size=S)
    effect = structure.normal(0., 0.5, size=A)

    entries = []
    for s in range(S):
        # Gumbel top-k: B distinct successors weighted by popularity
        keys = log_popularity + structure.gumbel(size=(A, S))
        successors = np.argsort(-keys, axis=1, kind='stable')[:, :B]
        probs = structure.dirichlet(np.ones(B), size=A)
        has_outcome = structure.random(A) < spec.terminal_frac
        success_odds = 1. / (1. + np.exp(-(prognosis[s] + effect)))
        success = structure.random(A) < success_odds
        for a in range(A):
            row = successors[a].tolist()
            if has_outcome[a]:
                row[-1] = (spec.success_state if success[a]
                           else spec.failure_state)
            for s2, p in zip(row, probs[a]):
                if s2 == spec.success_state:
                    r = spec.reward_success
                elif s2 == spec.failure_state:
                    r = spec.reward_failure
                else:
                    r = 0.
                entries.append((s, a, s2, p, r))
    for outcome in (spec.success_state, spec.failure_state):
        for a in range(A):
            entries.append((outcome, a, outcome, 1., 0.))

    start = np.zeros(spec.n_states)
    start[:S] = popularity
    mdp = TabularMdp(spec.n_states, A, entries, spec.gamma,
                     initial_state=int(np.argmax(popularity)),
                     terminals=(spec.success_state, spec.failure_state),
                     start_distribution=start,
                     name='synthetic clinical {:d}x{:d}'.format(
                         spec.n_states, A))

    behavior = streams.make_rng(spec.seed, streams.BEHAVIOR_POLICY)
    scores = behavior.normal(0., 1., size=(S, A)) / spec.behavior_temperature
    scores -= scores.max(axis=1, keepdims=True)
    behavior_probs = np.exp(scores)
    behavior_probs /= behavior_probs.sum(axis=1, keepdims=True)
    return mdp, behavior_probs


def roll_out_dataset(mdp, behavior_probs, n_transitions, max_episode_steps,
                     rng):
    '''Collect n_transitions transitions from episodes of the behavior
    policy. Episodes start from the MDP's start distribution and end in
    an outcome state or after max_episode_steps steps.'''
    cumulative = np.cumsum(behavior_probs, axis=1)
    states, actions, rewards, next_states, terminals = [], [], [], [], []
    state, n_episode_steps = None, 0
    while len(states) < n_transitions:
        if (state is None or mdp.is_terminal(state) or
                n_episode_steps == max_episode_steps):
            state = int(rng.choice(mdp.n_states, p=mdp.start_distribution))
            n_episode_steps = 0
        action = int(np.searchsorted(cumulative[state],
                                     rng.random() * cumulative[state, -1],
                                     side='right'))
        action = min(action, mdp.n_actions - 1)
        t = step(mdp, state, action, rng)
        states.append(t.state)
        actions.append(t.action)
        rewards.append(t.reward)
        next_states.append(t.next_state)
        terminals.append(t.terminal)
        state = t.next_state
        n_episode_steps += 1
    return TransitionBatch(states, actions, rewards, next_states, terminals)


def build_synthetic_clinical(spec):
    '''Return (mdp, dataset, visit_counts): the seeded MDP, the behavior
    dataset as a TransitionBatch and the per-state number of dataset
    transitions leaving each state. Same spec, same output.
    '''
    mdp, behavior_probs = build_clinical_mdp(spec)
    dataset = roll_out_dataset(mdp, behavior_probs, spec.n_transitions,
                               spec.max_episode_steps,
                               streams.make_rng(spec.seed, streams.DATASET))
    visit_counts = np.bincount(dataset.states, minlength=mdp.n_states)
    return mdp, dataset, visit_counts


def save_dataset_csv(dataset, filename):
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['s', 'a', 'r', 's2', 'terminal'])
        for t in TransitionBatch.from_transitions(dataset):
            writer.writerow([t.state, t.action, repr(t.reward),
                             t.next_state, int(t.terminal)])
