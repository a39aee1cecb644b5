'''
@date:    19/10/2026
@brief:   Per-state uncertainty maps, their normalisation, the random
          walker aleatoric reference and the visitation / epistemic
          rank correlation.
'''

from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from PyUADRL.mdp.mdp_core import (draw_start_state, mix_actions,
                                  policy_return_distributions, step)
from PyUADRL.qr_ensemble.ensemble import greedy_policy
from PyUADRL.qr_ensemble.quantiles import quantile_levels
from PyUADRL.uncertainty.estimators import (UncertaintyEstimate,
                                            aleatoric_spread, decompose_all,
                                            epistemic_spread)


RULES = ('greedy', 'fixed', 'behavior')
REFERENCE_FLOOR = 1e-8


@dataclass(eq=False)
class UncertaintyMap:
    '''Per-state epistemic and aleatoric variance evaluated at the action
    picked by rule. Raw values are always kept; the *_norm arrays are
    filled by normalize (minmax), aleatoric_scaled by apply_reference.
    '''
    rule: str
    actions: np.ndarray
    terminal: np.ndarray
    epistemic_raw: np.ndarray
    aleatoric_raw: np.ndarray
    normalization: str = 'none'
    epistemic_norm: np.ndarray = None
    aleatoric_norm: np.ndarray = None
    reference_scale: np.ndarray = None
    aleatoric_scaled: np.ndarray = None
    coords: list = None

    @property
    def n_states(self):
        return len(self.actions)

    @property
    def epistemic(self):
        '''Displayed epistemic values: normalised if available.'''
        return (self.epistemic_raw if self.epistemic_norm is None
                else self.epistemic_norm)

    @property
    def aleatoric(self):
        return (self.aleatoric_raw if self.aleatoric_norm is None
                else self.aleatoric_norm)

    @property
    def estimates(self):
        return [UncertaintyEstimate(float(e), float(a), s, int(act))
                for s, (e, a, act) in enumerate(zip(
                    self.epistemic_raw, self.aleatoric_raw, self.actions))]


def most_frequent_actions(dataset, n_states, n_actions):
    '''Most frequent dataset action per state (lowest index on ties),
    -1 for states without data.'''
    counts = np.zeros((n_states, n_actions), dtype=np.int64)
    np.add.at(counts, (dataset.states, dataset.actions), 1)
    actions = np.argmax(counts, axis=1)
    actions[counts.sum(axis=1) == 0] = -1
    return actions


def state_map(ens, mdp, rule='greedy', action=None, dataset=None):
    '''Evaluate both variances per state at the action chosen by rule:

        - 'greedy': the ensemble's greedy action
        - 'fixed': the given action for every state
        - 'behavior': the most frequent action of dataset in the state,
          greedy where the dataset never visits it

    Terminal states are evaluated like any other and flagged.
    '''
    if (ens.n_states, ens.n_actions) != (mdp.n_states, mdp.n_actions):
        raise ValueError('state_map: ensemble and MDP differ in shape')
    if rule not in RULES:
        raise ValueError('state_map: unknown rule {!r}, use one of '
                         '{}'.format(rule, RULES))
    actions = greedy_policy(ens)
    if rule == 'fixed':
        if action is None or not 0 <= int(action) < mdp.n_actions:
            raise ValueError('state_map: rule fixed needs a valid action')
        actions = np.full(mdp.n_states, int(action), dtype=np.int64)
    elif rule == 'behavior':
        if dataset is None:
            raise ValueError('state_map: rule behavior needs a dataset')
        frequent = most_frequent_actions(dataset, mdp.n_states,
                                         mdp.n_actions)
        actions = np.where(frequent >= 0, frequent, actions)
    states = np.arange(mdp.n_states)
    # (K, S, N) -> (S, K, N)
    matrices = np.moveaxis(ens.values[:, states, actions], 0, 1)
    return UncertaintyMap(rule=rule, actions=actions,
                          terminal=mdp.terminal_mask,
                          epistemic_raw=epistemic_spread(matrices),
                          aleatoric_raw=aleatoric_spread(matrices),
                          coords=mdp.coords)


def minmax(values):
    '''Scale to [0, 1]; a constant array maps to zeros.'''
    values = np.asarray(values, dtype=np.float64)
    low, high = values.min(), values.max()
    if high - low <= 0.:
        return np.zeros_like(values)
    return (values - low) / (high - low)


def normalize(umap):
    '''Return a copy of umap with both components min-max scaled
    independently across all states.'''
    if umap.n_states == 0:
        raise ValueError('normalize: empty map')
    return replace(umap, normalization='minmax',
                   epistemic_norm=minmax(umap.epistemic_raw),
                   aleatoric_norm=minmax(umap.aleatoric_raw))


def random_walker_reference(mdp, n_quantiles, horizon=None):
    '''Per-state aleatoric variance of the random walker version of mdp
    (every action behaves like a uniformly random one): the variance
    across the n_quantiles quantile levels of the walker's exact return
    law. Terminal states get 0.'''
    walker = mix_actions(mdp)
    taus = quantile_levels(n_quantiles)
    laws = policy_return_distributions(
        walker, np.zeros(walker.n_states, dtype=np.int64), horizon=horizon)
    quantiles = np.array([law.quantiles(taus) for law in laws])
    return aleatoric_spread(quantiles[:, None, :])


def apply_reference(umap, reference):
    '''Return a copy of umap carrying reference as reference_scale and
    the element-wise scaled aleatoric values raw / max(reference, 1e-8).
    '''
    reference = np.asarray(reference, dtype=np.float64)
    if reference.shape != umap.aleatoric_raw.shape:
        raise ValueError('apply_reference: reference does not match the '
                         'map')
    return replace(umap, reference_scale=reference,
                   aleatoric_scaled=umap.aleatoric_raw /
                   np.maximum(reference, REFERENCE_FLOOR))


Correlation = namedtuple('Correlation',
                         ['visits', 'epistemic', 'rho', 'visited',
                          'unvisited'])


def spearman(x, y):
    '''Spearman rank correlation, 0 for degenerate inputs (fewer than
    two points or a constant variable).'''
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 2 or np.all(x == x[0]) or np.all(y == y[0]):
        return 0.
    rho = stats.spearmanr(x, y)[0]
    return 0. if np.isnan(rho) else float(rho)


def visitation_epistemic_correlation(ens, mdp, n_episodes, rng,
                                     exploration=0.05, max_steps=200):
    '''Roll out the greedy policy with exploration probability
    exploration for n_episodes episodes, count the visits per state and
    rank-correlate them with the per-state greedy epistemic variance
    over the visited states.

    Returns a Correlation(visits, epistemic, rho, visited, unvisited)
    with per-state arrays and the index arrays of visited and unvisited
    non-terminal states.
    '''
    policy = greedy_policy(ens)
    visits = np.zeros(mdp.n_states, dtype=np.int64)
    for _ in range(int(n_episodes)):
        state = draw_start_state(mdp, rng)
        for _ in range(max_steps):
            if mdp.is_terminal(state):
                break
            visits[state] += 1
            if rng.random() < exploration:
                action = int(rng.integers(mdp.n_actions))
            else:
                action = int(policy[state])
            state = step(mdp, state, action, rng).next_state
    epistemic = state_map(ens, mdp).epistemic_raw
    visited = np.nonzero(visits > 0)[0]
    unvisited = np.nonzero((visits == 0) & ~mdp.terminal_mask)[0]
    rho = spearman(visits[visited], epistemic[visited])
    return Correlation(visits, epistemic, rho, visited, unvisited)


def uncertainty_histogram(ens, mdp, bins=20):
    '''Histograms of both components over all non-terminal state-action
    pairs: {'epistemic': (counts, edges), 'aleatoric': (counts, edges)}.
    '''
    epistemic, aleatoric = decompose_all(ens)
    live = ~mdp.terminal_mask
    return {'epistemic': np.histogram(epistemic[live].ravel(), bins=bins),
            'aleatoric': np.histogram(aleatoric[live].ravel(), bins=bins)}
