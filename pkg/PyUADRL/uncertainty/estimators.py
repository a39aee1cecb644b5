'''
@date:    19/10/2026
@brief:   Epistemic / aleatoric decomposition of an anchored ensemble.

For the K x N matrix y[k, i] of member quantile values at (state,
action):

    epistemic = mean_i var_k y[k, i]
    aleatoric = var_i mean_k y[k, i]

with population variances, so that epistemic + aleatoric equals the
population variance of all K * N values. Both estimators are invariant
under member permutations; aleatoric is also invariant under quantile
permutations (crossed quantiles are never sorted).
'''

from dataclasses import dataclass

import numpy as np

from PyUADRL.general.decorators import check_state_action


class DegenerateEnsemble(ValueError):
    '''Raise if the epistemic spread of an ensemble with fewer than two
    members is requested.'''
    def __init__(self, message):
        super(DegenerateEnsemble, self).__init__(message)
        self.message = message


class DegenerateQuantiles(ValueError):
    '''Raise if the aleatoric spread of fewer than two quantiles is
    requested.'''
    def __init__(self, message):
        super(DegenerateQuantiles, self).__init__(message)
        self.message = message


@dataclass(frozen=True)
class UncertaintyEstimate:
    epistemic: float
    aleatoric: float
    state: int
    action: int

    @property
    def total(self):
        return self.epistemic + self.aleatoric


def epistemic_spread(matrix):
    '''Epistemic variance of (..., K, N) value matrices.'''
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[-2] < 2:
        raise DegenerateEnsemble('epistemic variance needs at least two '
                                 'members, got {:d}'.format(matrix.shape[-2]))
    return matrix.var(axis=-2).mean(axis=-1)


def aleatoric_spread(matrix):
    '''Aleatoric variance of (..., K, N) value matrices.'''
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[-1] < 2:
        raise DegenerateQuantiles('aleatoric variance needs at least two '
                                  'quantiles, got {:d}'.format(
                                      matrix.shape[-1]))
    return matrix.mean(axis=-2).var(axis=-1)


def total_spread(matrix):
    '''Population variance over the last two axes.'''
    matrix = np.asarray(matrix, dtype=np.float64)
    return matrix.reshape(matrix.shape[:-2] + (-1,)).var(axis=-1)


def _ens_states(ens):
    return ens.n_states


def _ens_actions(ens):
    return ens.n_actions


@check_state_action(_ens_states, _ens_actions)
def epistemic_variance(ens, state, action):
    return float(epistemic_spread(ens.values[:, int(state), int(action)]))


@check_state_action(_ens_states, _ens_actions)
def aleatoric_variance(ens, state, action):
    return float(aleatoric_spread(ens.values[:, int(state), int(action)]))


@check_state_action(_ens_states, _ens_actions)
def decompose(ens, state, action):
    matrix = ens.values[:, int(state), int(action)]
    return UncertaintyEstimate(float(epistemic_spread(matrix)),
                               float(aleatoric_spread(matrix)),
                               int(state), int(action))


def decompose_all(ens):
    '''Return (epistemic, aleatoric) as (S, A) arrays.'''
    # (K, S, A, N) -> (S, A, K, N)
    matrices = np.moveaxis(ens.values, 0, 2)
    return epistemic_spread(matrices), aleatoric_spread(matrices)
