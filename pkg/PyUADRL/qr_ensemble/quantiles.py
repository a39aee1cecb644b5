'''
@date:    19/10/2026
@brief:   Quantile levels, the quantile Huber loss and tabular quantile
          functions.

For a residual u = target - estimate, the loss at level tau is

    rho(u) = |tau - 1{u < 0}| * L(u) / kappa

with L the Huber function of width kappa. Its gradient with respect to
the estimate is -|tau - 1{u < 0}| * clip(u / kappa, -1, 1).
'''

import numpy as np

from PyUADRL.general.decorators import check_state_action, memoize


@memoize
def quantile_levels(n_quantiles):
    '''Midpoint levels tau_i = i / (N + 1), i = 1..N (read-only).'''
    n_quantiles = int(n_quantiles)
    if n_quantiles < 1:
        raise ValueError('quantile_levels: need at least one quantile')
    taus = np.arange(1, n_quantiles + 1, dtype=np.float64) / (n_quantiles + 1)
    taus.flags.writeable = False
    return taus


def _asymmetry(u, tau):
    return np.abs(tau - (u < 0))


def huber(u, kappa):
    abs_u = np.abs(u)
    return np.where(abs_u <= kappa, 0.5 * u**2, kappa * (abs_u - 0.5 * kappa))


def quantile_huber_loss(u, tau, kappa):
    '''Huber-smoothed asymmetric check loss, elementwise.'''
    return _asymmetry(u, tau) * huber(u, kappa) / kappa


def quantile_huber_grad(u, tau, kappa):
    '''Gradient of quantile_huber_loss with respect to the estimate
    (u = target - estimate), elementwise.'''
    if np.any(np.asarray(kappa) <= 0):
        raise ValueError('quantile_huber_grad: kappa must be positive')
    return -_asymmetry(u, tau) * np.clip(u / kappa, -1., 1.)


def _table_states(table):
    return table.n_states


def _table_actions(table):
    return table.n_actions


class QuantileTable(object):
    '''Tabular quantile function: values[state, action, i] estimates the
    return quantile at level taus[i].

    The values array may be a view into a larger array (an ensemble
    member); all updates write through it.
    '''

    def __init__(self, values):
        values = np.asarray(values)
        if values.ndim != 3:
            raise ValueError('QuantileTable: values need the shape '
                             '(n_states, n_actions, n_quantiles)')
        self.values = values

    @classmethod
    def zeros(cls, n_states, n_actions, n_quantiles):
        return cls(np.zeros((n_states, n_actions, n_quantiles)))

    @property
    def n_states(self):
        return self.values.shape[0]

    @property
    def n_actions(self):
        return self.values.shape[1]

    @property
    def n_quantiles(self):
        return self.values.shape[2]

    @property
    def taus(self):
        return quantile_levels(self.n_quantiles)

    def q_values(self):
        '''(S, A) mean over the quantiles.'''
        return self.values.mean(axis=2)

    @check_state_action(_table_states, with_action=False)
    def greedy_action(self, state):
        return int(np.argmax(self.values[state].mean(axis=1)))

    def copy(self):
        return QuantileTable(self.values.copy())

    def __eq__(self, other):
        return (isinstance(other, QuantileTable) and
                self.values.shape == other.values.shape and
                np.array_equal(self.values, other.values))

    def __repr__(self):
        return 'QuantileTable({:d} states x {:d} actions x {:d} quantiles)'.format(
            *self.values.shape)
