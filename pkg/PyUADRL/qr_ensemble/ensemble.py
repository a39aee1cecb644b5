'''
@date:    19/10/2026
@brief:   Anchored ensemble of quantile tables, the approximate posterior
          over return quantiles.

Each of the K members is pulled towards its own anchor, a frozen draw
from the Normal(prior_mean, prior_std) prior, by a quadratic penalty of
strength anchor_strength. Members start at their anchors. All member
values live in one (K, S, A, N) array; the members are views into it.
'''

import hashlib

import numpy as np

from PyUADRL.general import streams
from PyUADRL.general.decorators import check_state_action
from PyUADRL.qr_ensemble.quantiles import QuantileTable, quantile_levels


class AnchoredEnsemble(object):

    def __init__(self, anchors, anchor_strength=0.01, prior_mean=0.,
                 prior_std=1., values=None, allow_single=False):
        anchors = np.array(anchors, dtype=np.float64)
        if anchors.ndim != 4:
            raise ValueError('AnchoredEnsemble: anchors need the shape '
                             '(n_members, n_states, n_actions, n_quantiles)')
        if anchors.shape[0] < (1 if allow_single else 2):
            raise ValueError('AnchoredEnsemble: at least two members '
                             'required, got {:d}'.format(anchors.shape[0]))
        if anchor_strength < 0:
            raise ValueError('AnchoredEnsemble: anchor_strength must be '
                             'non-negative')
        anchors.flags.writeable = False
        self.anchors = anchors
        self.anchor_strength = float(anchor_strength)
        self.prior_mean = float(prior_mean)
        self.prior_std = float(prior_std)
        if values is None:
            values = anchors.copy()
        else:
            values = np.array(values, dtype=np.float64)
            if values.shape != anchors.shape:
                raise ValueError('AnchoredEnsemble: members and anchors '
                                 'differ in shape')
        self.values = values

    @classmethod
    def from_prior(cls, n_states, n_actions, n_quantiles=8, n_members=8,
                   anchor_strength=0.01, prior_mean=0., prior_std=1.,
                   seed=None, rng=None, allow_single=False,
                   point_anchors=False):
        '''Draw the anchors from the prior with the ANCHORS stream of
        seed (or the given rng) and start every member at its anchor.
        With point_anchors one value is drawn per member and cell and
        shared by all its quantiles, so an untrained cell carries no
        aleatoric spread.'''
        if rng is None:
            rng = streams.make_rng(seed, streams.ANCHORS)
        if point_anchors:
            anchors = np.repeat(
                rng.normal(prior_mean, prior_std,
                           size=(n_members, n_states, n_actions, 1)),
                n_quantiles, axis=3)
        else:
            anchors = rng.normal(prior_mean, prior_std,
                                 size=(n_members, n_states, n_actions,
                                       n_quantiles))
        return cls(anchors, anchor_strength=anchor_strength,
                   prior_mean=prior_mean, prior_std=prior_std,
                   allow_single=allow_single)

    @property
    def n_members(self):
        return self.values.shape[0]

    @property
    def n_states(self):
        return self.values.shape[1]

    @property
    def n_actions(self):
        return self.values.shape[2]

    @property
    def n_quantiles(self):
        return self.values.shape[3]

    @property
    def shape(self):
        return self.values.shape

    @property
    def taus(self):
        return quantile_levels(self.n_quantiles)

    @property
    def members(self):
        return [QuantileTable(self.values[k]) for k in range(self.n_members)]

    @property
    def anchor_tables(self):
        return [QuantileTable(self.anchors[k]) for k in range(self.n_members)]

    def anchor_digest(self):
        '''sha256 of the anchor bytes, stable across training.'''
        return hashlib.sha256(
            np.ascontiguousarray(self.anchors).tobytes()).hexdigest()

    def copy(self):
        return AnchoredEnsemble(self.anchors, self.anchor_strength,
                                self.prior_mean, self.prior_std,
                                values=self.values,
                                allow_single=self.n_members < 2)

    def __eq__(self, other):
        return (isinstance(other, AnchoredEnsemble) and
                self.shape == other.shape and
                np.array_equal(self.values, other.values) and
                np.array_equal(self.anchors, other.anchors) and
                self.anchor_strength == other.anchor_strength and
                self.prior_mean == other.prior_mean and
                self.prior_std == other.prior_std)

    def __repr__(self):
        return ('AnchoredEnsemble(K={:d}, S={:d}, A={:d}, N={:d}, '
                'lambda={})'.format(*self.shape, self.anchor_strength))


def _ens_states(ens):
    return ens.n_states


def _ens_actions(ens):
    return ens.n_actions


def q_table(ens):
    '''(S, A) mean over members and quantiles.'''
    return ens.values.mean(axis=(0, 3))


@check_state_action(_ens_states, with_action=False)
def greedy_action(ens, state):
    '''Argmax over actions of the ensemble mean Q, lowest index on
    ties.'''
    return int(np.argmax(ens.values[:, int(state)].mean(axis=(0, 2))))


@check_state_action(_ens_states, _ens_actions)
def q_mean(ens, state, action):
    return float(ens.values[:, int(state), int(action)].mean())


def greedy_policy(ens):
    '''Per-state greedy action array.'''
    return np.argmax(q_table(ens), axis=1)
