'''
@date:    19/10/2026
@brief:   Expected-value oracles for TabularMdp: value iteration and
          exact policy evaluation.
'''

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from PyUADRL.mdp.mdp_core import as_policy


def greedy_from_q(q):
    '''Greedy action per state, lowest index on ties.'''
    return np.argmax(q, axis=1)


def _backup(mdp, expected_rewards, v):
    return expected_rewards + mdp.gamma * (mdp.kernel @ v).reshape(
        mdp.n_states, mdp.n_actions)


def value_iteration(mdp, tol=1e-10, max_iter=100000):
    '''Return (V, Q, greedy policy) of the optimal control problem.
    Iterates the Bellman optimality backup until the sup-norm change
    drops below tol.
    '''
    expected_rewards = mdp.expected_rewards()
    v = np.zeros(mdp.n_states)
    for _ in range(max_iter):
        q = _backup(mdp, expected_rewards, v)
        v_new = q.max(axis=1)
        delta = np.max(np.abs(v_new - v))
        v = v_new
        if delta < tol:
            break
    q = _backup(mdp, expected_rewards, v)
    return v, q, greedy_from_q(q)


def policy_evaluation(mdp, policy):
    '''Return (V, Q) of a deterministic policy (callable or per-state
    action array) by solving (I - gamma P_pi) V = r_pi.
    '''
    policy = as_policy(policy)
    actions = np.array([policy(s) for s in range(mdp.n_states)],
                       dtype=np.int64)
    rows = np.arange(mdp.n_states) * mdp.n_actions + actions
    expected_rewards = mdp.expected_rewards()
    p_pi = mdp.kernel[rows]
    r_pi = expected_rewards[np.arange(mdp.n_states), actions]
    system = sparse.identity(mdp.n_states, format='csc') - mdp.gamma * p_pi
    v = np.atleast_1d(spsolve(sparse.csc_matrix(system), r_pi))
    return v, _backup(mdp, expected_rewards, v)
