'''
@date:    19/10/2026
@brief:   Quantile-regression TD learning of an anchored ensemble, online
          (with exploration through a replay buffer) or offline (from a
          fixed dataset).

Every member computes its Bellman targets from its own table and is
updated on its own batch drawn from its own random stream, so members
stay independent and the result does not depend on the order in which
they are updated.
'''

from dataclasses import asdict, dataclass

import numpy as np

from PyUADRL.general import streams
from PyUADRL.general.element import Learner
from PyUADRL.mdp.mdp_core import (EmptyBuffer, TransitionBatch,
                                  draw_start_state, step)
from PyUADRL.qr_ensemble.ensemble import AnchoredEnsemble, greedy_action
from PyUADRL.qr_ensemble.quantiles import (quantile_huber_grad,
                                           quantile_huber_loss,
                                           quantile_levels)


MODES = ('online', 'offline')
EXPLORATIONS = ('epsilon-greedy', 'thompson')


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    huber_kappa: float = 1.
    gamma: float = 0.99
    n_steps: int = 20000
    batch_size: int = 32
    epsilon_start: float = 1.
    epsilon_end: float = 0.05
    # None: first half of training
    epsilon_decay_steps: int = None
    seed: int = 0
    mode: str = 'online'
    # None: constant learning rate
    learning_rate_end: float = None
    n_quantiles: int = 8
    n_members: int = 8
    anchor_strength: float = 0.01
    prior_mean: float = 0.
    prior_std: float = 1.
    point_anchors: bool = False
    buffer_capacity: int = 100000
    exploration: str = 'epsilon-greedy'
    max_episode_steps: int = 200
    learning_starts: int = 0
    log_every: int = 0

    def validate(self):
        '''Raise ValueError on the first violated constraint.'''
        checks = [
            (self.learning_rate > 0, 'learning_rate must be positive'),
            (self.learning_rate_end is None or self.learning_rate_end > 0,
             'learning_rate_end must be positive'),
            (self.huber_kappa > 0, 'huber_kappa must be positive'),
            (0. <= self.gamma < 1., 'gamma must lie in [0, 1)'),
            (self.n_steps >= 0, 'n_steps must be non-negative'),
            (self.batch_size >= 1, 'batch_size must be >= 1'),
            (0. <= self.epsilon_start <= 1. and 0. <= self.epsilon_end <= 1.,
             'epsilon values must lie in [0, 1]'),
            (self.epsilon_decay_steps is None or self.epsilon_decay_steps >= 0,
             'epsilon_decay_steps must be non-negative'),
            (self.seed is not None, 'seed is mandatory'),
            (self.mode in MODES, 'mode must be one of {}'.format(MODES)),
            (self.exploration in EXPLORATIONS,
             'exploration must be one of {}'.format(EXPLORATIONS)),
            (self.n_quantiles >= 1, 'n_quantiles must be >= 1'),
            (self.n_members >= 1, 'n_members must be >= 1'),
            (self.anchor_strength >= 0, 'anchor_strength must be >= 0'),
            (self.prior_std >= 0, 'prior_std must be >= 0'),
            (self.buffer_capacity >= 1, 'buffer_capacity must be >= 1'),
            (self.max_episode_steps >= 1, 'max_episode_steps must be >= 1'),
            (self.learning_starts >= 0, 'learning_starts must be >= 0'),
            (self.log_every >= 0, 'log_every must be >= 0'),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError('TrainConfig: ' + message)
        return self

    def epsilon(self, step_index):
        '''Linear decay from epsilon_start to epsilon_end.'''
        decay_steps = (self.n_steps // 2 if self.epsilon_decay_steps is None
                       else self.epsilon_decay_steps)
        if decay_steps == 0 or step_index >= decay_steps:
            return self.epsilon_end
        frac = step_index / decay_steps
        return self.epsilon_start + frac * (self.epsilon_end -
                                            self.epsilon_start)

    def learning_rate_at(self, step_index):
        '''Linear decay from learning_rate to learning_rate_end over
        n_steps.'''
        if self.learning_rate_end is None or self.n_steps <= 1:
            return self.learning_rate
        frac = min(step_index / (self.n_steps - 1), 1.)
        return self.learning_rate + frac * (self.learning_rate_end -
                                            self.learning_rate)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, document):
        unknown = set(document) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError('TrainConfig: unknown keys {}'.format(
                sorted(unknown)))
        return cls(**document)


def td_targets(member, t, gamma, policy=None):
    '''N Bellman targets of transition t for one member: the reward
    alone if t is terminal, else r + gamma * the member's quantiles at
    (next_state, a*) with a* its greedy action at next_state, or
    policy[next_state] when a per-state policy is given.'''
    n_quantiles = member.values.shape[-1]
    if t.terminal:
        return np.full(n_quantiles, float(t.reward))
    if policy is None:
        a_star = member.greedy_action(t.next_state)
    else:
        a_star = int(policy[t.next_state])
    return t.reward + gamma * member.values[t.next_state, a_star]


def _quantile_td_update(values, anchors, members, batch, learning_rate,
                        kappa, gamma, anchor_strength, with_loss=False,
                        policy=None):
    '''Apply one update in place to values (K, S, A, N) for the
    transitions of batch, the k-th of them belonging to member
    members[k]. Returns the mean quantile loss if with_loss. The targets
    bootstrap from the greedy action of each member, or from
    policy[next_state] if policy is given.

    Targets and residuals use the table before the update. A cell hit
    several times takes the mean of its per-transition gradients, the
    anchor penalty is applied once per cell.
    '''
    K, S, A, N = values.shape
    taus = quantile_levels(N)
    k, s, a = members, batch.states, batch.actions
    next_quantile_values = values[k, batch.next_states]
    if policy is None:
        a_star = np.argmax(next_quantile_values.mean(axis=2), axis=1)
    else:
        a_star = policy[batch.next_states]
    bootstrap = next_quantile_values[np.arange(len(k)), a_star]
    rewards = batch.rewards[:, None]
    targets = np.where(batch.terminals[:, None], rewards,
                       rewards + gamma * bootstrap)

    current = values[k, s, a]
    # residuals u[n, i, j] = target_j - value_i
    u = targets[:, None, :] - current[:, :, None]
    grads = quantile_huber_grad(u, taus[None, :, None], kappa).mean(axis=2)

    keys = (k * S + s) * A + a
    _, first, inverse, counts = np.unique(keys, return_index=True,
                                          return_inverse=True,
                                          return_counts=True)
    summed = np.zeros((len(first), N))
    np.add.at(summed, inverse.ravel(), grads)
    ck, cs, ca = k[first], s[first], a[first]
    cell_values = values[ck, cs, ca]
    step_ = (summed / counts[:, None] +
             2. * anchor_strength * (cell_values - anchors[ck, cs, ca]))
    values[ck, cs, ca] = cell_values - learning_rate * step_
    if with_loss:
        return float(quantile_huber_loss(u, taus[None, :, None], kappa).mean())
    return None


def update_member(member, anchor, batch, cfg, learning_rate=None,
                  anchor_strength=None, policy=None):
    '''One quantile-regression TD step of a single member (a
    QuantileTable) towards its batch, regularised towards anchor.
    learning_rate and anchor_strength default to the values of cfg, a
    given per-state policy replaces the greedy bootstrap action.
    Returns the member, updated in place.
    '''
    batch = TransitionBatch.from_transitions(batch)
    if len(batch) == 0:
        raise ValueError('update_member: empty batch')
    if learning_rate is None:
        learning_rate = cfg.learning_rate
    if anchor_strength is None:
        anchor_strength = cfg.anchor_strength
    anchor_values = getattr(anchor, 'values', anchor)
    _quantile_td_update(member.values[None], np.asarray(anchor_values)[None],
                        np.zeros(len(batch), dtype=np.int64), batch,
                        learning_rate, cfg.huber_kappa, cfg.gamma,
                        anchor_strength,
                        policy=None if policy is None else np.asarray(policy))
    return member


def _concatenate(batches):
    return TransitionBatch(
        np.concatenate([b.states for b in batches]),
        np.concatenate([b.actions for b in batches]),
        np.concatenate([b.rewards for b in batches]),
        np.concatenate([b.next_states for b in batches]),
        np.concatenate([b.terminals for b in batches]))


class Trainer(Learner):
    '''Train an AnchoredEnsemble on env through buffer.

    Online mode acts on env with epsilon-greedy exploration on the
    ensemble mean Q (or follows one member sampled per episode in the
    'thompson' exploration mode), pushes every transition through the
    buffer's inclusion filter and updates all members each step.
    Offline mode never touches env and updates the members from the
    fixed buffer for n_steps.

    Given a per-state policy (an action array), the members learn the
    return distribution of that policy instead of the greedy one: the
    targets bootstrap from policy[next_state] and online mode acts with
    policy in place of the greedy action, still exploring with
    probability epsilon.

    The quantities step, epsilon, learning_rate, td_loss and
    buffer_size are exposed for monitors.
    '''

    def __init__(self, env, buffer, cfg, ensemble=None, monitor=None,
                 policy=None, *args, **kwargs):
        cfg.validate()
        self.env = env
        self.buffer = buffer
        self.cfg = cfg
        if ensemble is None:
            ensemble = AnchoredEnsemble.from_prior(
                env.n_states, env.n_actions, cfg.n_quantiles, cfg.n_members,
                anchor_strength=cfg.anchor_strength,
                prior_mean=cfg.prior_mean, prior_std=cfg.prior_std,
                seed=cfg.seed, allow_single=cfg.n_members < 2,
                point_anchors=cfg.point_anchors)
        elif ensemble.shape[1:3] != (env.n_states, env.n_actions):
            raise ValueError('Trainer: ensemble does not match the '
                             'environment')
        if policy is not None:
            policy = np.asarray(policy, dtype=np.int64)
            if (policy.shape != (env.n_states,) or policy.min() < 0 or
                    policy.max() >= env.n_actions):
                raise ValueError('Trainer: policy needs one valid action '
                                 'per state')
            if cfg.exploration == 'thompson':
                raise ValueError('Trainer: thompson exploration follows the '
                                 'ensemble, not a given policy')
        self.policy = policy
        self.ensemble = ensemble
        self.monitor = monitor

        self._member_rngs = [
            streams.make_rng(cfg.seed, streams.MEMBER_BATCHES, m)
            for m in range(ensemble.n_members)]
        self._member_ids = None
        self.step = 0
        self.epsilon = cfg.epsilon_start if cfg.mode == 'online' else 0.
        self.learning_rate = cfg.learning_rate
        self.td_loss = None
        self.n_episodes = 0
        self.n_updates = 0

    @property
    def buffer_size(self):
        return len(self.buffer)

    def _update_all(self, with_loss):
        K = self.ensemble.n_members
        batch_size = self.cfg.batch_size
        batches = [self.buffer.sample_batch(batch_size, self._member_rngs[m])
                   for m in range(K)]
        if self._member_ids is None:
            self._member_ids = np.repeat(np.arange(K), batch_size)
        loss = _quantile_td_update(
            self.ensemble.values, self.ensemble.anchors, self._member_ids,
            _concatenate(batches), self.learning_rate, self.cfg.huber_kappa,
            self.cfg.gamma, self.ensemble.anchor_strength,
            with_loss=with_loss, policy=self.policy)
        self.n_updates += 1
        return loss

    def _wants_loss(self):
        return self.monitor is not None or (
            self.cfg.log_every and (self.step + 1) % self.cfg.log_every == 0)

    def _report(self):
        if self.monitor is not None:
            self.monitor.dump(self)
        if self.cfg.log_every and (self.step + 1) % self.cfg.log_every == 0:
            self.prints(
                'step {:d}/{:d}: epsilon {:.4f}, learning rate {:.5f}, '
                'quantile loss {}, buffer {:d}'.format(
                    self.step + 1, self.cfg.n_steps, self.epsilon,
                    self.learning_rate,
                    'n/a' if self.td_loss is None
                    else '{:.6f}'.format(self.td_loss),
                    len(self.buffer)))

    def run(self):
        '''Train for cfg.n_steps steps and return the ensemble.'''
        if self.cfg.mode == 'offline':
            self._run_offline()
        else:
            self._run_online()
        if self.monitor is not None and hasattr(self.monitor, 'close'):
            self.monitor.close()
        return self.ensemble

    def _run_offline(self):
        if len(self.buffer) == 0:
            raise EmptyBuffer('offline training needs a filled replay '
                              'buffer')
        for self.step in range(self.cfg.n_steps):
            self.learning_rate = self.cfg.learning_rate_at(self.step)
            self.td_loss = self._update_all(self._wants_loss())
            self._report()

    def _run_online(self):
        cfg, env = self.cfg, self.env
        env_rng = streams.make_rng(cfg.seed, streams.ENVIRONMENT)
        explore_rng = streams.make_rng(cfg.seed, streams.EXPLORATION)
        replay_rng = streams.make_rng(cfg.seed, streams.REPLAY)
        thompson = cfg.exploration == 'thompson'

        state, episode_steps, member = None, 0, None
        warned_empty = False
        for self.step in range(cfg.n_steps):
            if state is None:
                state = draw_start_state(env, env_rng)
                episode_steps = 0
                self.n_episodes += 1
                if thompson:
                    member = int(explore_rng.integers(
                        self.ensemble.n_members))
                if env.is_terminal(state):
                    self.warns('episode starts in a terminal state')
                    state = None
                    continue
            self.epsilon = cfg.epsilon(self.step)
            self.learning_rate = cfg.learning_rate_at(self.step)

            if thompson:
                action = int(np.argmax(
                    self.ensemble.values[member, state].mean(axis=1)))
            elif explore_rng.random() < self.epsilon:
                action = int(explore_rng.integers(env.n_actions))
            elif self.policy is not None:
                action = int(self.policy[state])
            else:
                action = greedy_action(self.ensemble, state)

            transition = step(env, state, action, env_rng)
            self.buffer.push(transition, replay_rng)

            self.td_loss = None
            if self.step >= cfg.learning_starts:
                if len(self.buffer) > 0:
                    self.td_loss = self._update_all(self._wants_loss())
                elif not warned_empty:
                    self.warns('replay buffer is empty, skipping update')
                    warned_empty = True

            episode_steps += 1
            state = transition.next_state
            if transition.terminal or episode_steps >= cfg.max_episode_steps:
                state = None
            self._report()


def train(env, buffer, cfg, ensemble=None, monitor=None, printer=None,
          policy=None):
    '''Train an anchored ensemble, see Trainer. Deterministic given
    cfg.seed.'''
    return Trainer(env, buffer, cfg, ensemble=ensemble, monitor=monitor,
                   policy=policy, printer=printer).run()
