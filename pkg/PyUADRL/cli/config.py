'''
@date:    19/10/2026
@brief:   Experiment configuration: the ExperimentConfig record, config
          files (JSON or TOML) and the built-in presets of the three
          replication experiments.
'''

import json
import os
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from PyUADRL.envs.clinical import SyntheticClinicalSpec
from PyUADRL.envs.gridworlds import RIGHT, GridSpec
from PyUADRL.qr_ensemble.training import TrainConfig


class ConfigInvalid(ValueError):
    '''Raise if an experiment configuration cannot be run as given.'''
    def __init__(self, message):
        super(ConfigInvalid, self).__init__(message)
        self.message = message


EXPERIMENTS = ('open-grid-starved', 'cliff-wind', 'synthetic-clinical')
GRID_EXPERIMENTS = ('open-grid-starved', 'cliff-wind')
EMITS = ('map', 'scatter', 'checkpoint', 'ascii', 'histogram', 'dataset',
         'mdp', 'monitor')
MAP_RULES = ('greedy', 'fixed', 'behavior')
TARGET_POLICIES = ('along-edge',)
FIGURES = {'1a': 'open-grid-starved', '1b': 'cliff-wind',
           '2b': 'synthetic-clinical'}


@dataclass
class ExperimentConfig:
    experiment: str
    env: object
    train: TrainConfig = field(default_factory=TrainConfig)
    outputs: str = 'pyuadrl_run'
    emit: tuple = ('map',)
    # (row, col) of the grid cell whose transitions are filtered
    starve_cell: tuple = None
    starve_prob: float = 0.01
    reference: bool = False
    rollout_episodes: int = 1000
    map_rule: str = 'greedy'
    # action read by map_rule 'fixed'
    map_action: int = None
    # None: learn the greedy policy; 'along-edge': evaluate
    # along_edge_policy of the grid
    target_policy: str = None
    histogram_bins: int = 20

    def __post_init__(self):
        self.emit = tuple(sorted(set(self.emit)))
        if self.starve_cell is not None:
            self.starve_cell = tuple(int(x) for x in self.starve_cell)

    @property
    def seed(self):
        return self.train.seed

    @property
    def is_grid(self):
        return self.experiment in GRID_EXPERIMENTS

    def validate(self):
        '''Raise ConfigInvalid on the first problem found.'''
        if self.experiment not in EXPERIMENTS:
            raise ConfigInvalid('unknown experiment {!r}, use one of '
                                '{}'.format(self.experiment, EXPERIMENTS))
        if self.is_grid and not isinstance(self.env, GridSpec):
            raise ConfigInvalid('{} needs a grid env spec'.format(
                self.experiment))
        if (not self.is_grid and
                not isinstance(self.env, SyntheticClinicalSpec)):
            raise ConfigInvalid('synthetic-clinical needs a clinical env '
                                'spec')
        if self.train.seed is None:
            raise ConfigInvalid('a seed is mandatory')
        try:
            self.env.validate()
            self.train.validate()
        except ValueError as err:
            raise ConfigInvalid(str(err))
        unknown = set(self.emit) - set(EMITS)
        if unknown:
            raise ConfigInvalid('unknown emit entries {}'.format(
                sorted(unknown)))
        if not self.is_grid:
            if self.train.mode != 'offline':
                raise ConfigInvalid('synthetic-clinical trains offline')
            if 'ascii' in self.emit:
                raise ConfigInvalid('ascii rendering needs a grid experiment')
            if self.starve_cell is not None:
                raise ConfigInvalid('starve_cell needs a grid experiment')
        elif self.train.mode != 'online':
            raise ConfigInvalid('grid experiments train online')
        if self.starve_cell is not None:
            if not self.env.in_band(self.starve_cell):
                raise ConfigInvalid('starve_cell {} outside the grid'.format(
                    self.starve_cell))
        if not 0. <= self.starve_prob <= 1.:
            raise ConfigInvalid('starve_prob must lie in [0, 1]')
        if self.rollout_episodes < 1 or self.histogram_bins < 1:
            raise ConfigInvalid('rollout_episodes and histogram_bins must be '
                                'positive')
        if self.map_rule not in MAP_RULES:
            raise ConfigInvalid('map_rule must be one of {}'.format(MAP_RULES))
        if self.map_rule == 'fixed':
            n_actions = 4 if self.is_grid else self.env.n_actions
            if (self.map_action is None or
                    not 0 <= int(self.map_action) < n_actions):
                raise ConfigInvalid('map_rule fixed needs a map_action in '
                                    '[0, {:d})'.format(n_actions))
        if self.map_rule == 'behavior' and self.is_grid:
            raise ConfigInvalid('map_rule behavior needs a dataset')
        if self.target_policy is not None:
            if self.target_policy not in TARGET_POLICIES:
                raise ConfigInvalid('target_policy must be one of '
                                    '{}'.format(TARGET_POLICIES))
            if not self.is_grid:
                raise ConfigInvalid('target_policy needs a grid experiment')
            if self.train.exploration == 'thompson':
                raise ConfigInvalid('target_policy needs epsilon-greedy '
                                    'exploration')
        return self

    def with_overrides(self, seed=None, outputs=None, n_steps=None):
        '''Copy with a new root seed (also seeding the clinical
        generator), output directory or training length.'''
        train, env, config = self.train, self.env, self
        if seed is not None:
            train = replace(train, seed=int(seed))
            if isinstance(env, SyntheticClinicalSpec):
                env = replace(env, seed=int(seed))
        if n_steps is not None:
            train = replace(train, n_steps=int(n_steps))
        config = replace(config, train=train, env=env)
        if outputs is not None:
            config = replace(config, outputs=str(outputs))
        return config

    def to_dict(self):
        return {
            'experiment': self.experiment,
            'env': self.env.to_dict(),
            'train': self.train.to_dict(),
            'outputs': self.outputs,
            'emit': list(self.emit),
            'starve_cell': (None if self.starve_cell is None
                            else list(self.starve_cell)),
            'starve_prob': self.starve_prob,
            'reference': self.reference,
            'rollout_episodes': self.rollout_episodes,
            'map_rule': self.map_rule,
            'map_action': self.map_action,
            'target_policy': self.target_policy,
            'histogram_bins': self.histogram_bins,
        }

    @classmethod
    def from_dict(cls, document):
        document = dict(document)
        try:
            experiment = document.pop('experiment')
        except KeyError:
            raise ConfigInvalid('config names no experiment')
        if experiment not in EXPERIMENTS:
            raise ConfigInvalid('unknown experiment {!r}'.format(experiment))
        env_doc = document.pop('env', {})
        train_doc = dict(document.pop('train', {}))
        unknown = set(document) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigInvalid('unknown config keys {}'.format(
                sorted(unknown)))
        try:
            if experiment in GRID_EXPERIMENTS:
                base = (GridSpec.open_7x7() if experiment == GRID_EXPERIMENTS[0]
                        else GridSpec.cliff_2x6())
                env = replace(base, **env_doc) if env_doc else base
                train_doc.setdefault('gamma', env.gamma)
            else:
                env = SyntheticClinicalSpec.from_dict(env_doc)
                train_doc.setdefault('mode', 'offline')
                train_doc.setdefault('gamma', env.gamma)
            train = TrainConfig.from_dict(train_doc)
        except (TypeError, ValueError) as err:
            raise ConfigInvalid(str(err))
        return cls(experiment=experiment, env=env, train=train, **document)


def load_config(filename):
    '''Read an ExperimentConfig from a .json or .toml file. Unreadable or
    malformed files raise ConfigInvalid.'''
    extension = os.path.splitext(filename)[1].lower()
    try:
        if extension == '.toml':
            with open(filename, 'rb') as f:
                document = tomllib.load(f)
        else:
            with open(filename, 'r') as f:
                document = json.load(f)
    except OSError as err:
        raise ConfigInvalid('cannot read config {}: {}'.format(filename, err))
    except (ValueError, tomllib.TOMLDecodeError) as err:
        raise ConfigInvalid('malformed config {}: {}'.format(filename, err))
    return ExperimentConfig.from_dict(document)


def preset(figure, seed, outputs=None):
    '''Built-in configuration of one replication experiment:

        - '1a': 7x7 open grid, transitions out of (4, 4) kept with 1%
          probability, random walker aleatoric reference, point anchors
          drawn from Normal(1, 0.25)
        - '1b': 2x6 cliff grid with 20% wind, the members learn the
          return distribution of walking along the cliff edge and the
          map reads the action 'right'
        - '2b': 752 x 25 synthetic clinical MDP, offline training on a
          200000-transition behavior dataset, 5000 rollout episodes
    '''
    if figure not in FIGURES:
        raise ConfigInvalid('unknown figure {!r}, use one of {}'.format(
            figure, sorted(FIGURES)))
    if outputs is None:
        outputs = 'pyuadrl_{}_seed{}'.format(figure, seed)
    if figure == '1a':
        config = ExperimentConfig(
            experiment='open-grid-starved', env=GridSpec.open_7x7(),
            train=TrainConfig(learning_rate=0.05, learning_rate_end=0.005,
                              gamma=0.99, n_steps=30000,
                              max_episode_steps=100, prior_mean=1.,
                              prior_std=0.25, point_anchors=True),
            emit=('map', 'ascii', 'checkpoint', 'scatter'),
            starve_cell=(4, 4), starve_prob=0.01, reference=True,
            rollout_episodes=200)
    elif figure == '1b':
        # the agent walks the cliff edge and only rarely strays upwards
        config = ExperimentConfig(
            experiment='cliff-wind', env=GridSpec.cliff_2x6(),
            train=TrainConfig(learning_rate=0.05, learning_rate_end=0.005,
                              gamma=0.99, n_steps=30000,
                              max_episode_steps=100, epsilon_start=0.0005,
                              epsilon_end=0.0005, point_anchors=True),
            emit=('map', 'ascii', 'checkpoint'),
            target_policy='along-edge', map_rule='fixed', map_action=RIGHT)
    else:
        config = ExperimentConfig(
            experiment='synthetic-clinical', env=SyntheticClinicalSpec(),
            train=TrainConfig(learning_rate=0.05, learning_rate_end=0.005,
                              gamma=0.99, n_steps=20000, mode='offline',
                              buffer_capacity=200000),
            emit=('map', 'scatter', 'histogram', 'checkpoint'),
            rollout_episodes=5000)
    return config.with_overrides(seed=seed, outputs=outputs)
