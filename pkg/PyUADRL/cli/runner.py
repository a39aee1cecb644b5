'''
@date:    19/10/2026
@brief:   Experiment runner: builds the environment of an
          ExperimentConfig, trains, evaluates the uncertainty maps and
          writes artifacts, run log and manifest to the output directory.
'''

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from PyUADRL import __version__
from PyUADRL.cli.checkpoint import ensemble_digest, export_checkpoint
from PyUADRL.cli.exports import (sha256_file, write_histogram_csv,
                                 write_map_csv, write_scatter_csv)
from PyUADRL.cli.render import render_ascii
from PyUADRL.envs.clinical import build_synthetic_clinical, save_dataset_csv
from PyUADRL.envs.gridworlds import (along_edge_policy, build_cliff_grid,
                                     build_open_grid, grid_index, starve)
from PyUADRL.general import streams
from PyUADRL.general.element import Printing
from PyUADRL.general.printers import FilePrinter, TeePrinter
from PyUADRL.mdp.mdp_core import save_mdp
from PyUADRL.mdp.replay import ReplayBuffer
from PyUADRL.monitors.monitors import TrainingMonitor
from PyUADRL.qr_ensemble.training import Trainer
from PyUADRL.uncertainty.maps import (apply_reference, normalize,
                                      random_walker_reference, state_map,
                                      uncertainty_histogram,
                                      visitation_epistemic_correlation)


class OutputIOError(OSError):
    '''Raise if the output directory or an artifact cannot be written.'''
    def __init__(self, message):
        super(OutputIOError, self).__init__(message)
        self.message = message


class ManifestMismatch(RuntimeError):
    '''Raise if an artifact listed in a manifest is missing or changed.'''
    def __init__(self, message):
        super(ManifestMismatch, self).__init__(message)
        self.message = message


ARTIFACTS = {'map': 'map.csv', 'ascii': 'ascii.txt',
             'checkpoint': 'checkpoint.h5', 'scatter': 'scatter.csv',
             'histogram': 'histogram.csv', 'dataset': 'dataset.csv',
             'mdp': 'mdp.json', 'monitor': 'training.h5'}
MANIFEST = 'manifest.json'
RUN_LOG = 'run.log'


@dataclass
class RunManifest:
    config: dict
    started: str
    finished: str = None
    artifacts: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self):
        return {'config': self.config, 'started': self.started,
                'finished': self.finished, 'artifacts': self.artifacts,
                'metrics': self.metrics, 'version': self.version}

    @classmethod
    def from_dict(cls, document):
        return cls(**document)

    def save(self, filename):
        with open(filename, 'w') as f:
            json.dump(self.to_dict(), f, indent=1, sort_keys=True)
            f.write('\n')

    @classmethod
    def load(cls, filename):
        with open(filename, 'r') as f:
            return cls.from_dict(json.load(f))


def verify_manifest(filename):
    '''Check that every artifact listed in the manifest exists next to
    it with the recorded sha256. Returns the manifest.'''
    manifest = RunManifest.load(filename)
    directory = os.path.dirname(os.path.abspath(filename))
    for artifact in manifest.artifacts:
        path = os.path.join(directory, artifact['path'])
        if not os.path.isfile(path):
            raise ManifestMismatch('artifact {} is missing'.format(
                artifact['path']))
        if sha256_file(path) != artifact['sha256']:
            raise ManifestMismatch('artifact {} does not match its '
                                   'hash'.format(artifact['path']))
    return manifest


def _now():
    return datetime.now(timezone.utc).isoformat()


def build_environment(config):
    '''Return (mdp, dataset or None) of an ExperimentConfig.'''
    if config.experiment == 'open-grid-starved':
        return build_open_grid(config.env), None
    if config.experiment == 'cliff-wind':
        return build_cliff_grid(config.env), None
    mdp, dataset, _ = build_synthetic_clinical(config.env)
    return mdp, dataset


def epistemic_rank(values, state, candidates):
    '''1-based rank of values[state] among values[candidates], 1 being
    the largest. Ties rank in favour of state.'''
    values = np.asarray(values)
    return 1 + int(np.sum(values[candidates] > values[state]))


def monotonicity_statistic(values):
    '''Adjacent increases of a sequence that should not increase:
    returns (number of violations, largest violation relative to the
    range of the sequence).'''
    values = np.asarray(values, dtype=np.float64)
    increases = np.diff(values)
    violations = increases[increases > 0]
    spread = values.max() - values.min() if len(values) else 0.
    largest = (float(violations.max() / spread)
               if len(violations) and spread > 0 else 0.)
    return int(len(violations)), largest


def cliff_epistemic_contrast(epistemic, grid, terminal):
    '''Mean epistemic variance over the right half of the top row minus
    the mean over the bottom row (non-terminal cells only).'''
    def mean_over(cells):
        states = [grid_index(grid, c) for c in cells]
        states = [s for s in states if not terminal[s]]
        return float(np.mean(epistemic[states])) if states else 0.
    top_right = [(1, col) for col in range(grid.width // 2 + 1,
                                           grid.width + 1)]
    bottom = [(grid.height, col) for col in range(1, grid.width + 1)]
    return mean_over(top_right) - mean_over(bottom)


class ExperimentRunner(Printing):
    '''Run one ExperimentConfig end to end. Everything the run prints
    also goes to run.log in the output directory.'''

    def __init__(self, config, *args, **kwargs):
        self.config = config
        self.manifest = None
        self._artifacts = []

    def _path(self, name):
        return os.path.join(self.config.outputs, name)

    def _record(self, name):
        self._artifacts.append({'path': name,
                                'sha256': sha256_file(self._path(name))})

    def _prepare_output(self):
        try:
            os.makedirs(self.config.outputs, exist_ok=True)
            log = FilePrinter(self._path(RUN_LOG))
        except OSError as err:
            raise OutputIOError('cannot prepare output directory {}: '
                                '{}'.format(self.config.outputs, err))
        self._printer = TeePrinter(self._printer, log)
        self._warningprinter = TeePrinter(self._warningprinter, log)

    def run(self):
        config = self.config
        config.validate()
        started = _now()
        self._prepare_output()
        self.prints('PyUADRL v{} - {} (seed {})'.format(
            __version__, config.experiment, config.seed))
        try:
            return self._run(started)
        except OSError as err:
            if isinstance(err, OutputIOError):
                raise
            raise OutputIOError('writing artifacts failed: {}'.format(err))

    def _run(self, started):
        config, cfg = self.config, self.config.train
        mdp, dataset = build_environment(config)
        self.prints('Environment: {}'.format(mdp))

        buffer = ReplayBuffer(cfg.buffer_capacity, mdp.n_states,
                              printer=self._printer,
                              warningprinter=self._warningprinter)
        metrics = {}
        starved_state = None
        if config.starve_cell is not None:
            starved_state = grid_index(config.env, config.starve_cell)
            starve(buffer, starved_state, config.starve_prob)
            self.prints('Starving state {} {} (inclusion probability '
                        '{})'.format(starved_state, config.starve_cell,
                                     config.starve_prob))
        if dataset is not None:
            if len(dataset) > buffer.capacity:
                self.warns('dataset of {:d} transitions exceeds the buffer '
                           'capacity {:d}, oldest transitions are '
                           'dropped'.format(len(dataset), buffer.capacity))
            buffer.extend(dataset, streams.make_rng(config.seed,
                                                    streams.REPLAY, 1))
            self.prints('Offline dataset: {:d} transitions'.format(
                len(buffer)))

        monitor = None
        if 'monitor' in config.emit:
            monitor = TrainingMonitor(
                os.path.splitext(self._path(ARTIFACTS['monitor']))[0],
                max(cfg.n_steps, 1),
                parameters_dict={'train_config': json.dumps(
                    cfg.to_dict(), sort_keys=True)},
                printer=self._printer)
        policy = None
        if config.target_policy == 'along-edge':
            policy = along_edge_policy(config.env)
            self.prints('Learning the return distribution of the along-edge '
                        'policy')
        trainer = Trainer(mdp, buffer, cfg, monitor=monitor, policy=policy,
                          printer=self._printer)
        ensemble = trainer.run()
        self.prints('Trained {} for {:d} steps ({:d} episodes)'.format(
            ensemble, cfg.n_steps, trainer.n_episodes))
        if starved_state is not None:
            metrics['starved_state'] = int(starved_state)
            metrics['starved_transitions_stored'] = int(
                buffer.n_accepted[starved_state])

        umap = normalize(state_map(ensemble, mdp, rule=config.map_rule,
                                   action=config.map_action,
                                   dataset=dataset))
        live = np.nonzero(~umap.terminal)[0]
        if config.reference:
            reference = random_walker_reference(mdp, cfg.n_quantiles)
            umap = apply_reference(umap, reference)
            scaled = umap.aleatoric_scaled[live]
            metrics['aleatoric_scaled_range'] = float(scaled.max() -
                                                      scaled.min())
        metrics.update(self._grid_metrics(umap, starved_state, live))

        emit = set(config.emit)
        if 'map' in emit:
            write_map_csv(umap, self._path(ARTIFACTS['map']))
            self._record(ARTIFACTS['map'])
        if 'ascii' in emit:
            aleatoric = (None if umap.aleatoric_scaled is None
                         else np.clip(umap.aleatoric_scaled, 0., 1.))
            text = render_ascii(umap, config.env, aleatoric=aleatoric)
            with open(self._path(ARTIFACTS['ascii']), 'w') as f:
                f.write(text + '\n')
            self._record(ARTIFACTS['ascii'])
            self.prints(text)
        if 'checkpoint' in emit:
            export_checkpoint(ensemble, self._path(ARTIFACTS['checkpoint']),
                              cfg, config.to_dict())
            self._record(ARTIFACTS['checkpoint'])
        metrics['checkpoint_digest'] = ensemble_digest(ensemble)
        metrics['anchor_digest'] = ensemble.anchor_digest()
        if 'scatter' in emit:
            correlation = visitation_epistemic_correlation(
                ensemble, mdp, config.rollout_episodes,
                streams.make_rng(config.seed, streams.ROLLOUT),
                max_steps=cfg.max_episode_steps)
            write_scatter_csv(correlation, umap.terminal,
                              self._path(ARTIFACTS['scatter']))
            self._record(ARTIFACTS['scatter'])
            metrics['spearman_rho'] = correlation.rho
            metrics['n_visited'] = int(len(correlation.visited))
            metrics['n_unvisited'] = int(len(correlation.unvisited))
        if 'histogram' in emit:
            write_histogram_csv(
                uncertainty_histogram(ensemble, mdp, config.histogram_bins),
                self._path(ARTIFACTS['histogram']))
            self._record(ARTIFACTS['histogram'])
        if 'dataset' in emit and dataset is not None:
            save_dataset_csv(dataset, self._path(ARTIFACTS['dataset']))
            self._record(ARTIFACTS['dataset'])
        if 'mdp' in emit:
            save_mdp(mdp, self._path(ARTIFACTS['mdp']))
            self._record(ARTIFACTS['mdp'])
        if monitor is not None:
            self._record(ARTIFACTS['monitor'])

        for key in sorted(metrics):
            self.prints('{}: {}'.format(key, metrics[key]))
        self.prints('Done.')
        self._record(RUN_LOG)
        self.manifest = RunManifest(config=config.to_dict(), started=started,
                                    finished=_now(), artifacts=self._artifacts,
                                    metrics=metrics)
        self.manifest.save(self._path(MANIFEST))
        return self.manifest

    def _grid_metrics(self, umap, starved_state, live):
        config = self.config
        metrics = {}
        if starved_state is not None:
            metrics['starved_state_epistemic_rank'] = epistemic_rank(
                umap.epistemic_raw, starved_state, live)
        if config.experiment == 'cliff-wind':
            grid = config.env
            wind = sorted(grid.effective_wind_cells(), key=lambda c: c[1])
            states = [grid_index(grid, c) for c in wind]
            if config.env.start[1] > config.env.goal[1]:
                states = states[::-1]
            n_violations, largest = monotonicity_statistic(
                umap.aleatoric_raw[states])
            metrics['aleatoric_monotonicity_violations'] = n_violations
            metrics['aleatoric_monotonicity_largest'] = largest
            metrics['epistemic_top_right_minus_bottom'] = \
                cliff_epistemic_contrast(umap.epistemic_raw, grid,
                                         umap.terminal)
        return metrics


def run(config, printer=None):
    '''Run config and return its RunManifest, see ExperimentRunner.'''
    return ExperimentRunner(config, printer=printer).run()

