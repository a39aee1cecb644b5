'''
@date:   19/10/2026
'''

import csv
import json
import os
import shutil
import tempfile
import unittest
from dataclasses import replace

import h5py as hp
import numpy as np

from PyUADRL.cli.checkpoint import (CorruptFile, FormatVersionMismatch,
                                    export_checkpoint, import_checkpoint,
                                    read_checkpoint)
from PyUADRL.cli.config import (ConfigInvalid, ExperimentConfig,
                                load_config, preset)
from PyUADRL.cli.exports import MAP_COLUMNS, sha256_file, write_map_csv
from PyUADRL.cli.main import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from PyUADRL.cli.render import ShapeMismatch, render_ascii
from PyUADRL.cli.runner import (ManifestMismatch, OutputIOError,
                                epistemic_rank, monotonicity_statistic, run,
                                verify_manifest)
from PyUADRL.envs.gridworlds import RIGHT, GridSpec, build_cliff_grid
from PyUADRL.general.printers import AccumulatorPrinter, SilentPrinter
from PyUADRL.qr_ensemble.ensemble import AnchoredEnsemble
from PyUADRL.qr_ensemble.training import TrainConfig
from PyUADRL.uncertainty.maps import UncertaintyMap, apply_reference


def make_map(epistemic, aleatoric, normalised=True):
    n = len(epistemic)
    umap = UncertaintyMap(rule='greedy', actions=np.zeros(n, dtype=np.int64),
                          terminal=np.zeros(n, dtype=bool),
                          epistemic_raw=np.asarray(epistemic, float),
                          aleatoric_raw=np.asarray(aleatoric, float))
    if normalised:
        umap.epistemic_norm = umap.epistemic_raw
        umap.aleatoric_norm = umap.aleatoric_raw
    return umap


class TestExperimentConfig(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def write(self, name, text):
        filename = os.path.join(self.tmpdir, name)
        with open(filename, 'w') as f:
            f.write(text)
        return filename

    def test_presets(self):
        for figure in ('1a', '1b', '2b'):
            config = preset(figure, 5).validate()
            self.assertEqual(config.seed, 5)
            self.assertEqual(ExperimentConfig.from_dict(config.to_dict()),
                             config)
        config = preset('1a', 5)
        self.assertEqual(config.starve_cell, (4, 4))
        self.assertTrue(config.reference)
        self.assertTrue(config.train.point_anchors)
        cliff = preset('1b', 5)
        self.assertEqual((cliff.target_policy, cliff.map_rule,
                          cliff.map_action), ('along-edge', 'fixed', RIGHT))
        clinical = preset('2b', 9)
        self.assertEqual(clinical.env.seed, 9)
        self.assertEqual(clinical.train.mode, 'offline')
        with self.assertRaises(ConfigInvalid):
            preset('3c', 1)

    def test_overrides(self):
        config = preset('1b', 1).with_overrides(seed=2, n_steps=10,
                                                outputs='elsewhere')
        self.assertEqual((config.seed, config.train.n_steps, config.outputs),
                         (2, 10, 'elsewhere'))

    def test_toml_file(self):
        filename = self.write('cliff.toml', '\n'.join([
            'experiment = "cliff-wind"',
            'emit = ["map", "ascii"]',
            '[env]',
            'wind_prob = 0.3',
            '[train]',
            'n_steps = 200',
            'n_members = 2',
            'seed = 4',
            '']))
        config = load_config(filename).validate()
        self.assertEqual(config.env.wind_prob, 0.3)
        self.assertEqual(config.env.width, 6)
        self.assertEqual(config.train.gamma, 0.99)
        self.assertEqual(config.emit, ('ascii', 'map'))

    def test_json_file(self):
        document = preset('2b', 3).to_dict()
        filename = self.write('clinical.json', json.dumps(document))
        self.assertEqual(load_config(filename), preset('2b', 3))

    def test_invalid_configs(self):
        with self.assertRaises(ConfigInvalid):
            load_config(os.path.join(self.tmpdir, 'missing.json'))
        with self.assertRaises(ConfigInvalid):
            load_config(self.write('broken.json', '{"experiment": '))
        with self.assertRaises(ConfigInvalid):
            ExperimentConfig.from_dict({'experiment': 'mountain-car'})
        with self.assertRaises(ConfigInvalid):
            ExperimentConfig.from_dict({'experiment': 'cliff-wind',
                                        'colour': 'red'})
        config = preset('2b', 1)
        config.train.mode = 'online'
        with self.assertRaises(ConfigInvalid):
            config.validate()
        config = preset('1b', 1)
        config.starve_cell = (9, 9)
        with self.assertRaises(ConfigInvalid):
            config.validate()

    def test_map_rule_and_target_policy(self):
        for changes in ({'map_action': None}, {'map_action': 4},
                        {'map_rule': 'worst'}, {'map_rule': 'behavior'},
                        {'target_policy': 'zigzag'}):
            with self.assertRaises(ConfigInvalid):
                replace(preset('1b', 1), **changes).validate()
        with self.assertRaises(ConfigInvalid):
            replace(preset('2b', 1), target_policy='along-edge').validate()
        clinical = replace(preset('2b', 1), map_rule='fixed', map_action=24)
        self.assertEqual(clinical.validate().map_action, 24)
        greedy = replace(preset('1b', 1), map_rule='greedy', map_action=None,
                         target_policy=None)
        self.assertIsNone(greedy.validate().target_policy)


class TestCheckpoint(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.filename = os.path.join(self.tmpdir, 'checkpoint.h5')
        self.ensemble = AnchoredEnsemble.from_prior(16, 4, n_quantiles=4,
                                                    n_members=3, seed=2)
        self.ensemble.values += np.random.default_rng(0).normal(
            size=self.ensemble.shape)
        self.cfg = TrainConfig(n_steps=12, seed=2)

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def test_round_trip(self):
        digest = export_checkpoint(self.ensemble, self.filename, self.cfg,
                                   {'experiment': 'cliff-wind'})
        ensemble, cfg, experiment = read_checkpoint(self.filename)
        self.assertEqual(ensemble, self.ensemble)
        self.assertEqual(cfg, self.cfg)
        self.assertEqual(experiment, {'experiment': 'cliff-wind'})
        self.assertEqual(len(digest), 64)
        mdp = build_cliff_grid(GridSpec.cliff_2x6())
        self.assertEqual(import_checkpoint(self.filename, mdp), self.ensemble)

    def test_mismatched_mdp(self):
        export_checkpoint(self.ensemble, self.filename)
        mdp = build_cliff_grid(GridSpec(width=5, height=2, start=(2, 1),
                                        goal=(2, 5),
                                        cliff_cells=((3, 2), (3, 3))))
        with self.assertRaises(FormatVersionMismatch):
            import_checkpoint(self.filename, mdp)

    def test_format_version(self):
        export_checkpoint(self.ensemble, self.filename)
        with hp.File(self.filename, 'a') as h5file:
            h5file.attrs['format_version'] = 2
        with self.assertRaises(FormatVersionMismatch):
            import_checkpoint(self.filename)

    def test_truncated_file(self):
        export_checkpoint(self.ensemble, self.filename)
        with open(self.filename, 'rb') as f:
            head = f.read(100)
        truncated = os.path.join(self.tmpdir, 'truncated.h5')
        with open(truncated, 'wb') as f:
            f.write(head)
        with self.assertRaises(CorruptFile):
            import_checkpoint(truncated)
        with self.assertRaises(CorruptFile):
            import_checkpoint(os.path.join(self.tmpdir, 'missing.h5'))

    def test_tampered_payload(self):
        export_checkpoint(self.ensemble, self.filename)
        with hp.File(self.filename, 'a') as h5file:
            h5file['members'][0, 0, 0, 0] += 1.
        with self.assertRaises(CorruptFile):
            import_checkpoint(self.filename)


class TestRenderAndExport(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def test_single_goal_cell(self):
        grid = GridSpec(width=1, height=1, start=(1, 1), goal=(1, 1))
        self.assertEqual(render_ascii(make_map([0.], [0.]), grid), 'G')

    def test_two_by_two(self):
        grid = GridSpec(width=2, height=2, start=(1, 1), goal=(2, 2))
        umap = make_map([1., 0., 0.5, 0.], [0., 1., 0.5, 0.])
        self.assertEqual(render_ascii(umap, grid).splitlines(),
                         ['99/00 00/99', '50/50 G'])

    def test_cliff_rows(self):
        grid = GridSpec.cliff_2x6()
        umap = make_map(np.linspace(0., 1., 16), np.zeros(16))
        lines = render_ascii(umap, grid).splitlines()
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[0].startswith('00/00'))
        self.assertTrue(lines[1].endswith('G'))
        self.assertEqual(len(lines[0].split(' ')), 6)
        # the cliff row sits below the band, under columns 2 to 5
        self.assertEqual(lines[2], ' ' * 6 + 'X' + '     X' * 3)

    def test_in_band_cliff_cells(self):
        grid = GridSpec(width=3, height=2, start=(1, 1), goal=(1, 3),
                        cliff_cells=((2, 2),), wind_prob=0.)
        umap = make_map(np.zeros(6), np.zeros(6))
        self.assertEqual(render_ascii(umap, grid).splitlines(),
                         ['00/00 00/00 G', '00/00 X     00/00'])

    def test_shape_mismatch(self):
        grid = GridSpec(width=2, height=2, start=(1, 1), goal=(2, 2))
        with self.assertRaises(ShapeMismatch):
            render_ascii(make_map([0., 1., 2.], [0., 1., 2.]), grid)

    def test_map_csv(self):
        umap = apply_reference(make_map([0.1, 0.2], [0.3, 0.4]), [1., 2.])
        filename = os.path.join(self.tmpdir, 'map.csv')
        write_map_csv(umap, filename)
        with open(filename, newline='') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], MAP_COLUMNS + ['aleatoric_scaled'])
        self.assertEqual(len(rows), 3)
        self.assertEqual(float(rows[2][-1]), 0.2)
        self.assertEqual(rows[1][1:3], ['', ''])


class TestRunner(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def cliff_config(self, name, n_steps=200):
        config = preset('1b', 3, outputs=os.path.join(self.tmpdir, name))
        return config.with_overrides(n_steps=n_steps)

    def test_statistics(self):
        self.assertEqual(monotonicity_statistic([4., 3., 3.5, 1.]),
                         (1, 0.5 / 3.))
        self.assertEqual(monotonicity_statistic([3., 2., 1.]), (0, 0.))
        self.assertEqual(epistemic_rank([0.1, 0.5, 0.3], 2, [0, 1, 2]), 2)
        self.assertEqual(epistemic_rank([0.1, 0.5, 0.3], 1, [0, 1, 2]), 1)

    def test_cliff_run(self):
        manifest = run(self.cliff_config('cliff'), printer=SilentPrinter())
        directory = os.path.join(self.tmpdir, 'cliff')
        for name in ('map.csv', 'ascii.txt', 'checkpoint.h5', 'run.log',
                     'manifest.json'):
            self.assertTrue(os.path.isfile(os.path.join(directory, name)))
        self.assertIn('aleatoric_monotonicity_violations', manifest.metrics)
        self.assertIn('epistemic_top_right_minus_bottom', manifest.metrics)
        verified = verify_manifest(os.path.join(directory, 'manifest.json'))
        self.assertEqual(verified.metrics['checkpoint_digest'],
                         manifest.metrics['checkpoint_digest'])
        with open(os.path.join(directory, 'ascii.txt')) as f:
            # two band rows and the cliff row below them
            self.assertEqual(len(f.read().splitlines()), 3)

    def test_runs_reproduce(self):
        first = run(self.cliff_config('a'), printer=SilentPrinter())
        second = run(self.cliff_config('b'), printer=SilentPrinter())
        self.assertEqual(first.metrics, second.metrics)
        self.assertEqual(
            sha256_file(os.path.join(self.tmpdir, 'a', 'map.csv')),
            sha256_file(os.path.join(self.tmpdir, 'b', 'map.csv')))

    def test_zero_steps_starved_grid(self):
        config = preset('1a', 1, outputs=os.path.join(self.tmpdir, 'open'))
        config = config.with_overrides(n_steps=0)
        config.emit = ('map', 'mdp')
        config.reference = False
        manifest = run(config, printer=SilentPrinter())
        self.assertEqual(manifest.metrics['starved_state'], 24)
        self.assertEqual(manifest.metrics['starved_transitions_stored'], 0)
        self.assertEqual([a['path'] for a in manifest.artifacts],
                         ['map.csv', 'mdp.json', 'run.log'])

    def test_tampered_artifact(self):
        run(self.cliff_config('t', n_steps=20), printer=SilentPrinter())
        directory = os.path.join(self.tmpdir, 't')
        with open(os.path.join(directory, 'map.csv'), 'a') as f:
            f.write('tampered\n')
        with self.assertRaises(ManifestMismatch):
            verify_manifest(os.path.join(directory, 'manifest.json'))

    def test_unwritable_output(self):
        blocker = os.path.join(self.tmpdir, 'blocker')
        with open(blocker, 'w') as f:
            f.write('not a directory')
        config = preset('1b', 1, outputs=blocker).with_overrides(n_steps=0)
        with self.assertRaises(OutputIOError):
            run(config, printer=SilentPrinter())


class TestMain(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.out = os.path.join(self.tmpdir, 'run')
        self.printer = AccumulatorPrinter()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def test_replicate_map_scatter(self):
        code = main(['replicate', '--figure', '1b', '--seed', '4', '--out',
                     self.out, '--n-steps', '100'], printer=self.printer)
        self.assertEqual(code, EXIT_OK)
        checkpoint = os.path.join(self.out, 'checkpoint.h5')
        map_csv = os.path.join(self.tmpdir, 'map.csv')
        code = main(['map', '--checkpoint', checkpoint, '--normalize',
                     '--csv', map_csv], printer=self.printer)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(os.path.isfile(map_csv))
        code = main(['scatter', '--checkpoint', checkpoint, '--episodes',
                     '5'], printer=self.printer)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(self.printer.log[-1].startswith('spearman rho'))

    def test_train_from_config(self):
        filename = os.path.join(self.tmpdir, 'cliff.json')
        with open(filename, 'w') as f:
            json.dump({'experiment': 'cliff-wind',
                       'train': {'n_steps': 50, 'n_members': 2}}, f)
        code = main(['train', '--config', filename, '--seed', '7', '--out',
                     self.out], printer=self.printer)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(os.path.isfile(os.path.join(self.out,
                                                    'manifest.json')))

    def test_exit_codes(self):
        code = main(['train', '--config',
                     os.path.join(self.tmpdir, 'missing.toml'), '--seed',
                     '1', '--out', self.out], printer=self.printer)
        self.assertEqual(code, EXIT_CONFIG)
        self.assertTrue(self.printer.log[-1].startswith('*** PyUADRL ERROR!'))
        blocker = os.path.join(self.tmpdir, 'blocker')
        with open(blocker, 'w') as f:
            f.write('not a directory')
        code = main(['replicate', '--figure', '1b', '--seed', '1', '--out',
                     blocker, '--n-steps', '0'], printer=self.printer)
        self.assertEqual(code, EXIT_IO)
        code = main(['map', '--checkpoint', blocker], printer=self.printer)
        self.assertEqual(code, EXIT_IO)


if __name__ == '__main__':
    unittest.main()
