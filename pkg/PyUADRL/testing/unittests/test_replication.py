'''
@date:   19/10/2026

Full-size replication runs of the three built-in experiments over five
seeds. They take minutes per seed and only run with
PYUADRL_SLOW_TESTS=1 set in the environment.
'''

import os
import shutil
import tempfile
import unittest

import numpy as np

from PyUADRL.cli.config import preset
from PyUADRL.cli.exports import sha256_file
from PyUADRL.cli.runner import run
from PyUADRL.general.printers import SilentPrinter


SLOW = os.environ.get('PYUADRL_SLOW_TESTS', '0') == '1'
SEEDS = (1, 2, 3, 4, 5)


@unittest.skipUnless(SLOW, 'set PYUADRL_SLOW_TESTS=1 for replication runs')
class TestReplication(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def run_figure(self, figure, seed, name=None):
        outputs = os.path.join(self.tmpdir, name or
                               '{}_{}'.format(figure, seed))
        return run(preset(figure, seed, outputs=outputs),
                   printer=SilentPrinter())

    def test_starved_state_flagged(self):
        ranks, ranges = [], []
        for seed in SEEDS:
            metrics = self.run_figure('1a', seed).metrics
            ranks.append(metrics['starved_state_epistemic_rank'])
            ranges.append(metrics['aleatoric_scaled_range'])
        self.assertGreaterEqual(sum(rank <= 3 for rank in ranks), 4)
        self.assertEqual(np.median(ranks), 1)
        self.assertGreaterEqual(sum(r < 0.2 for r in ranges), 4)

    def test_wind_shapes_uncertainty(self):
        monotone, contrast = 0, 0
        for seed in SEEDS:
            metrics = self.run_figure('1b', seed).metrics
            violations = metrics['aleatoric_monotonicity_violations']
            largest = metrics['aleatoric_monotonicity_largest']
            if violations == 0 or (violations == 1 and largest < 0.1):
                monotone += 1
            if metrics['epistemic_top_right_minus_bottom'] > 0:
                contrast += 1
        self.assertGreaterEqual(monotone, 4)
        self.assertGreaterEqual(contrast, 4)

    def test_clinical_anticorrelation(self):
        rhos = [self.run_figure('2b', seed).metrics['spearman_rho']
                for seed in SEEDS]
        self.assertGreaterEqual(sum(rho <= -0.3 for rho in rhos), 4)

    def test_byte_identical_reruns(self):
        first = self.run_figure('1a', 7, name='first')
        second = self.run_figure('1a', 7, name='second')
        self.assertEqual(
            sha256_file(os.path.join(self.tmpdir, 'first', 'map.csv')),
            sha256_file(os.path.join(self.tmpdir, 'second', 'map.csv')))
        self.assertEqual(first.metrics['checkpoint_digest'],
                         second.metrics['checkpoint_digest'])


if __name__ == '__main__':
    unittest.main()
