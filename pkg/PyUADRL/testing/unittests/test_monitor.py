'''
@date:   19/10/2026
'''

import os
import shutil
import tempfile
import unittest

import h5py as hp
import numpy as np

from PyUADRL.general.printers import AccumulatorPrinter, SilentPrinter
from PyUADRL.mdp.replay import ReplayBuffer
from PyUADRL.monitors.monitors import TrainingMonitor
from PyUADRL.qr_ensemble.training import TrainConfig, train

from test_mdp_core import make_corridor


class TestMonitor(unittest.TestCase):
    ''' Test the TrainingMonitor '''
    def setUp(self):
        self.n_steps = 10
        self.tmpdir = tempfile.mkdtemp()
        self.filename = os.path.join(self.tmpdir, 'trainm')

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def generate_mock_learner(self):
        '''
        Create a mock learner which counts its calls: 'step' grows by
        one per access, 'buffer_size' is a method returning 99 and
        'td_loss' is None.
        '''
        class Mock():
            def __init__(self):
                self.counter = 0
                self.td_loss = None

            @property
            def step(self):
                self.counter += 1
                return self.counter

            def buffer_size(self):
                return 99
        return Mock()

    def test_trainingmonitor(self):
        '''
        Test whether the data stored in the h5 file correspond to the
        correct values, with a buffer smaller than the number of steps.
        '''
        monitor = TrainingMonitor(self.filename, self.n_steps,
                                  parameters_dict={'seed': 3},
                                  write_buffer_every=2, buffer_size=7,
                                  stats_to_store=['step', 'buffer_size',
                                                  'td_loss'])
        mock = self.generate_mock_learner()
        for i in range(self.n_steps):
            monitor.dump(mock)
        with hp.File(self.filename + '.h5', 'r') as h5file:
            t = h5file['Training']
            self.assertEqual(h5file.attrs['seed'], 3)
            self.assertTrue(np.allclose(t['step'][:],
                                        np.arange(1, self.n_steps + 1)))
            self.assertTrue(np.allclose(t['buffer_size'][:],
                                        99 * np.ones(self.n_steps)))
            self.assertTrue(np.all(np.isnan(t['td_loss'][:])))

    def test_close_flushes_remainder(self):
        monitor = TrainingMonitor(self.filename, self.n_steps,
                                  write_buffer_every=3, buffer_size=7,
                                  stats_to_store=['step'])
        mock = self.generate_mock_learner()
        for i in range(8):
            monitor.dump(mock)
        monitor.close()
        with hp.File(self.filename + '.h5', 'r') as h5file:
            steps = h5file['Training']['step'][:]
        self.assertTrue(np.allclose(steps[:8], np.arange(1, 9)))
        self.assertTrue(np.allclose(steps[8:], 0.))

    def test_full_monitor_warns(self):
        printer = AccumulatorPrinter()
        monitor = TrainingMonitor(self.filename, 2, write_buffer_every=1,
                                  buffer_size=2, stats_to_store=['step'],
                                  printer=printer)
        mock = self.generate_mock_learner()
        for i in range(3):
            monitor.dump(mock)
        self.assertEqual(len(printer.log), 1)
        self.assertIn('full', printer.log[0])

    def test_trainer_traces(self):
        corridor = make_corridor()
        cfg = TrainConfig(n_steps=50, n_members=2, n_quantiles=4,
                          gamma=0.9, batch_size=4, seed=1)
        monitor = TrainingMonitor(self.filename, cfg.n_steps,
                                  write_buffer_every=16, buffer_size=32)
        train(corridor, ReplayBuffer(100, corridor.n_states), cfg,
              monitor=monitor, printer=SilentPrinter())
        with hp.File(self.filename + '.h5', 'r') as h5file:
            t = h5file['Training']
            self.assertTrue(np.array_equal(t['step'][:], np.arange(50)))
            self.assertTrue(np.all(np.isfinite(t['td_loss'][:])))
            self.assertEqual(t['buffer_size'][-1], 50)
            self.assertAlmostEqual(t['epsilon'][0], 1.)


if __name__ == '__main__':
    unittest.main()
