'''
@date:   19/10/2026
'''

import os
import shutil
import tempfile
import unittest

import numpy as np

from PyUADRL.envs.clinical import (SyntheticClinicalSpec,
                                   build_clinical_mdp,
                                   build_synthetic_clinical,
                                   save_dataset_csv)
from PyUADRL.envs.gridworlds import (DOWN, LEFT, RIGHT, UP, GridSpec,
                                     SpecInvalid, along_edge_policy,
                                     build_cliff_grid, build_open_grid,
                                     grid_cell, grid_index)
from PyUADRL.mdp.dynamic_programming import value_iteration
from PyUADRL.mdp.mdp_core import IndexOutOfRange


class TestGridWorlds(unittest.TestCase):

    def setUp(self):
        self.open_spec = GridSpec.open_7x7()
        self.cliff_spec = GridSpec.cliff_2x6()

    def tearDown(self):
        pass

    def test_open_grid_layout(self):
        mdp = build_open_grid(self.open_spec)
        self.assertEqual(mdp.n_states, 49)
        self.assertEqual(mdp.n_actions, 4)
        self.assertEqual(mdp.initial_state, 0)
        goal = grid_index(self.open_spec, (7, 7))
        self.assertEqual(goal, 48)
        self.assertEqual(mdp.terminals, frozenset([goal]))
        # deterministic, clamped at the border
        self.assertEqual(mdp.successors(0, UP), [(0, 1.)])
        self.assertEqual(mdp.successors(0, LEFT), [(0, 1.)])
        self.assertEqual(mdp.successors(0, RIGHT), [(1, 1.)])
        self.assertEqual(mdp.successors(0, DOWN), [(7, 1.)])
        self.assertEqual(mdp.reward(47, RIGHT, goal), 1.)
        self.assertEqual(mdp.reward(0, RIGHT, 1), 0.)

    def test_open_grid_values(self):
        mdp = build_open_grid(self.open_spec)
        v, _, _ = value_iteration(mdp)
        # twelve moves, the goal reward arrives on the last one
        self.assertAlmostEqual(v[0], 0.99**11, places=8)

    def test_index_bijection(self):
        for spec in (self.open_spec, self.cliff_spec):
            for state in range(spec.n_states):
                self.assertEqual(grid_index(spec, grid_cell(spec, state)),
                                 state)
        with self.assertRaises(IndexOutOfRange):
            grid_cell(self.cliff_spec, 16)
        with self.assertRaises(IndexOutOfRange):
            grid_index(self.cliff_spec, (3, 1))

    def test_cliff_grid_wind(self):
        mdp = build_cliff_grid(self.cliff_spec)
        self.assertEqual(mdp.n_states, 16)
        spec = self.cliff_spec
        state = grid_index(spec, (2, 3))
        cliff = grid_index(spec, (3, 4))
        right = grid_index(spec, (2, 4))
        above = grid_index(spec, (1, 3))
        # the move resolves, then the wind acts on the landing cell
        self.assertEqual(sorted(mdp.successors(state, RIGHT)),
                         sorted([(right, 0.8), (cliff, 0.2)]))
        self.assertEqual(mdp.reward(state, RIGHT, cliff), -1.)
        self.assertTrue(mdp.is_terminal(cliff))
        self.assertEqual(mdp.successors(state, UP), [(above, 1.)])
        # blown down when stepping back from the top row
        self.assertEqual(sorted(mdp.successors(above, DOWN)),
                         sorted([(state, 0.8),
                                 (grid_index(spec, (3, 3)), 0.2)]))
        # the last step onto the goal is out of the wind
        last = grid_index(spec, (2, 5))
        self.assertEqual(mdp.successors(last, RIGHT),
                         [(grid_index(spec, (2, 6)), 1.)])
        self.assertEqual(len(mdp.successors(above, RIGHT)), 1)

    def test_every_move_into_the_wind(self):
        spec = self.cliff_spec
        mdp = build_cliff_grid(spec)
        wind = set(spec.effective_wind_cells())
        self.assertEqual(wind, {(2, 2), (2, 3), (2, 4), (2, 5)})
        n_windy = 0
        for state in range(spec.width * spec.height):
            if mdp.is_terminal(state):
                continue
            for action in range(4):
                successors = dict(mdp.successors(state, action))
                landing = [grid_cell(spec, s2) for s2 in successors
                           if grid_cell(spec, s2) in wind]
                if not landing:
                    continue
                self.assertEqual(len(landing), 1)
                row, col = landing[0]
                below = grid_index(spec, (row + 1, col))
                self.assertAlmostEqual(successors[below], 0.2)
                self.assertAlmostEqual(sum(successors.values()), 1.)
                n_windy += 1
        # down from the top row or sideways along the edge
        self.assertEqual(n_windy, 11)

    def test_along_edge_policy(self):
        spec = self.cliff_spec
        policy = along_edge_policy(spec)
        self.assertEqual(policy.shape, (16,))
        for col in range(1, 6):
            self.assertEqual(policy[grid_index(spec, (2, col))], RIGHT)
            self.assertEqual(policy[grid_index(spec, (1, col))], RIGHT)
        self.assertEqual(policy[grid_index(spec, (1, 6))], DOWN)
        open_policy = along_edge_policy(self.open_spec)
        self.assertEqual(open_policy[grid_index(self.open_spec, (7, 3))],
                         RIGHT)
        self.assertEqual(open_policy[grid_index(self.open_spec, (2, 7))],
                         DOWN)

    def test_calm_cliff_moves_like_open_grid(self):
        calm = GridSpec(width=6, height=2, start=(2, 1), goal=(2, 6),
                        cliff_cells=self.cliff_spec.cliff_cells,
                        wind_prob=0.)
        open_spec = GridSpec(width=6, height=2, start=(2, 1), goal=(2, 6))
        cliff_mdp = build_cliff_grid(calm)
        open_mdp = build_open_grid(open_spec)
        cliffs = set(calm.cliff_cells)
        for cell in calm.band_cells():
            if cell == calm.goal:
                continue
            for action in range(4):
                (s2, p), = cliff_mdp.successors(grid_index(calm, cell),
                                                action)
                self.assertEqual(p, 1.)
                target = grid_cell(calm, s2)
                if target in cliffs:
                    continue
                (o2, _), = open_mdp.successors(
                    grid_index(open_spec, cell), action)
                self.assertEqual(target, grid_cell(open_spec, o2))

    def test_invalid_specs(self):
        with self.assertRaises(SpecInvalid):
            build_open_grid(self.cliff_spec)
        with self.assertRaises(SpecInvalid):
            build_cliff_grid(self.open_spec)
        with self.assertRaises(SpecInvalid):
            GridSpec(start=(3, 3), goal=(3, 3)).validate()
        with self.assertRaises(SpecInvalid):
            GridSpec(goal=(8, 1)).validate()
        with self.assertRaises(SpecInvalid):
            GridSpec(width=6, height=2, start=(2, 1), goal=(2, 6),
                     cliff_cells=((3, 2),), wind_prob=1.5).validate()
        with self.assertRaises(SpecInvalid):
            GridSpec.from_dict({'width': 3, 'colour': 'red'})

    def test_spec_document(self):
        again = GridSpec.from_dict(self.cliff_spec.to_dict())
        self.assertEqual(again, self.cliff_spec)


class TestSyntheticClinical(unittest.TestCase):

    def setUp(self):
        self.spec = SyntheticClinicalSpec(n_states=52, n_actions=5,
                                          n_transitions=2000, seed=3)
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def test_deterministic(self):
        mdp_a, data_a, visits_a = build_synthetic_clinical(self.spec)
        mdp_b, data_b, visits_b = build_synthetic_clinical(self.spec)
        self.assertTrue(np.array_equal(mdp_a.dense_kernel(),
                                       mdp_b.dense_kernel()))
        self.assertEqual(data_a, data_b)
        self.assertTrue(np.array_equal(visits_a, visits_b))

    def test_seed_changes_dataset(self):
        _, data_a, _ = build_synthetic_clinical(self.spec)
        other = SyntheticClinicalSpec(n_states=52, n_actions=5,
                                      n_transitions=2000, seed=4)
        _, data_b, _ = build_synthetic_clinical(other)
        self.assertNotEqual(data_a, data_b)

    def test_structure(self):
        mdp, dataset, visits = build_synthetic_clinical(self.spec)
        self.assertEqual(mdp.n_states, 52)
        self.assertEqual(mdp.terminals, frozenset([50, 51]))
        for s in range(self.spec.n_regular):
            for a in range(self.spec.n_actions):
                self.assertEqual(len(mdp.successors(s, a)),
                                 self.spec.branching)
        self.assertEqual(len(dataset), 2000)
        self.assertEqual(visits.sum(), 2000)
        self.assertEqual(visits[50] + visits[51], 0)
        success = dataset.next_states == self.spec.success_state
        self.assertTrue(np.all(dataset.rewards[success] == 1.))
        self.assertTrue(np.all(dataset.terminals[success]))
        # a few popular states dominate the data
        self.assertGreater(np.sort(visits)[-5:].sum(), 2000 * 5 / 50.)

    def test_dataset_csv(self):
        _, dataset, _ = build_synthetic_clinical(self.spec)
        filename = os.path.join(self.tmpdir, 'dataset.csv')
        save_dataset_csv(dataset, filename)
        with open(filename) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], 's,a,r,s2,terminal')
        self.assertEqual(len(lines), 2001)

    def test_default_incoming_mass_is_concentrated(self):
        spec = SyntheticClinicalSpec()
        mdp, _ = build_clinical_mdp(spec)
        self.assertEqual(mdp.n_states, 752)
        n_rows = spec.n_regular * spec.n_actions
        incoming = np.asarray(mdp.kernel[:n_rows].sum(axis=0)).ravel()
        incoming = incoming[:spec.n_regular]
        top_decile = np.sort(incoming)[-(spec.n_regular // 10):]
        self.assertGreater(top_decile.sum() / incoming.sum(), 0.5)

    def test_invalid_spec(self):
        with self.assertRaises(ValueError):
            build_synthetic_clinical(SyntheticClinicalSpec(
                n_states=10, branching=20))
        for frac in (0., 1., -0.1):
            with self.assertRaises(SpecInvalid):
                SyntheticClinicalSpec(terminal_frac=frac).validate()
        SyntheticClinicalSpec(terminal_frac=0.5).validate()


if __name__ == '__main__':
    unittest.main()
