# -*- coding: utf-8 -*-
import os
import tempfile
import unittest

import numpy as np
from parameterized import parameterized

from l2r_pipeline.domain import SafetyLabel, StateVec
from l2r_pipeline.errors import ChecksumMismatch, ContractViolation, InsufficientDataError
from l2r_pipeline.policy import knn
from l2r_pipeline.policy.buffers import (CorrectionBuffer, ValueBuffer, build_value_buffer, classify_safety,
                                         compute_scales, correction_action)
from l2r_pipeline.policy.returns import Trajectory

ONES = np.ones(3)


def line_states(n):
    """States spaced one unit apart along z1, nearest-first from the origin."""
    return np.column_stack([np.arange(n, dtype=float), np.zeros(n), np.zeros(n)])


class KnnTests(unittest.TestCase):

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        # lattice points repeat and sit at equal distances from lattice queries
        lattice = rng.integers(-5, 6, size=(2500, 3)).astype(float)
        spread = rng.normal(size=(2000, 3))
        points = np.vstack([lattice, spread, spread[:500]])
        queries = np.vstack([rng.integers(-5, 6, size=(400, 3)).astype(float),
                             points[rng.choice(len(points), 300, replace=False)],
                             rng.normal(size=(300, 3))])
        self.assertEqual(points.shape, (5000, 3))
        self.assertEqual(len(queries), 1000)
        for query in queries:
            self.assertEqual(knn.nearest_indices(points, query, 5).tolist(),
                             knn.brute_force_neighbors(points, query, 5))

    def test_ties_go_to_lower_index(self):
        points = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, 0, 2.0]])
        self.assertEqual(knn.nearest_indices(points, np.zeros(3), 2).tolist(), [0, 1])
        self.assertEqual(knn.brute_force_neighbors(points, np.zeros(3), 2), [0, 1])

    def test_fewer_points_than_k(self):
        self.assertEqual(len(knn.nearest_indices(line_states(2), np.zeros(3), 5)), 2)

    @parameterized.expand([
        ('unanimous', [3, 3, 3, 3, 3], 3),
        ('majority', [2, 2, 5, 5, 5], 5),
        ('tie_to_nearest', [2, 1, 1, 2, 4], 2),
    ])
    def test_majority_vote(self, _, labels, expected):
        self.assertEqual(knn.majority_vote(labels), expected)


class ClassifySafetyTests(unittest.TestCase):

    @parameterized.expand([
        ('all_positive', [1, 1, 1, 1, 1], SafetyLabel.SAFE),
        ('mostly_negative', [10, 10, -25, -25, -25], SafetyLabel.UNSAFE),
        ('exactly_zero', [1, -1, 2, -2, 0], SafetyLabel.UNSAFE),
    ])
    def test_mean_of_neighbors(self, _, values, expected):
        buffer = ValueBuffer(line_states(5), values, ONES, k=5)
        self.assertIs(classify_safety(buffer, StateVec(2.0, 0.0, 0.0)), expected)

    def test_exact_match_with_one_neighbor(self):
        buffer = ValueBuffer(line_states(3), [-3.0, 5.0, -3.0], ONES, k=1)
        self.assertIs(classify_safety(buffer, StateVec(1.0, 0.0, 0.0)), SafetyLabel.SAFE)

    def test_small_buffer_uses_every_entry(self):
        buffer = ValueBuffer(line_states(2), [4.0, -1.0], ONES, k=5)
        self.assertIs(classify_safety(buffer, StateVec(50.0, 0.0, 0.0)), SafetyLabel.SAFE)

    def test_scales_normalize_distances(self):
        states = np.array([[0.0, 0.0, 10.0], [1.0, 0.0, 0.0]])
        buffer = ValueBuffer(states, [1.0, -1.0], np.array([1.0, 1.0, 100.0]), k=1)
        # 10 m/s apart is 0.1 normalized, closer than 1 latent unit
        self.assertIs(classify_safety(buffer, StateVec(0.0, 0.0, 0.0)), SafetyLabel.SAFE)

    def test_empty_buffer_is_rejected(self):
        buffer = ValueBuffer(np.zeros((0, 3)), [], ONES)
        with self.assertRaises(ContractViolation):
            classify_safety(buffer, StateVec(0.0, 0.0, 0.0))


class CorrectionActionTests(unittest.TestCase):

    @parameterized.expand([
        ('unanimous', [3, 3, 3, 3, 3], 3),
        ('majority', [2, 2, 5, 5, 5], 5),
        ('tie_to_nearest', [2, 1, 1, 2, 4], 2),
    ])
    def test_vote(self, _, action_ids, expected):
        buffer = CorrectionBuffer(line_states(5), action_ids, ONES, k=5)
        self.assertEqual(correction_action(buffer, StateVec(0.0, 0.0, 0.0)).id, expected)

    def test_unknown_action_is_rejected(self):
        with self.assertRaises(ContractViolation):
            CorrectionBuffer(line_states(2), [0, 8], ONES)


class BuildValueBufferTests(unittest.TestCase):

    def trajectory(self, episode, n, off_road):
        trajectory = Trajectory(episode=episode, off_road=off_road)
        for i in range(n):
            reward = -25.0 if off_road and i == n - 1 else 1.0
            trajectory.push(StateVec(0.01 * i, -0.02 * i, 5.0 + 0.1 * i), reward)
        return trajectory

    def test_values_follow_returns(self):
        trajectories = [self.trajectory(0, 60, True), self.trajectory(1, 60, False)]
        buffer = build_value_buffer(trajectories, 0.95, k=5, min_states=100)
        self.assertEqual(len(buffer), 120)
        self.assertLessEqual(buffer.values[59], -25.0)
        np.testing.assert_allclose(buffer.values[60:], trajectories[1].returns(0.95))
        np.testing.assert_allclose(buffer.scales, buffer.states.std(axis=0))

    def test_too_few_states(self):
        with self.assertRaises(InsufficientDataError):
            build_value_buffer([self.trajectory(0, 10, True)], 0.95, min_states=100)

    def test_zero_variance_dimension_gets_unit_scale(self):
        states = np.array([[0.0, 1.0, 5.0], [1.0, 1.0, 7.0]])
        with self.assertWarns(UserWarning):
            scales, degenerate = compute_scales(states)
        np.testing.assert_array_equal(scales, [0.5, 1.0, 1.0])
        self.assertEqual(degenerate.tolist(), [False, True, False])


class BufferFileTests(unittest.TestCase):

    def test_value_buffer_round_trip(self):
        rng = np.random.default_rng(1)
        buffer = ValueBuffer(rng.normal(size=(20, 3)), rng.normal(size=20), np.array([0.5, 2.0, 3.0]), k=3)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'value_buffer.vbuf')
            buffer.save(path)
            loaded = ValueBuffer.load(path, k=3)
        np.testing.assert_array_equal(loaded.states, buffer.states)
        np.testing.assert_array_equal(loaded.values, buffer.values)
        np.testing.assert_array_equal(loaded.scales, buffer.scales)

    def test_correction_buffer_round_trip(self):
        buffer = CorrectionBuffer(line_states(4), [0, 7, 3, 3], np.array([1.0, 2.0, 4.0]))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'correction_buffer.cbuf')
            buffer.save(path)
            loaded = CorrectionBuffer.load(path)
            with open(path, 'r+b') as f:
                f.seek(8)
                f.write(b'\x00\x01')
            with self.assertRaises(ChecksumMismatch):
                CorrectionBuffer.load(path)
        self.assertEqual(loaded.action_ids.tolist(), [0, 7, 3, 3])
        np.testing.assert_array_equal(loaded.states, buffer.states)


if __name__ == '__main__':
    unittest.main()
