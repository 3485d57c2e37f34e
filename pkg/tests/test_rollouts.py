# -*- coding: utf-8 -*-
import unittest

import numpy as np

from l2r_pipeline.configs import StartConfig
from l2r_pipeline.domain import DISCRETE_ACTIONS, SafetyLabel, StateVec, discrete_action
from l2r_pipeline.errors import CollectionError, ExplorationFailure
from l2r_pipeline.policy.buffers import ValueBuffer
from l2r_pipeline.policy.rollouts import CorrectionRecorder, collect_base_rollouts, explore_corrections
from l2r_pipeline.sim.env import RaceEnv
from l2r_pipeline.sim.track import make_stadium_track


def speed_only(image, speed):
    return StateVec(0.0, 0.0, speed)


class FirstStraightEnv(RaceEnv):
    """Random starts restricted to the first 4 km of the track."""

    @property
    def track_length(self):
        return 4000.0


def speed_value_buffer(threshold, k=1):
    """Safe at speeds >= ``threshold``, unsafe below."""
    speeds = np.arange(0.0, 21.0)
    states = np.column_stack([np.zeros_like(speeds), np.zeros_like(speeds), speeds])
    values = np.where(speeds >= threshold, 1.0, -1.0)
    return ValueBuffer(states, values, np.ones(3), k=k)


class CorrectionRecorderTests(unittest.TestCase):

    def test_safe_episode_contributes_nothing(self):
        recorder = CorrectionRecorder(np.random.default_rng(0))
        for i in range(10):
            self.assertIsNone(recorder.observe(StateVec(i, 0, 0), SafetyLabel.SAFE))
        recorder.end_episode()
        self.assertEqual(recorder.entries, [])

    def test_recovered_segment_is_kept_with_one_action(self):
        recorder = CorrectionRecorder(np.random.default_rng(0))
        recorder.observe(StateVec(0, 0, 0), SafetyLabel.SAFE)
        held = {recorder.observe(StateVec(i, 0, 0), SafetyLabel.UNSAFE) for i in range(7)}
        recorder.observe(StateVec(9, 0, 0), SafetyLabel.SAFE)
        self.assertEqual(len(held), 1)
        self.assertEqual(len(recorder.entries), 7)
        self.assertEqual({a for _, a in recorder.entries}, held)
        self.assertIn(held.pop(), range(len(DISCRETE_ACTIONS)))

    def test_segment_ending_the_episode_is_discarded(self):
        recorder = CorrectionRecorder(np.random.default_rng(0))
        for i in range(4):
            recorder.observe(StateVec(i, 0, 0), SafetyLabel.UNSAFE)
        recorder.end_episode()
        self.assertEqual(recorder.entries, [])
        self.assertIsNone(recorder.held)

    def test_each_unsafe_segment_draws_a_new_action(self):
        recorder = CorrectionRecorder(np.random.default_rng(5))
        for segment in range(20):
            recorder.observe(StateVec(segment, 0, 0), SafetyLabel.UNSAFE)
            recorder.observe(StateVec(segment, 1, 0), SafetyLabel.SAFE)
        self.assertEqual(len(recorder.entries), 20)
        self.assertGreater(len({a for _, a in recorder.entries}), 1)


class BaseRolloutTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.track = make_stadium_track(straight_length=200.0, radius=40.0)

    def test_rollouts_record_every_step(self):
        env = RaceEnv(self.track, provide_masks=False, max_steps=20)
        rows = []
        trajectories = collect_base_rollouts([env], speed_only, 3, 10.0, seed=1, latent_rows=rows)
        self.assertEqual(len(trajectories), 3)
        self.assertEqual(len(rows), sum(len(t) for t in trajectories))
        for t in trajectories:
            self.assertTrue(1 <= len(t) <= 20)
            self.assertEqual(len(t.rewards), len(t.states))
            if t.off_road:
                self.assertLessEqual(t.rewards[-1], -25.0)

    def test_straight_start_on_straight_road_reaches_the_cap(self):
        track = make_stadium_track(straight_length=5000.0, radius=40.0)
        start = StartConfig(heading_jitter=0.0, lateral_jitter=0.0)
        env = FirstStraightEnv(track, start=start, provide_masks=False, max_steps=100)
        trajectories = collect_base_rollouts([env], speed_only, 2, 10.0, seed=3)
        for t in trajectories:
            self.assertFalse(t.off_road)
            self.assertEqual(len(t), 100)

    def test_rollouts_are_seeded(self):
        a = collect_base_rollouts([RaceEnv(self.track, provide_masks=False, max_steps=15)], speed_only, 2, 8.0, 4)
        b = collect_base_rollouts([RaceEnv(self.track, provide_masks=False, max_steps=15)], speed_only, 2, 8.0, 4)
        self.assertEqual([t.rewards for t in a], [t.rewards for t in b])

    def test_no_episode_is_a_collection_error(self):
        with self.assertRaises(CollectionError):
            collect_base_rollouts([RaceEnv(self.track, provide_masks=False)], speed_only, 0, 10.0, seed=1)


class ExploreCorrectionsTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.track = make_stadium_track(straight_length=300.0, radius=40.0)

    def env(self):
        start = StartConfig(heading_jitter=0.0, lateral_jitter=0.0)
        return RaceEnv(self.track, start=start, provide_masks=False, max_steps=60)

    def test_only_recovering_actions_are_kept(self):
        # starting at rest is unsafe; only full-speed corrections can push past 6 m/s
        buffer = explore_corrections([self.env()], speed_only, speed_value_buffer(6.0), 12,
                                     np.random.default_rng(0), seed=2, base_target_speed=10.0)
        self.assertGreater(len(buffer), 0)
        for action_id in buffer.action_ids:
            self.assertEqual(discrete_action(action_id).target_speed_scale, 1.0)
        self.assertTrue(np.all(buffer.states[:, 2] < 6.0))

    def test_never_unsafe_is_an_exploration_failure(self):
        with self.assertRaises(ExplorationFailure):
            explore_corrections([self.env()], speed_only, speed_value_buffer(-1.0), 2,
                                np.random.default_rng(0), seed=2)


if __name__ == '__main__':
    unittest.main()
