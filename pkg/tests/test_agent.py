# -*- coding: utf-8 -*-
import unittest

import numpy as np

from l2r_pipeline.adapt import SegmentSpeedModel
from l2r_pipeline.configs import AdaptConfig
from l2r_pipeline.domain import Action, SafetyLabel, StateVec
from l2r_pipeline.errors import ContractViolation
from l2r_pipeline.latent.vae import VaeModel
from l2r_pipeline.policy.agent import Perception, RaceAgent, agent_act
from l2r_pipeline.policy.buffers import CorrectionBuffer, ValueBuffer
from l2r_pipeline.vision.preprocess import PipelineMode
from l2r_pipeline.vision.segmenter import SegmenterModel

ONES = np.ones(3)
SAFE = StateVec(0.0, 0.0, 10.0)
UNSAFE = StateVec(10.0, 0.0, 10.0)


def buffers(correction_id=2):
    """Safe around z1=0, unsafe around z1=10; every correction votes ``correction_id``."""
    value = ValueBuffer(np.array([[0.0, 0.0, 10.0], [10.0, 0.0, 10.0]]), [1.0, -1.0], ONES, k=1)
    states = np.array([[10.0, 0.0, 10.0 + i] for i in range(5)])
    correction = CorrectionBuffer(states, [correction_id] * 5, ONES, k=5)
    return value, correction


class AgentActTests(unittest.TestCase):

    def test_safe_at_target_speed_is_idle(self):
        value, correction = buffers()
        decision = agent_act(SAFE, value, correction, base_target_speed=10.0)
        self.assertEqual(decision.action, Action(0.0, 0.0))
        self.assertIs(decision.label, SafetyLabel.SAFE)
        self.assertIsNone(decision.correction_id)

    def test_unsafe_uses_voted_correction(self):
        # action 2 steers -0.5 at half the target speed
        value, correction = buffers(correction_id=2)
        decision = agent_act(UNSAFE, value, correction, base_target_speed=10.0, speed_gain=0.5)
        self.assertIs(decision.label, SafetyLabel.UNSAFE)
        self.assertEqual(decision.correction_id, 2)
        self.assertEqual(decision.action.steering, -0.5)
        self.assertEqual(decision.target_speed, 5.0)
        self.assertEqual(decision.action.acceleration, -1.0)

    def test_returns_to_base_policy_once_safe(self):
        value, correction = buffers(correction_id=7)
        trace = [agent_act(s, value, correction).action.steering for s in (SAFE, UNSAFE, SAFE)]
        self.assertEqual(trace, [0.0, 1.0, 0.0])

    def test_correction_can_be_disabled(self):
        value, correction = buffers()
        decision = agent_act(UNSAFE, value, correction, use_correction=False)
        self.assertIs(decision.label, SafetyLabel.UNSAFE)
        self.assertEqual(decision.action.steering, 0.0)
        decision = agent_act(UNSAFE, value, None)
        self.assertEqual(decision.action.steering, 0.0)

    def test_speed_model_sets_target(self):
        value, correction = buffers()
        model = SegmentSpeedModel.fresh(100.0, AdaptConfig(segment_length=25.0)).with_targets([10, 12, 14, 16])
        decision = agent_act(StateVec(0.0, 0.0, 12.0), value, correction, speed_model=model, distance=30.0)
        self.assertEqual(decision.target_speed, 12.0)
        self.assertEqual(decision.action, Action(0.0, 0.0))


class RaceAgentTests(unittest.TestCase):

    def test_distance_is_integrated_from_speed(self):
        value, correction = buffers()
        model = SegmentSpeedModel.fresh(100.0, AdaptConfig(segment_length=25.0)).with_targets([10, 12, 14, 16])
        agent = RaceAgent(lambda image, speed: StateVec(0.0, 0.0, speed), value, correction, model)
        self.assertEqual(agent.act(None, 10.0).target_speed, 10.0)
        for _ in range(26):
            agent.advance(10.0, 0.1)
        self.assertAlmostEqual(agent.distance, 26.0)
        self.assertEqual(agent.act(None, 10.0).target_speed, 12.0)
        agent.use_speed_model = False
        self.assertEqual(agent.act(None, 10.0).target_speed, agent.base_target_speed)
        agent.reset()
        self.assertEqual(agent.distance, 0.0)

    def test_targets_follow_the_track_on_later_laps(self):
        value, correction = buffers()
        model = SegmentSpeedModel.fresh(90.0, AdaptConfig(segment_length=25.0)).with_targets([10, 12, 14, 16])
        agent = RaceAgent(lambda image, speed: StateVec(0.0, 0.0, speed), value, correction, model)
        for _ in range(120):
            agent.advance(10.0, 0.1)
        self.assertAlmostEqual(agent.distance, 120.0)
        self.assertEqual(agent.act(None, 10.0).target_speed, 12.0)


class PerceptionTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.vae = VaeModel.initialize((28, 28), (8,), np.random.default_rng(0))

    def test_from_mask_in_training_mode(self):
        perception = Perception(None, self.vae, PipelineMode.TRAINING)
        mask = np.zeros((96, 128), dtype=np.uint8)
        mask[40:84, 40:90] = 1
        s = perception.from_mask(mask, 7.5)
        self.assertIsInstance(s, StateVec)
        self.assertEqual(s.speed, 7.5)
        self.assertTrue(np.all(np.isfinite(s.as_array())))

    def test_ground_truth_masks_are_refused_in_evaluation(self):
        perception = Perception(None, self.vae)
        with self.assertRaises(ContractViolation):
            perception.from_mask(np.zeros((96, 128)), 5.0)

    def test_untrained_segmenter_is_refused(self):
        perception = Perception(SegmenterModel.untrained(), self.vae)
        with self.assertRaises(ContractViolation):
            perception(np.zeros((96, 128, 3)), 5.0)


if __name__ == '__main__':
    unittest.main()
