# -*- coding: utf-8 -*-
"""End-to-end runs of the default pipeline.

These take minutes, so they only run with ``L2R_ACCEPTANCE=1`` set.
"""
import dataclasses
import os
import tempfile
import unittest

from l2r_pipeline.configs import PipelineConfig
from l2r_pipeline.harness import Pipeline, cmd_adapt, cmd_evaluate
from l2r_pipeline.harness.pipeline import SEGMENTER_FILE, VAE_FILE
from l2r_pipeline.latent.vae import load_vae
from l2r_pipeline.vision.segmenter import load_segmenter

UNSEEN_TRACK = 11


def directory_bytes(root, skip=('timings.txt',)):
    contents = {}
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            if name in skip:
                continue
            path = os.path.join(dirpath, name)
            with open(path, 'rb') as f:
                contents[os.path.relpath(path, root)] = f.read()
    return contents


@unittest.skipUnless(os.environ.get('L2R_ACCEPTANCE') == '1', "set L2R_ACCEPTANCE=1 to run")
class DefaultPipelineAcceptance(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.cfg = dataclasses.replace(PipelineConfig(), artifact_dir=os.path.join(cls.tmp.name, 'a'))
        cls.ran = Pipeline(cls.cfg).run()

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_perception_models_reach_their_targets(self):
        segmenter = load_segmenter(os.path.join(self.cfg.artifact_dir, SEGMENTER_FILE))
        vae = load_vae(os.path.join(self.cfg.artifact_dir, VAE_FILE))
        self.assertGreaterEqual(segmenter.heldout_accuracy, 0.95)
        self.assertGreaterEqual(vae.heldout_iou, 0.8)

    def test_every_stage_ran_then_caches(self):
        self.assertEqual(len(self.ran), 8)
        self.assertEqual(Pipeline(self.cfg).run(), [])

    def test_training_track_is_driven_safely(self):
        metrics = cmd_evaluate(self.cfg, episodes=5, laps=3)
        self.assertEqual(metrics.success_rate, 1.0)
        self.assertEqual(metrics.off_road_events, 0)

    def test_adaptation_lifts_speed(self):
        adapted = cmd_evaluate(self.cfg, episodes=5, laps=3)
        initial = cmd_evaluate(self.cfg, episodes=5, laps=3, use_adaptation=False)
        self.assertEqual(adapted.success_rate, 1.0)
        self.assertGreaterEqual(adapted.avg_speed_kmh, 1.2 * initial.avg_speed_kmh)

    def test_unseen_track_after_readaptation(self):
        cmd_adapt(self.cfg, track_seed=UNSEEN_TRACK, runs=15)
        metrics = cmd_evaluate(self.cfg, track_seed=UNSEEN_TRACK, episodes=5, laps=3)
        self.assertEqual(metrics.success_rate, 1.0)

    def test_correction_keeps_perturbed_starts_on_track(self):
        corrected = cmd_evaluate(self.cfg, episodes=50, laps=1)
        uncorrected = cmd_evaluate(self.cfg, episodes=50, laps=1, use_correction=False)
        self.assertEqual(corrected.success_rate, 1.0)
        self.assertLess(uncorrected.success_rate, 1.0)

    def test_identical_runs_give_identical_artifacts(self):
        other = os.path.join(self.tmp.name, 'b')
        Pipeline(self.cfg, artifact_dir=other).run()
        first = directory_bytes(self.cfg.artifact_dir)
        second = directory_bytes(other)
        for name in ('evaluations', 'adapted', 'report'):
            first = {k: v for k, v in first.items() if not k.startswith(name + os.sep)}
        self.assertEqual(sorted(first), sorted(second))
        for name in first:
            self.assertEqual(first[name], second[name], name)


if __name__ == '__main__':
    unittest.main()
