# -*- coding: utf-8 -*-
import dataclasses
import json
import os
import tempfile
import unittest

from l2r_pipeline.configs import PipelineConfig, PolicyConfig, VaeConfig
from l2r_pipeline.errors import MissingArtifactError, StageError, TrainingFailure
from l2r_pipeline.harness.pipeline import STAGE_NAMES, Pipeline


class StubPipeline(Pipeline):
    """Pipeline whose stages write one small deterministic file each."""

    failing = None

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.calls = []

    def _stub(self, name):
        self.calls.append(name)
        if name == self.failing:
            raise TrainingFailure(f"{name} did not converge", [3.0, 2.5])
        path = self.store.path(f"{name}.out")
        with open(path, 'w', encoding='utf-8') as f:
            f.write(f"{name} output\n")
        return [path]


for _name in STAGE_NAMES:
    setattr(StubPipeline, '_stage_' + _name, lambda self, _n=_name: self._stub(_n))


class PipelineCacheTests(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.cfg = dataclasses.replace(PipelineConfig(), artifact_dir=self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_pipeline(self, cfg=None, force=False):
        pipeline = StubPipeline(cfg or self.cfg, force=force)
        pipeline.run()
        return pipeline

    def test_first_run_runs_every_stage_in_order(self):
        pipeline = self.run_pipeline()
        self.assertEqual(pipeline.calls, list(STAGE_NAMES))
        self.assertTrue(os.path.exists(pipeline.store.path('pipeline.cfg')))
        self.assertTrue(os.path.exists(pipeline.store.path('timings.txt')))
        self.assertEqual(sorted(pipeline.store.manifest), sorted(('config',) + STAGE_NAMES))

    def test_second_run_is_fully_cached(self):
        self.run_pipeline()
        self.assertEqual(self.run_pipeline().calls, [])

    def test_force_reruns_everything(self):
        self.run_pipeline()
        self.assertEqual(self.run_pipeline(force=True).calls, list(STAGE_NAMES))

    def test_corrupt_file_reruns_only_its_stage(self):
        pipeline = self.run_pipeline()
        with open(pipeline.store.path('segmenter.out'), 'a', encoding='utf-8') as f:
            f.write('garbage')
        self.assertEqual(self.run_pipeline().calls, ['segmenter'])

    def test_deleted_file_reruns_its_stage(self):
        pipeline = self.run_pipeline()
        os.remove(pipeline.store.path('vae.out'))
        self.assertEqual(self.run_pipeline().calls, ['vae'])

    def test_policy_change_reruns_downstream_stages(self):
        self.run_pipeline()
        cfg = dataclasses.replace(self.cfg, policy=PolicyConfig(gamma=0.9))
        self.assertEqual(self.run_pipeline(cfg).calls,
                         ['value_buffer', 'correction_buffer', 'speed_model', 'evaluation'])

    def test_vae_change_reruns_vae_stages(self):
        self.run_pipeline()
        cfg = dataclasses.replace(self.cfg, vae=VaeConfig(epochs=5))
        self.assertEqual(self.run_pipeline(cfg).calls, ['vae_data', 'vae'])

    def test_seed_change_reruns_everything(self):
        self.run_pipeline()
        cfg = dataclasses.replace(self.cfg, seed=8)
        self.assertEqual(self.run_pipeline(cfg).calls, list(STAGE_NAMES))

    def test_failing_stage_is_wrapped_with_telemetry(self):
        StubPipeline.failing = 'vae'
        try:
            pipeline = StubPipeline(self.cfg)
            with self.assertRaises(StageError) as ctx:
                pipeline.run()
        finally:
            StubPipeline.failing = None
        error = ctx.exception
        self.assertEqual(error.stage, 'vae')
        self.assertIsInstance(error.cause, TrainingFailure)
        with open(error.telemetry_path, 'r', encoding='utf-8') as f:
            telemetry = json.load(f)
        self.assertEqual(telemetry['loss_curve'], [3.0, 2.5])
        self.assertNotIn('vae', pipeline.store.manifest)
        self.assertIn('segmenter', pipeline.store.manifest)
        self.assertEqual(self.run_pipeline().calls, ['vae', 'value_buffer', 'correction_buffer',
                                                     'speed_model', 'evaluation'])

    def test_other_track_needs_adaptation_first(self):
        pipeline = self.run_pipeline()
        with self.assertRaises(MissingArtifactError) as ctx:
            pipeline.speed_model_for(self.cfg.track_seed + 1)
        self.assertIn('adapt --track-seed', str(ctx.exception))


if __name__ == '__main__':
    unittest.main()
