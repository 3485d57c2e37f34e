# -*- coding: utf-8 -*-
"""Stage orchestration: collect, train, build buffers, adapt, evaluate.

Every stage writes its files into the artifact directory and records them
in the manifest under a key derived from its config lines and the
checksums of its inputs. A stage whose key and files are unchanged is
skipped.
"""
import dataclasses
import json
import logging
import os
import shutil
import time

import numpy as np

from ..adapt import SegmentSpeedModel, load_speed_model, run_adaptation, save_speed_model, save_telemetry
from ..configfile import dump_config, section_lines
from ..errors import (AdaptationError, MissingArtifactError, NumericalFailure, StageError,
                      TrainingFailure)
from ..latent.collect import collect_vae_dataset, write_latent_dump
from ..latent.vae import load_vae, save_vae, train_vae
from ..policy.agent import Perception, RaceAgent
from ..policy.buffers import CorrectionBuffer, ValueBuffer, build_value_buffer
from ..policy.rollouts import collect_base_rollouts, explore_corrections
from ..sim.env import RaceEnv
from ..sim.track import generate_track, save_track_csv
from ..utils import derive_seed, ensure_dir, log_function, make_rng, sha256_bytes
from ..vision.dataset import build_segmenter_dataset, collect_segmenter_frames, load_frames, save_frames
from ..vision.preprocess import PipelineMode
from ..vision.segmenter import load_segmenter, save_segmenter, train_segmenter
from .artifacts import ArtifactStore, stage_key
from .evaluate import evaluate_agent, write_metrics, write_timings

logger = logging.getLogger(__name__)

ENV_SECTIONS = ('track_seed', 'extra_track_seeds', 'track', 'start', 'dynamics', 'reward', 'camera')

CONFIG_FILE = 'pipeline.cfg'
VAE_MASKS = 'vae_masks.npy'
FRAMES_DIR = 'segmenter_frames'
SEGMENTER_FILE = 'segmenter.seg'
VAE_FILE = 'vae.vae'
VALUE_BUFFER_FILE = 'value_buffer.vbuf'
CORRECTION_BUFFER_FILE = 'correction_buffer.cbuf'
LATENT_DUMP = 'latent_dump.csv'
BASE_ROLLOUTS = 'base_rollouts.csv'
SPEED_MODEL_FILE = 'speed_model.csv'
ADAPT_TELEMETRY = 'adapt_telemetry.csv'
ADAPTED_DIR = 'adapted'
EVALUATIONS_DIR = 'evaluations'


@dataclasses.dataclass(frozen=True)
class StageSpec:
    name: str
    sections: tuple
    upstream: tuple = ()


STAGES = (
    StageSpec('vae_data', ENV_SECTIONS + ('vae',)),
    StageSpec('segmenter_data', ENV_SECTIONS + ('segmenter',)),
    StageSpec('segmenter', ('augment', 'segmenter'), ('segmenter_data',)),
    StageSpec('vae', ('vae',), ('vae_data',)),
    StageSpec('value_buffer', ENV_SECTIONS + ('policy',), ('segmenter', 'vae')),
    StageSpec('correction_buffer', ENV_SECTIONS + ('policy',), ('segmenter', 'vae', 'value_buffer')),
    StageSpec('speed_model', ENV_SECTIONS + ('policy', 'adapt'),
              ('segmenter', 'vae', 'value_buffer', 'correction_buffer')),
    StageSpec('evaluation', ENV_SECTIONS + ('policy', 'adapt', 'evaluate'),
              ('segmenter', 'vae', 'value_buffer', 'correction_buffer', 'speed_model')),
)
STAGE_NAMES = tuple(s.name for s in STAGES)


def speed_model_name(track_seed):
    return f"speed_model_seed{track_seed}.csv"


class Pipeline:
    """Runs the stages of one configuration against one artifact directory.

    :param cfg: the resolved configuration
    :type cfg: l2r_pipeline.configs.PipelineConfig
    :param force: re-run stages even when their cached artifacts are valid
    """

    def __init__(self, cfg, artifact_dir=None, force=False, clock=time.monotonic):
        self.cfg = cfg
        self.store = ArtifactStore(artifact_dir or cfg.artifact_dir)
        self.force = force
        self.clock = clock
        self.timings = {}
        self._tracks = {}

    # environments

    def track(self, seed):
        if seed not in self._tracks:
            self._tracks[seed] = generate_track(seed, self.cfg.track)
        return self._tracks[seed]

    def make_env(self, seed, provide_masks, lap_quota=0, max_steps=None):
        cfg = self.cfg
        return RaceEnv(self.track(seed), dynamics=cfg.dynamics, reward=cfg.reward, camera=cfg.camera,
                       start=cfg.start, provide_masks=provide_masks, lap_quota=lap_quota, max_steps=max_steps)

    def training_envs(self, provide_masks):
        return [self.make_env(seed, provide_masks) for seed in self.cfg.train_track_seeds]

    # stage bookkeeping

    def config_text(self, spec):
        lines = section_lines(self.cfg, 'seed')
        for section in spec.sections:
            lines.extend(section_lines(self.cfg, section))
        return '\n'.join(lines)

    def stage_key(self, spec):
        return stage_key(spec.name, self.config_text(spec), self.store.checksums(spec.upstream))

    def _write_config(self):
        path = self.store.path(CONFIG_FILE)
        text = dump_config(self.cfg)
        ensure_dir(self.store.root)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        self.store.record('config', sha256_bytes(text.encode('utf-8')), [path])

    def _write_stage_telemetry(self, stage, error):
        record = {'stage': stage, 'error': type(error).__name__, 'message': str(error)}
        if isinstance(error, TrainingFailure):
            record['loss_curve'] = [float(v) for v in error.loss_curve]
        if isinstance(error, NumericalFailure):
            record['batch_index'] = error.batch_index
        if isinstance(error, AdaptationError):
            record['runs'] = [dataclasses.asdict(t) for t in error.telemetry]
        path = self.store.path('telemetry', f"{stage}.json")
        ensure_dir(os.path.dirname(path))
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(record, f, sort_keys=True, indent=2)
            f.write('\n')
        return path

    def run_stage(self, spec):
        """Run one stage unless its cached artifacts are valid; returns True when it ran."""
        key = self.stage_key(spec)
        if not self.force and self.store.is_fresh(spec.name, key):
            logger.info("stage %s: cached", spec.name)
            return False
        logger.info("stage %s: running", spec.name)
        self.store.forget(spec.name)
        started = self.clock()
        try:
            paths = getattr(self, '_stage_' + spec.name)()
        except Exception as e:
            telemetry = self._write_stage_telemetry(spec.name, e)
            raise StageError(spec.name, e, telemetry) from e
        self.store.record(spec.name, key, paths)
        self.timings[spec.name] = self.clock() - started
        return True

    @log_function
    def run(self):
        """Run every stage in order; returns the names of the stages that ran."""
        self._write_config()
        ran = []
        try:
            for spec in STAGES:
                if self.run_stage(spec):
                    ran.append(spec.name)
        finally:
            if self.timings:
                write_timings(self.store.path('timings.txt'), self.timings)
        logger.info("pipeline finished: %d stage(s) ran, %d cached", len(ran), len(STAGES) - len(ran))
        return ran

    # loaders shared by the stages and the commands

    def perception(self):
        segmenter = load_segmenter(self.store.require('segmenter', SEGMENTER_FILE))
        vae = load_vae(self.store.require('vae', VAE_FILE))
        return Perception(segmenter, vae, PipelineMode.EVALUATION)

    def value_buffer(self):
        return ValueBuffer.load(self.store.require('value_buffer', VALUE_BUFFER_FILE), self.cfg.policy.k)

    def correction_buffer(self):
        return CorrectionBuffer.load(self.store.require('correction_buffer', CORRECTION_BUFFER_FILE),
                                     self.cfg.policy.k)

    def agent(self, speed_model=None, use_correction=True, use_speed_model=True):
        policy = self.cfg.policy
        return RaceAgent(self.perception(), self.value_buffer(), self.correction_buffer(), speed_model,
                         base_target_speed=policy.base_target_speed, speed_gain=self.cfg.dynamics.speed_gain,
                         use_correction=use_correction, use_speed_model=use_speed_model)

    # stages

    def _stage_vae_data(self):
        cfg = self.cfg
        masks = collect_vae_dataset(self.training_envs(True), cfg.vae.collect_episodes, cfg.vae.collect_speed,
                                    derive_seed(cfg.seed, 'vae_data'), cfg.dynamics.speed_gain, cfg.vae)
        path = self.store.path(VAE_MASKS)
        np.save(path, masks)
        paths = [path]
        ensure_dir(self.store.path('tracks'))
        for seed in cfg.train_track_seeds:
            track_path = self.store.path('tracks', f"track_{seed}.csv")
            save_track_csv(self.track(seed), track_path)
            paths.append(track_path)
        return paths

    def _stage_segmenter_data(self):
        cfg = self.cfg
        images, masks = collect_segmenter_frames(self.training_envs(True), cfg.segmenter.n_frames,
                                                 derive_seed(cfg.seed, 'segmenter_data'),
                                                 speed_gain=cfg.dynamics.speed_gain)
        directory = self.store.path(FRAMES_DIR)
        if os.path.isdir(directory):
            shutil.rmtree(directory)
        return save_frames(directory, images, masks)

    def _stage_segmenter(self):
        cfg = self.cfg
        self.store.verify_stage('segmenter_data')
        images, masks = load_frames(self.store.path(FRAMES_DIR))
        x, y = build_segmenter_dataset(images, masks, cfg.augment,
                                       make_rng(cfg.seed, 'augment', cfg.augment.rng_seed))
        model = train_segmenter(x, y, cfg.segmenter, make_rng(cfg.seed, 'segmenter', cfg.segmenter.seed))
        path = self.store.path(SEGMENTER_FILE)
        save_segmenter(model, path)
        return [path]

    def _stage_vae(self):
        cfg = self.cfg
        masks = np.load(self.store.require('vae_data', VAE_MASKS))
        model = train_vae(masks, cfg.vae, make_rng(cfg.seed, 'vae', cfg.vae.rng_seed))
        path = self.store.path(VAE_FILE)
        save_vae(model, path)
        return [path]

    def _stage_value_buffer(self):
        cfg = self.cfg
        rows = []
        trajectories = collect_base_rollouts(self.training_envs(False), self.perception(),
                                             cfg.policy.n_base_episodes, cfg.policy.base_target_speed,
                                             derive_seed(cfg.seed, 'value_buffer'), cfg.dynamics.speed_gain,
                                             latent_rows=rows)
        buffer = build_value_buffer(trajectories, cfg.policy.gamma, cfg.policy.k, cfg.policy.min_states)
        buffer_path = self.store.path(VALUE_BUFFER_FILE)
        buffer.save(buffer_path)
        dump_path = self.store.path(LATENT_DUMP)
        write_latent_dump(dump_path, rows)
        rollouts_path = self.store.path(BASE_ROLLOUTS)
        with open(rollouts_path, 'w', encoding='utf-8') as f:
            f.write('episode,steps,off_road,initial_return\n')
            for t in trajectories:
                initial = t.returns(cfg.policy.gamma)[0] if len(t) else 0.0
                f.write(f"{t.episode},{len(t)},{int(t.off_road)},{initial!r}\n")
        return [buffer_path, dump_path, rollouts_path]

    def _stage_correction_buffer(self):
        cfg = self.cfg
        buffer = explore_corrections(self.training_envs(False), self.perception(), self.value_buffer(),
                                     cfg.policy.n_correction_episodes, make_rng(cfg.seed, 'correction'),
                                     derive_seed(cfg.seed, 'correction_buffer'),
                                     base_target_speed=cfg.policy.base_target_speed,
                                     speed_gain=cfg.dynamics.speed_gain, k=cfg.policy.k)
        path = self.store.path(CORRECTION_BUFFER_FILE)
        buffer.save(path)
        return [path]

    def adapt(self, track_seed, n_runs, model_path, telemetry_path):
        """Adapt a fresh speed model on ``track_seed`` and write it with its run telemetry."""
        cfg = self.cfg
        env = self.make_env(track_seed, provide_masks=False, lap_quota=1)
        model = SegmentSpeedModel.fresh(env.track_length, cfg.adapt)
        agent = self.agent(model)
        model, telemetry = run_adaptation(env, agent, model, n_runs, cfg.adapt.wall_budget,
                                          derive_seed(cfg.seed, 'speed_model', track_seed),
                                          cfg.adapt.failure_window, clock=self.clock)
        save_speed_model(model, model_path)
        save_telemetry(telemetry, telemetry_path)
        return model

    def _stage_speed_model(self):
        model_path = self.store.path(SPEED_MODEL_FILE)
        telemetry_path = self.store.path(ADAPT_TELEMETRY)
        self.adapt(self.cfg.track_seed, self.cfg.adapt.n_runs, model_path, telemetry_path)
        return [model_path, telemetry_path]

    def speed_model_for(self, track_seed):
        """The adapted speed model of a track: the pipeline's own for the training track."""
        if track_seed == self.cfg.track_seed:
            path = self.store.require('speed_model', SPEED_MODEL_FILE)
        else:
            path = self.store.path(ADAPTED_DIR, speed_model_name(track_seed))
            if not os.path.exists(path):
                raise MissingArtifactError(f"adapt --track-seed {track_seed}", path)
        return load_speed_model(path, self.cfg.adapt, track_length=self.track(track_seed).total_length)

    def evaluate(self, track_seed, episodes, laps, use_correction=True, use_adaptation=True):
        env = self.make_env(track_seed, provide_masks=False, lap_quota=laps,
                            max_steps=self.cfg.dynamics.episode_cap * laps)
        if use_adaptation:
            model = self.speed_model_for(track_seed)
        else:
            model = SegmentSpeedModel.fresh(env.track_length, self.cfg.adapt)
        agent = self.agent(model, use_correction=use_correction)
        return evaluate_agent(env, agent, episodes, derive_seed(self.cfg.seed, 'evaluation', track_seed), laps,
                              clock=self.clock)

    def _stage_evaluation(self):
        cfg = self.cfg
        metrics = self.evaluate(cfg.track_seed, cfg.evaluate.episodes, cfg.evaluate.laps)
        self.timings['evaluation_episodes'] = metrics.wall_time
        return write_metrics(metrics, self.store.root)


def cmd_pipeline(cfg, force=False):
    """Run every stage; returns the artifact store."""
    pipeline = Pipeline(cfg, force=force)
    pipeline.run()
    return pipeline.store


def cmd_adapt(cfg, track_seed=None, runs=None):
    """Re-adapt the speed model on a track, reusing the trained perception and buffers."""
    pipeline = Pipeline(cfg)
    track_seed = cfg.track_seed if track_seed is None else track_seed
    n_runs = cfg.adapt.n_runs if runs is None else runs
    directory = ensure_dir(pipeline.store.path(ADAPTED_DIR))
    model = pipeline.adapt(track_seed, n_runs, os.path.join(directory, speed_model_name(track_seed)),
                           os.path.join(directory, f"adapt_telemetry_seed{track_seed}.csv"))
    logger.info("adapted %d segments on track %d: mean target %.2f m/s",
                model.segment_count, track_seed, sum(model.targets) / model.segment_count)
    return model


def cmd_evaluate(cfg, track_seed=None, episodes=None, laps=None, use_correction=True, use_adaptation=True):
    """Evaluate the trained agent; writes metrics under ``evaluations/`` and returns them."""
    pipeline = Pipeline(cfg)
    track_seed = cfg.track_seed if track_seed is None else track_seed
    episodes = cfg.evaluate.episodes if episodes is None else episodes
    laps = cfg.evaluate.laps if laps is None else laps
    metrics = pipeline.evaluate(track_seed, episodes, laps, use_correction, use_adaptation)
    name = f"seed{track_seed}"
    if not use_correction:
        name += '_no-correction'
    if not use_adaptation:
        name += '_no-adaptation'
    directory = pipeline.store.path(EVALUATIONS_DIR, name)
    write_metrics(metrics, directory)
    write_timings(os.path.join(directory, 'timings.txt'), {'evaluation_episodes': metrics.wall_time})
    return metrics


__all__ = ['STAGES', 'STAGE_NAMES', 'Pipeline', 'cmd_pipeline', 'cmd_adapt', 'cmd_evaluate']
