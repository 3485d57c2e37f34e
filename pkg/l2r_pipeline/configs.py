# -*- coding: utf-8 -*-
import dataclasses
from dataclasses import field

from .errors import ConfigError


def _check(condition, message):
    if not condition:
        raise ConfigError(message)


@dataclasses.dataclass(slots=True)
class TrackParams:
    """Procedural track generation parameters (meters)."""
    n_control_points: int = 12
    radius_min: float = 60.0
    radius_max: float = 110.0
    half_width_min: float = 5.0
    half_width_max: float = 6.5
    spacing: float = 0.5
    angle_jitter: float = 0.3
    min_turn_radius: float = 15.0
    max_attempts: int = 100

    def __post_init__(self):
        _check(self.n_control_points >= 6, "track.n_control_points must be >= 6")
        _check(0 < self.radius_min <= self.radius_max, "track radius range is empty")
        _check(0 < self.half_width_min <= self.half_width_max, "track half-width range is empty")
        _check(0 < self.spacing <= 1.0, "track.spacing must be in (0, 1]")
        _check(0 <= self.angle_jitter < 0.5, "track.angle_jitter must be in [0, 0.5)")
        _check(self.max_attempts >= 1, "track.max_attempts must be >= 1")


@dataclasses.dataclass(slots=True)
class StartConfig:
    heading_jitter: float = 0.15
    lateral_jitter: float = 0.3
    random_start: bool = False
    initial_speed: float = 0.0

    def __post_init__(self):
        _check(self.heading_jitter >= 0 and self.lateral_jitter >= 0, "start jitters must be >= 0")
        _check(self.initial_speed >= 0, "start.initial_speed must be >= 0")


@dataclasses.dataclass(slots=True)
class DynamicsConfig:
    """Kinematic bicycle constants and episode timing."""
    dt: float = 0.1
    a_max: float = 4.0
    s_max: float = 0.35
    wheelbase: float = 2.5
    v_max: float = 40.0
    episode_cap: int = 2000
    speed_gain: float = 0.5

    def __post_init__(self):
        _check(self.dt > 0, "dynamics.dt must be > 0")
        _check(self.a_max > 0 and self.s_max > 0 and self.wheelbase > 0 and self.v_max > 0,
               "dynamics constants must be > 0")
        _check(self.episode_cap >= 1, "dynamics.episode_cap must be >= 1")
        _check(self.speed_gain > 0, "dynamics.speed_gain must be > 0")


@dataclasses.dataclass(slots=True)
class RewardConfig:
    speed_coeff: float = 0.1
    offroad_cap: float = -25.0
    offroad_slope: float = -5.0


@dataclasses.dataclass(slots=True)
class CameraConfig:
    height: int = 96
    width: int = 128
    cam_height: float = 1.8
    focal_fraction: float = 0.5
    horizon_fraction: float = 0.575
    hood_fraction: float = 0.125
    noise_sigma: float = 0.02
    road_color: tuple[float, ...] = (0.38, 0.38, 0.40)
    grass_color: tuple[float, ...] = (0.22, 0.55, 0.20)
    sky_color: tuple[float, ...] = (0.55, 0.75, 0.95)
    hood_color: tuple[float, ...] = (0.08, 0.08, 0.10)

    def __post_init__(self):
        _check(self.height >= 8 and self.width >= 8, "camera resolution too small")
        _check(0 < self.horizon_fraction < 1 - self.hood_fraction, "camera horizon must sit above the hood")
        _check(self.noise_sigma >= 0, "camera.noise_sigma must be >= 0")
        for name in ('road_color', 'grass_color', 'sky_color', 'hood_color'):
            _check(len(getattr(self, name)) == 3, f"camera.{name} needs 3 components")


@dataclasses.dataclass(slots=True)
class AugmentConfig:
    """Per-transform firing probabilities of the segmenter augmentation recipe."""
    color_jitter: float = 0.2
    hue: float = 0.2
    saturation: float = 0.2
    contrast: float = 0.2
    rgb_shift: float = 0.5
    channel_shuffle: float = 0.5
    clahe: float = 0.2
    sepia: float = 0.2
    flip: float = 0.5
    shift_scale_rotate: float = 0.5
    shift_limit: float = 0.1
    scale_min: float = 0.9
    scale_max: float = 1.1
    rotate_limit: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ('color_jitter', 'hue', 'saturation', 'contrast', 'rgb_shift',
                     'channel_shuffle', 'clahe', 'sepia', 'flip', 'shift_scale_rotate'):
            p = getattr(self, name)
            _check(0.0 <= p <= 1.0, f"augment.{name} must be a probability, got {p}")

    @classmethod
    def disabled(cls):
        return cls(color_jitter=0.0, hue=0.0, saturation=0.0, contrast=0.0, rgb_shift=0.0,
                   channel_shuffle=0.0, clahe=0.0, sepia=0.0, flip=0.0, shift_scale_rotate=0.0)


@dataclasses.dataclass(slots=True)
class SegmenterConfig:
    n_frames: int = 400
    hidden_channels: int = 8
    learning_rate: float = 0.5
    momentum: float = 0.9
    batch_size: int = 16
    max_epochs: int = 30
    holdout_fraction: float = 0.2
    target_accuracy: float = 0.95
    failure_accuracy: float = 0.90
    min_pairs: int = 200
    seed: int = 0

    def __post_init__(self):
        _check(self.hidden_channels >= 1, "segmenter.hidden_channels must be >= 1")
        _check(self.learning_rate > 0 and self.batch_size >= 1 and self.max_epochs >= 1,
               "segmenter hyperparameters must be positive")
        _check(0 < self.holdout_fraction < 1, "segmenter.holdout_fraction must be in (0, 1)")


@dataclasses.dataclass(slots=True)
class VaeConfig:
    latent_dim: int = 2
    input_shape: tuple[int, ...] = (28, 28)
    encoder_hidden: tuple[int, ...] = (256, 64)
    kl_weight: float = 1.0
    learning_rate: float = 0.002
    momentum: float = 0.9
    clip_norm: float = 50.0
    epochs: int = 120
    batch_size: int = 32
    holdout_fraction: float = 0.1
    target_iou: float = 0.8
    failure_iou: float = 0.7
    min_masks: int = 500
    min_unique_fraction: float = 0.05
    collect_episodes: int = 40
    collect_speed: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        _check(self.latent_dim == 2, "vae.latent_dim is fixed at 2")
        _check(len(self.input_shape) == 2 and min(self.input_shape) >= 1, "vae.input_shape must be 2-D")
        _check(all(h >= 1 for h in self.encoder_hidden), "vae.encoder_hidden sizes must be >= 1")
        _check(self.kl_weight >= 0, "vae.kl_weight must be >= 0")
        _check(self.learning_rate > 0 and self.epochs >= 1 and self.batch_size >= 1,
               "vae hyperparameters must be positive")
        _check(0 < self.holdout_fraction < 1, "vae.holdout_fraction must be in (0, 1)")


@dataclasses.dataclass(slots=True)
class PolicyConfig:
    gamma: float = 0.95
    k: int = 5
    base_target_speed: float = 10.0
    n_base_episodes: int = 20
    n_correction_episodes: int = 20
    min_states: int = 100

    def __post_init__(self):
        _check(0 <= self.gamma < 1, "policy.gamma must be in [0, 1)")
        _check(self.k >= 1, "policy.k must be >= 1")
        _check(self.base_target_speed >= 0, "policy.base_target_speed must be >= 0")


@dataclasses.dataclass(slots=True)
class AdaptConfig:
    segment_length: float = 25.0
    v_init: float = 8.0
    v_min: float = 4.0
    v_max: float = 30.0
    delta_up: float = 1.0
    delta_down: float = 2.0
    failure_window: int = 1
    n_runs: int = 15
    wall_budget: float = 300.0

    def __post_init__(self):
        _check(self.segment_length > 0, "adapt.segment_length must be > 0")
        _check(0 <= self.v_min <= self.v_init <= self.v_max, "adapt needs v_min <= v_init <= v_max")
        _check(self.delta_up >= 0 and self.delta_down >= 0, "adapt deltas must be >= 0")
        _check(self.failure_window >= 1, "adapt.failure_window must be >= 1")
        _check(self.n_runs >= 0 and self.wall_budget > 0, "adapt budget must be positive")


@dataclasses.dataclass(slots=True)
class EvaluateConfig:
    episodes: int = 5
    laps: int = 3

    def __post_init__(self):
        _check(self.episodes >= 1 and self.laps >= 1, "evaluate.episodes and evaluate.laps must be >= 1")


@dataclasses.dataclass(slots=True)
class PipelineConfig:
    seed: int = 7
    artifact_dir: str = 'artifacts'
    track_seed: int = 7
    extra_track_seeds: tuple[int, ...] = ()
    track: TrackParams = field(default_factory=TrackParams)
    start: StartConfig = field(default_factory=StartConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    vae: VaeConfig = field(default_factory=VaeConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)

    @property
    def train_track_seeds(self):
        return (self.track_seed,) + tuple(s for s in self.extra_track_seeds if s != self.track_seed)
