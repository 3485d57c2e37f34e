# -*- coding: utf-8 -*-
import csv
import logging
import math

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from ..configs import CameraConfig, DynamicsConfig, RewardConfig, StartConfig
from ..domain import Action, CarState
from ..utils import wrap_angle
from . import dynamics as dyn
from .camera import Camera

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ['step', 'x', 'y', 'heading', 'speed', 'steering', 'accel', 'reward', 'off_road']


class RaceEnv(gym.Env):
    """Single-car racing environment on a fixed track.

    Observations are ego-view camera images. ``terminated`` means the car
    left the road; ``truncated`` means the step cap or the lap quota was
    reached. The ground-truth road mask is only exposed through ``info``
    when the environment was built with ``provide_masks=True``.

    :param track: the track to drive on
    :type track: l2r_pipeline.sim.track.TrackSpec
    :param lap_quota: laps after which the episode ends successfully, 0 for no quota
    :param max_steps: step cap, defaults to ``dynamics.episode_cap``
    """

    metadata = {"render_modes": ["rgb_array"], "render_fps": 10}

    def __init__(self, track, dynamics=None, reward=None, camera=None, start=None,
                 provide_masks=True, lap_quota=0, max_steps=None, render_mode=None):
        super().__init__()
        self.track = track
        self.dynamics = dynamics or DynamicsConfig()
        self.reward_cfg = reward or RewardConfig()
        self.camera = Camera(camera or CameraConfig())
        self.start = start or StartConfig()
        self.provide_masks = provide_masks
        self.lap_quota = lap_quota
        self.max_steps = max_steps or self.dynamics.episode_cap
        self.render_mode = render_mode

        h, w = self.camera.cfg.height, self.camera.cfg.width
        self.observation_space = spaces.Box(low=0.0, high=1.0, shape=(h, w, 3), dtype=np.float64)
        self.action_space = spaces.Box(low=-1.0, high=1.0, shape=(2,), dtype=np.float64)

        self.state = None
        self.trajectory = []
        self._observation = None
        self._mask = None
        self._last_result = None
        self._last_arc = 0.0
        self._progress = 0.0

    @property
    def track_length(self):
        return self.track.total_length

    @property
    def laps(self):
        return max(0, int(math.floor(self._progress / self.track.total_length)))

    @property
    def progress(self):
        """Signed distance driven along the track since the start, in meters."""
        return self._progress

    def _start_state(self, options):
        rng = self.np_random
        # draw every jitter even when overridden, so overrides do not shift later draws
        start_arc = rng.uniform(0.0, self.track.total_length)
        heading_offset = rng.uniform(-self.start.heading_jitter, self.start.heading_jitter)
        lateral = rng.uniform(-self.start.lateral_jitter, self.start.lateral_jitter)
        if not self.start.random_start:
            start_arc = 0.0
        start_arc = options.get('start_distance', start_arc)
        heading_offset = options.get('heading_offset', heading_offset)
        lateral = options.get('lateral_offset', lateral)
        speed = options.get('initial_speed', self.start.initial_speed)

        point, heading, half_width = self.track.pose_at(start_arc)
        offset = lateral * half_width
        x = point[0] - math.sin(heading) * offset
        y = point[1] + math.cos(heading) * offset
        arc = float(self.track.query(np.array([x, y])).arc_position)
        return CarState(x=float(x), y=float(y), heading=wrap_angle(heading + heading_offset),
                        speed=float(speed), lap_distance=arc, time_step=0)

    def _observe(self):
        self._observation, self._mask = self.camera.render(self.state, self.track, self.np_random)

    def _info(self, off_road):
        info = {'state': self.state, 'off_road': off_road, 'laps': self.laps, 'progress': self._progress}
        if self.provide_masks:
            info['mask'] = self._mask
        return info

    def reset(self, *, seed=None, options=None):
        """Place the car at the start.

        ``options`` may override ``start_distance`` (m), ``heading_offset``
        (rad), ``lateral_offset`` (fraction of the half-width) and
        ``initial_speed`` (m/s).
        """
        super().reset(seed=seed)
        self.state = self._start_state(options or {})
        self._last_arc = self.state.lap_distance
        self._progress = 0.0
        self.trajectory = []
        self._last_result = None
        self._observe()
        return self._observation, self._info(False)

    def step(self, action):
        if not isinstance(action, Action):
            steering, acceleration = np.asarray(action, dtype=np.float64).reshape(2)
            action = Action(float(steering), float(acceleration))
        result = dyn.step(self.state, action, self.track, dynamics=self.dynamics, reward_cfg=self.reward_cfg)
        self.state = result.next_state

        length = self.track.total_length
        delta = self.state.lap_distance - self._last_arc
        if delta > 0.5 * length:
            delta -= length
        elif delta < -0.5 * length:
            delta += length
        self._progress += delta
        self._last_arc = self.state.lap_distance

        terminated = result.off_road
        quota_met = self.lap_quota > 0 and self.laps >= self.lap_quota
        truncated = not terminated and (self.state.time_step >= self.max_steps or quota_met)
        self._observe()

        clamped = action.clamped()
        self.trajectory.append((self.state.time_step, self.state.x, self.state.y, self.state.heading,
                                self.state.speed, clamped.steering, clamped.acceleration,
                                result.reward, int(result.off_road)))
        self._last_result = dyn.StepResult(next_state=self.state, reward=result.reward,
                                           off_road=result.off_road, done=terminated or truncated,
                                           observation=self._observation,
                                           mask=self._mask if self.provide_masks else None)
        return self._observation, result.reward, terminated, truncated, self._info(result.off_road)

    def step_result(self):
        """The :class:`StepResult` of the last step, or None right after reset."""
        return self._last_result

    def render(self):
        if self.render_mode == 'rgb_array' and self._observation is not None:
            return (self._observation * 255.0 + 0.5).astype(np.uint8)
        return None

    def save_trajectory_csv(self, path):
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(TRAJECTORY_HEADER)
            for row in self.trajectory:
                writer.writerow([row[0]] + [repr(float(v)) for v in row[1:8]] + [row[8]])
