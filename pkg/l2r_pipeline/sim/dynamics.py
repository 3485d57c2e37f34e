# -*- coding: utf-8 -*-
"""Kinematic bicycle dynamics, the race reward and the speed controller."""
import dataclasses
import math
from typing import Optional

import numpy as np

from ..configs import DynamicsConfig, RewardConfig
from ..domain import Action, CarState
from ..errors import ContractViolation
from ..utils import clamp, require_finite, wrap_angle


@dataclasses.dataclass(slots=True, frozen=True)
class StepResult:
    next_state: CarState
    reward: float
    off_road: bool
    done: bool
    observation: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None


def compute_reward(speed, off_road, cfg=None):
    """Per-step reward.

    Off-road steps pay ``min(offroad_cap, offroad_slope * speed)``; on-road
    steps earn ``speed_coeff * speed``.

    :param speed: m/s, must be >= 0
    :param off_road: whether the car left the road this step
    :type cfg: RewardConfig
    :rtype: float
    """
    cfg = cfg or RewardConfig()
    if not speed >= 0:
        raise ContractViolation(f"speed must be >= 0, got {speed!r}")
    if off_road:
        return min(cfg.offroad_cap, cfg.offroad_slope * speed)
    return cfg.speed_coeff * speed


def speed_controller(current_speed, target_speed, gain=0.5):
    """Proportional acceleration command toward ``target_speed``, clamped to [-1, 1]."""
    return clamp(gain * (target_speed - current_speed), -1.0, 1.0)


def step(state, action, track, dt=None, dynamics=None, reward_cfg=None):
    """Advance the car by one time step.

    The returned result carries no observation; rendering is done by the
    environment.

    :type state: CarState
    :type action: Action
    :type track: l2r_pipeline.sim.track.TrackSpec
    :param dt: seconds, defaults to ``dynamics.dt``
    :rtype: StepResult
    """
    dynamics = dynamics or DynamicsConfig()
    dt = dynamics.dt if dt is None else dt
    if not dt > 0:
        raise ContractViolation(f"dt must be > 0, got {dt!r}")
    require_finite('state', state.x, state.y, state.heading, state.speed)
    require_finite('action', action.steering, action.acceleration)
    action = action.clamped()

    speed = clamp(state.speed + dynamics.a_max * action.acceleration * dt, 0.0, dynamics.v_max)
    yaw_rate = speed / dynamics.wheelbase * math.tan(dynamics.s_max * action.steering)
    heading = wrap_angle(state.heading + yaw_rate * dt)
    x = state.x + speed * dt * math.cos(heading)
    y = state.y + speed * dt * math.sin(heading)

    q = track.query(np.array([x, y]))
    off_road = bool(q.off_road)
    time_step = state.time_step + 1
    next_state = CarState(x=x, y=y, heading=heading, speed=speed,
                          lap_distance=float(q.arc_position), time_step=time_step)
    reward = compute_reward(speed, off_road, reward_cfg)
    done = off_road or time_step >= dynamics.episode_cap
    return StepResult(next_state=next_state, reward=reward, off_road=off_road, done=done)
