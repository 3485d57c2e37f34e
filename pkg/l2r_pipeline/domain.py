# -*- coding: utf-8 -*-
import dataclasses
import enum

import numpy as np


@dataclasses.dataclass(slots=True, frozen=True)
class CarState:
    x: float
    y: float
    heading: float
    speed: float
    lap_distance: float
    time_step: int = 0

    @property
    def position(self):
        return np.array([self.x, self.y])


@dataclasses.dataclass(slots=True, frozen=True)
class Action:
    steering: float = 0.0
    acceleration: float = 0.0

    def clamped(self):
        return Action(
            steering=min(1.0, max(-1.0, float(self.steering))),
            acceleration=min(1.0, max(-1.0, float(self.acceleration))),
        )


@dataclasses.dataclass(slots=True, frozen=True)
class Latent:
    z1: float
    z2: float

    def as_array(self):
        return np.array([self.z1, self.z2])


@dataclasses.dataclass(slots=True, frozen=True)
class StateVec:
    """Agent state: 2-D latent road encoding plus speed in m/s."""
    z1: float
    z2: float
    speed: float

    @classmethod
    def from_latent(cls, latent: Latent, speed):
        return cls(latent.z1, latent.z2, float(speed))

    def as_array(self):
        return np.array([self.z1, self.z2, self.speed])


class SafetyLabel(enum.Enum):
    SAFE = 'safe'
    UNSAFE = 'unsafe'


@dataclasses.dataclass(slots=True, frozen=True)
class DiscreteAction:
    id: int
    steering: float
    target_speed_scale: float


DISCRETE_STEERING = (-1.0, -0.5, 0.5, 1.0)
DISCRETE_SPEED_SCALES = (0.5, 1.0)

DISCRETE_ACTIONS = tuple(
    DiscreteAction(id=i * len(DISCRETE_SPEED_SCALES) + j, steering=steering, target_speed_scale=scale)
    for i, steering in enumerate(DISCRETE_STEERING)
    for j, scale in enumerate(DISCRETE_SPEED_SCALES)
)


def discrete_action(action_id):
    return DISCRETE_ACTIONS[int(action_id)]
