# -*- coding: utf-8 -*-
import dataclasses

import numpy as np

from ..errors import ContractViolation


def discounted_returns(rewards, gamma):
    """Backward recursion ``V_t = r_t + gamma * V_{t+1}`` with ``V_last = r_last``.

    :param rewards: non-empty sequence of per-step rewards
    :param gamma: discount in [0, 1)
    :rtype: list[float]
    """
    if not 0.0 <= gamma < 1.0:
        raise ContractViolation(f"gamma must be in [0, 1), got {gamma!r}")
    if len(rewards) == 0:
        raise ContractViolation("discounted_returns needs at least one reward")
    values = [0.0] * len(rewards)
    g = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        g = float(rewards[i]) + gamma * g
        values[i] = g
    return values


@dataclasses.dataclass
class Trajectory:
    """States observed before each action and the reward that action earned."""
    episode: int
    states: list = dataclasses.field(default_factory=list)
    rewards: list = dataclasses.field(default_factory=list)
    off_road: bool = False

    def push(self, state, reward):
        self.states.append(state)
        self.rewards.append(float(reward))

    def __len__(self):
        return len(self.states)

    def returns(self, gamma):
        return discounted_returns(self.rewards, gamma)

    def state_array(self):
        return np.array([s.as_array() for s in self.states], dtype=np.float64).reshape(-1, 3)
