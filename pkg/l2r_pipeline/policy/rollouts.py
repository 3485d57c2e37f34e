# -*- coding: utf-8 -*-
"""Data collection for the safety discriminator and the correction policy."""
import logging

import numpy as np
from tqdm import tqdm

from ..domain import DISCRETE_ACTIONS, Action, SafetyLabel, discrete_action
from ..errors import CollectionError, ExplorationFailure
from ..sim.dynamics import speed_controller
from ..utils import derive_seed
from .buffers import CorrectionBuffer, classify_safety
from .returns import Trajectory

logger = logging.getLogger(__name__)


def _reset(env, seed, label, episode):
    rng = np.random.default_rng(derive_seed(seed, label, 'start', episode))
    return env.reset(seed=derive_seed(seed, label, 'env', episode),
                     options={'start_distance': rng.uniform(0.0, env.track_length)})


def collect_base_rollouts(envs, perception, n_episodes, base_target_speed, seed,
                          speed_gain=0.5, latent_rows=None):
    """Drive straight at ``base_target_speed`` from perturbed starts.

    Every step records the perceived state and the reward of the action
    taken from it.

    :param envs: environments, used round-robin
    :param perception: image and speed to :class:`StateVec`
    :param latent_rows: optional list receiving ``(episode, step, z1, z2, speed)`` rows
    :rtype: list[Trajectory]
    :raises CollectionError: when no episode produced a single step
    """
    trajectories = []
    for episode in tqdm(range(n_episodes), desc='base rollouts', disable=None, leave=False):
        env = envs[episode % len(envs)]
        obs, info = _reset(env, seed, 'base', episode)
        trajectory = Trajectory(episode=episode)
        while True:
            s = perception(obs, info['state'].speed)
            if latent_rows is not None:
                latent_rows.append((episode, len(trajectory), s.z1, s.z2, s.speed))
            action = Action(0.0, speed_controller(s.speed, base_target_speed, speed_gain))
            obs, reward, terminated, truncated, info = env.step(action)
            trajectory.push(s, reward)
            if terminated or truncated:
                trajectory.off_road = bool(terminated)
                break
        trajectories.append(trajectory)
        logger.debug("base episode %d: %d steps, off_road=%s", episode, len(trajectory), trajectory.off_road)
    if not any(len(t) for t in trajectories):
        raise CollectionError("no base-policy episode completed; check the environment setup")
    logger.info("base rollouts: %d episodes, %d states", len(trajectories), sum(len(t) for t in trajectories))
    return trajectories


class CorrectionRecorder:
    """Bookkeeping for hold-until-safe random exploration.

    On the first unsafe state a random action is drawn and held. Every
    (state, action) pair seen while it is held is pending; reaching a safe
    state commits the pending pairs as good, ending the episode first
    discards them.
    """

    def __init__(self, rng):
        self.rng = rng
        self.entries = []
        self.pending = []
        self.held = None

    def observe(self, s, label):
        """Register the label of state ``s``; returns the held action id, or None when safe."""
        if label is SafetyLabel.SAFE:
            if self.pending:
                self.entries.extend(self.pending)
                logger.debug("committed %d correction pairs (action %d)", len(self.pending), self.held)
            self.pending = []
            self.held = None
            return None
        if self.held is None:
            self.held = int(self.rng.integers(len(DISCRETE_ACTIONS)))
        self.pending.append((s, self.held))
        return self.held

    def end_episode(self):
        if self.pending:
            logger.debug("discarded %d correction pairs at episode end", len(self.pending))
        self.pending = []
        self.held = None

    def to_buffer(self, scales, k=5):
        states = np.array([s.as_array() for s, _ in self.entries], dtype=np.float64).reshape(-1, 3)
        return CorrectionBuffer(states, [a for _, a in self.entries], scales, k)


def explore_corrections(envs, perception, value_buffer, n_episodes, rng, seed,
                        base_target_speed=10.0, speed_gain=0.5, k=5):
    """Run the base policy and explore random held actions whenever the state is unsafe.

    :rtype: CorrectionBuffer
    :raises ExplorationFailure: when no good transition was found
    """
    recorder = CorrectionRecorder(rng)
    for episode in tqdm(range(n_episodes), desc='corrections', disable=None, leave=False):
        env = envs[episode % len(envs)]
        obs, info = _reset(env, seed, 'correction', episode)
        while True:
            s = perception(obs, info['state'].speed)
            held = recorder.observe(s, classify_safety(value_buffer, s))
            if held is None:
                action = Action(0.0, speed_controller(s.speed, base_target_speed, speed_gain))
            else:
                choice = discrete_action(held)
                target = base_target_speed * choice.target_speed_scale
                action = Action(choice.steering, speed_controller(s.speed, target, speed_gain))
            obs, _, terminated, truncated, info = env.step(action)
            if terminated or truncated:
                break
        recorder.end_episode()
    if not recorder.entries:
        raise ExplorationFailure(
            f"no good correction found in {n_episodes} episodes; run more episodes or lower the base speed")
    logger.info("correction buffer: %d entries", len(recorder.entries))
    return recorder.to_buffer(value_buffer.scales, k)
