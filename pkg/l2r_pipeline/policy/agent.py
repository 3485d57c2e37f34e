# -*- coding: utf-8 -*-
"""Perception and the safety-dispatching racing agent."""
import dataclasses
from typing import Optional

from ..domain import Action, SafetyLabel, StateVec
from ..latent.vae import encode
from ..sim.dynamics import speed_controller
from ..vision.preprocess import PipelineMode, downsample_mask, preprocess, preprocess_mask
from ..vision.segmenter import segment
from .buffers import classify_safety, correction_action


class Perception:
    """Camera frame plus speed to agent state.

    Frames go through crop/resize, the segmenter, 28x28 pooling and the
    VAE posterior mean. :meth:`from_mask` skips the segmenter and is only
    allowed in training mode.
    """

    def __init__(self, segmenter, vae, mode=PipelineMode.EVALUATION):
        self.segmenter = segmenter
        self.vae = vae
        self.mode = mode

    def mask_of(self, image):
        return downsample_mask(segment(self.segmenter, preprocess(image)))

    def __call__(self, image, speed):
        return StateVec.from_latent(encode(self.vae, self.mask_of(image)), speed)

    def from_mask(self, mask, speed):
        small = downsample_mask(preprocess_mask(mask, self.mode))
        return StateVec.from_latent(encode(self.vae, small), speed)


@dataclasses.dataclass(frozen=True)
class AgentDecision:
    action: Action
    label: SafetyLabel
    correction_id: Optional[int] = None
    target_speed: float = 0.0


def agent_act(s, value_buffer, correction_buffer, speed_model=None, distance=0.0,
              base_target_speed=10.0, speed_gain=0.5, use_correction=True):
    """Pick the base policy in safe states and the voted correction in unsafe ones.

    :param s: current state
    :type s: StateVec
    :param speed_model: per-segment target speeds; ``base_target_speed`` when None
    :param distance: internal distance estimate since the episode start (m)
    :rtype: AgentDecision
    """
    target = base_target_speed if speed_model is None else speed_model.target_at(distance)
    label = classify_safety(value_buffer, s)
    if label is SafetyLabel.UNSAFE and use_correction and correction_buffer is not None and len(correction_buffer):
        choice = correction_action(correction_buffer, s)
        scaled = target * choice.target_speed_scale
        return AgentDecision(Action(choice.steering, speed_controller(s.speed, scaled, speed_gain)),
                             label, choice.id, scaled)
    return AgentDecision(Action(0.0, speed_controller(s.speed, target, speed_gain)), label, None, target)


class RaceAgent:
    """Stateful wrapper around :func:`agent_act` for driving an environment.

    The agent only sees camera frames and its own speed; the distance it
    uses to look up target speeds is integrated from speed.
    """

    def __init__(self, perception, value_buffer, correction_buffer, speed_model=None,
                 base_target_speed=10.0, speed_gain=0.5, use_correction=True, use_speed_model=True):
        self.perception = perception
        self.value_buffer = value_buffer
        self.correction_buffer = correction_buffer
        self.speed_model = speed_model
        self.base_target_speed = base_target_speed
        self.speed_gain = speed_gain
        self.use_correction = use_correction
        self.use_speed_model = use_speed_model
        self.distance = 0.0

    def reset(self):
        self.distance = 0.0

    def act(self, image, speed):
        s = self.perception(image, speed)
        return self.decide(s)

    def decide(self, s):
        return agent_act(s, self.value_buffer, self.correction_buffer,
                         self.speed_model if self.use_speed_model else None,
                         distance=self.distance, base_target_speed=self.base_target_speed,
                         speed_gain=self.speed_gain, use_correction=self.use_correction)

    def advance(self, speed, dt):
        """Integrate the distance estimate after a step at ``speed``."""
        self.distance += speed * dt
