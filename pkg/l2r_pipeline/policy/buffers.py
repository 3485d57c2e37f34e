# -*- coding: utf-8 -*-
"""k-NN replay stores: the value buffer (safety) and the correction buffer (recovery)."""
import dataclasses
import logging
import warnings

import numpy as np

from .. import binfile
from ..domain import DISCRETE_ACTIONS, SafetyLabel, StateVec, discrete_action
from ..errors import ContractViolation, InsufficientDataError
from . import knn

logger = logging.getLogger(__name__)

VALUE_MAGIC = b'VBUF'
CORRECTION_MAGIC = b'CBUF'
DIMENSIONS = ('z1', 'z2', 'speed')


def compute_scales(states):
    """Per-dimension population standard deviation; zero-variance dimensions get scale 1.

    :return: (scales, degenerate) arrays of shape (3,)
    """
    states = np.asarray(states, dtype=np.float64).reshape(-1, 3)
    std = states.std(axis=0)
    degenerate = ~(np.isfinite(std) & (std > 0))
    scales = np.where(degenerate, 1.0, std)
    if np.any(degenerate):
        names = [name for name, flag in zip(DIMENSIONS, degenerate) if flag]
        warnings.warn(f"zero variance in buffer dimension(s) {', '.join(names)}; using scale 1")
    return scales, degenerate


def _as_query(s):
    return s.as_array() if isinstance(s, StateVec) else np.asarray(s, dtype=np.float64)


class _KnnBuffer:
    def __init__(self, states, scales, k):
        self.states = np.asarray(states, dtype=np.float64).reshape(-1, 3)
        self.scales = np.asarray(scales, dtype=np.float64).reshape(3)
        if not np.all(self.scales > 0):
            raise ContractViolation(f"buffer scales must be positive, got {self.scales}")
        if k < 1:
            raise ContractViolation(f"k must be >= 1, got {k}")
        self.k = int(k)
        self.normalized = self.states / self.scales

    def __len__(self):
        return len(self.states)

    @property
    def degenerate(self):
        return ~(self.states.std(axis=0) > 0) if len(self) else np.ones(3, dtype=bool)

    def neighbors(self, s):
        """Indices of the k nearest entries (all entries when fewer than k)."""
        if len(self) == 0:
            raise ContractViolation("cannot query an empty buffer")
        return knn.nearest_indices(self.normalized, _as_query(s) / self.scales, self.k)


class ValueBuffer(_KnnBuffer):
    """States paired with their discounted returns."""

    def __init__(self, states, values, scales, k=5):
        super().__init__(states, scales, k)
        self.values = np.asarray(values, dtype=np.float64).reshape(-1)
        if len(self.values) != len(self.states):
            raise ContractViolation("value buffer needs one value per state")

    def scaled(self, c):
        return ValueBuffer(self.states, self.values * c, self.scales, self.k)

    def save(self, path):
        writer = binfile.Writer().u32(len(self)).array(self.scales, np.float64)
        writer.array(np.column_stack([self.states, self.values]), np.float64)
        binfile.write_checked(path, VALUE_MAGIC, writer.getvalue())

    @classmethod
    def load(cls, path, k=5):
        reader = binfile.Reader(binfile.read_checked(path, VALUE_MAGIC), path)
        count = reader.u32()
        scales = reader.array(3, np.float64)
        records = reader.array(count * 4, np.float64).reshape(count, 4)
        reader.done()
        return cls(records[:, :3], records[:, 3], scales, k)


class CorrectionBuffer(_KnnBuffer):
    """States from held random actions that led back to safety, with that action's id."""

    def __init__(self, states, action_ids, scales, k=5):
        super().__init__(states, scales, k)
        self.action_ids = np.asarray(action_ids, dtype=np.int64).reshape(-1)
        if len(self.action_ids) != len(self.states):
            raise ContractViolation("correction buffer needs one action per state")
        if np.any((self.action_ids < 0) | (self.action_ids >= len(DISCRETE_ACTIONS))):
            raise ContractViolation("correction buffer holds an unknown action id")

    def save(self, path):
        writer = binfile.Writer().u32(len(self)).array(self.scales, np.float64)
        writer.array(np.column_stack([self.states, self.action_ids.astype(np.float64)]), np.float64)
        binfile.write_checked(path, CORRECTION_MAGIC, writer.getvalue())

    @classmethod
    def load(cls, path, k=5):
        reader = binfile.Reader(binfile.read_checked(path, CORRECTION_MAGIC), path)
        count = reader.u32()
        scales = reader.array(3, np.float64)
        records = reader.array(count * 4, np.float64).reshape(count, 4)
        reader.done()
        return cls(records[:, :3], records[:, 3].astype(np.int64), scales, k)


def build_value_buffer(trajectories, gamma, k=5, min_states=100):
    """Pair every collected state with its discounted return.

    :param trajectories: :class:`~l2r_pipeline.policy.returns.Trajectory` list
    :rtype: ValueBuffer
    :raises InsufficientDataError: fewer than ``min_states`` states in total
    """
    states, values = [], []
    for trajectory in trajectories:
        if len(trajectory) == 0:
            continue
        states.append(trajectory.state_array())
        values.extend(trajectory.returns(gamma))
    total = sum(len(s) for s in states)
    if total < min_states:
        raise InsufficientDataError(f"value buffer needs at least {min_states} states, got {total}")
    states = np.concatenate(states)
    scales, _ = compute_scales(states)
    logger.info("value buffer: %d states, scales %s", total, np.array2string(scales, precision=4))
    return ValueBuffer(states, values, scales, k)


def classify_safety(buffer, s):
    """Safe iff the mean value of the k nearest entries is strictly positive.

    :type buffer: ValueBuffer
    :type s: StateVec
    :rtype: SafetyLabel
    """
    idx = buffer.neighbors(s)
    return SafetyLabel.SAFE if float(np.mean(buffer.values[idx])) > 0.0 else SafetyLabel.UNSAFE


def correction_action(buffer, s):
    """Majority vote over the k nearest entries' actions, ties to the nearest.

    :type buffer: CorrectionBuffer
    :rtype: l2r_pipeline.domain.DiscreteAction
    """
    idx = buffer.neighbors(s)
    return discrete_action(knn.majority_vote([int(a) for a in buffer.action_ids[idx]]))
