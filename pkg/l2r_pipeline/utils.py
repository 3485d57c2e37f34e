# -*- coding: utf-8 -*-
import functools
import hashlib
import logging
import math
import os
from dataclasses import fields
from typing import TypeVar

import numpy as np

from .errors import ContractViolation

T = TypeVar('T')

logger = logging.getLogger(__name__)


def from_dict(dc_type: type[T], data: dict) -> T:
    class_fields = {f.name for f in fields(dc_type)}
    filtered_data = {k: v for k, v in data.items() if k in class_fields}

    return dc_type(**filtered_data)


def derive_seed(base, *labels):
    """Derive an independent 63-bit seed from a base seed and labels.

    :param base: the global seed
    :type base: int
    :param labels: stage names, episode indices, ...
    :return: a seed that only depends on its inputs
    :rtype: int
    """
    text = '/'.join([str(int(base))] + [str(label) for label in labels])
    digest = hashlib.sha256(text.encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little') >> 1


def make_rng(base, *labels):
    return np.random.default_rng(derive_seed(base, *labels))


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def sha256_file(path):
    """Hex SHA-256 of a file's bytes.

    :type path: str
    :rtype: str
    """
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            h.update(chunk)
    return h.hexdigest()


def clamp(value, low, high):
    return low if value < low else high if value > high else value


def require_finite(name, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ContractViolation(f"{name} must be finite, got {v!r}")


def wrap_angle(angle):
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def log_function(func):
    """Log calls, results and errors of ``func`` at DEBUG level."""
    func_logger = logging.getLogger(func.__module__)

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        if not func_logger.isEnabledFor(logging.DEBUG):
            return func(*args, **kwargs)
        func_logger.debug("call %s args=%r kwargs=%r", func.__name__, args, kwargs)
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            func_logger.debug("%s raised %s: %s", func.__name__, type(e).__name__, e)
            raise
        func_logger.debug("%s returns %r", func.__name__, result)
        return result
    return wrapper
