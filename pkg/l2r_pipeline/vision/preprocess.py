# -*- coding: utf-8 -*-
"""Crop/resize geometry between camera frames, segmenter inputs and latent inputs."""
import enum

import cv2
import numpy as np

from ..errors import ContractViolation

HOOD_FRACTION = 0.125
# a 100-row band out of 384 rows, directly above the hood
BAND_FRACTION = 100.0 / 384.0
SEGMENTER_SIZE = 64
LATENT_SIZE = 28


class PipelineMode(enum.Enum):
    """Whether ground-truth road masks may be consumed."""
    TRAINING = 'training'
    EVALUATION = 'evaluation'


def require_ground_truth(mode):
    if mode is PipelineMode.EVALUATION:
        raise ContractViolation("ground-truth masks are not available in evaluation mode")


def crop_rows(height, hood_fraction=HOOD_FRACTION, band_fraction=BAND_FRACTION):
    """Row range ``(top, bottom)`` of the road band for an image height.

    :raises ContractViolation: when the image is too small for the bands
    """
    hood = int(round(height * hood_fraction))
    band = int(round(height * band_fraction))
    if band < 1 or height < hood + band:
        raise ContractViolation(f"image height {height} is smaller than the crop bands")
    bottom = height - hood
    return bottom - band, bottom


def preprocess(raw, hood_fraction=HOOD_FRACTION, size=SEGMENTER_SIZE):
    """Crop the road band out of a camera frame and resize it to ``size`` x ``size``.

    :param raw: (H, W, 3) float image in [0, 1]
    :rtype: numpy.ndarray
    """
    raw = np.asarray(raw)
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise ContractViolation(f"expected an (H, W, 3) image, got shape {raw.shape}")
    top, bottom = crop_rows(raw.shape[0], hood_fraction)
    band = np.ascontiguousarray(raw[top:bottom], dtype=np.float32)
    out = cv2.resize(band, (size, size), interpolation=cv2.INTER_LINEAR)
    return out.astype(np.float64)


def preprocess_mask(mask, mode=PipelineMode.TRAINING, hood_fraction=HOOD_FRACTION, size=SEGMENTER_SIZE):
    """Apply the :func:`preprocess` crop to a ground-truth mask (nearest-neighbor resize)."""
    require_ground_truth(mode)
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ContractViolation(f"expected an (H, W) mask, got shape {mask.shape}")
    top, bottom = crop_rows(mask.shape[0], hood_fraction)
    band = np.ascontiguousarray(mask[top:bottom], dtype=np.uint8)
    return cv2.resize(band, (size, size), interpolation=cv2.INTER_NEAREST)


def downsample_mask(mask):
    """Area-average a 64x64 binary mask down to 28x28 and threshold at 0.5."""
    mask = np.asarray(mask)
    if mask.shape != (SEGMENTER_SIZE, SEGMENTER_SIZE):
        raise ContractViolation(f"expected a {SEGMENTER_SIZE}x{SEGMENTER_SIZE} mask, got {mask.shape}")
    pooled = cv2.resize(mask.astype(np.float32), (LATENT_SIZE, LATENT_SIZE), interpolation=cv2.INTER_AREA)
    return (pooled >= 0.5).astype(np.uint8)
