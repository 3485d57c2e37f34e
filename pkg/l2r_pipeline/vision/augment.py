# -*- coding: utf-8 -*-
"""Color and geometric augmentation of (image, mask) training pairs.

Transforms run in a fixed order and each one draws its random parameters
whether it fires or not, so changing one probability never changes the
randomness seen by the others.
"""
import cv2
import numpy as np

from ..configs import AugmentConfig
from ..errors import ContractViolation

SEPIA = np.array([[0.393, 0.769, 0.189],
                  [0.349, 0.686, 0.168],
                  [0.272, 0.534, 0.131]])


def _to_hsv(img):
    return cv2.cvtColor(img.astype(np.float32), cv2.COLOR_RGB2HSV)


def _from_hsv(hsv):
    return cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB).astype(np.float64)


def color_jitter(img, brightness, contrast, saturation):
    out = img * brightness
    mean = out.mean()
    out = (out - mean) * contrast + mean
    gray = out.mean(axis=2, keepdims=True)
    return gray + (out - gray) * saturation


def hue_shift(img, degrees):
    hsv = _to_hsv(np.clip(img, 0.0, 1.0))
    hsv[..., 0] = np.mod(hsv[..., 0] + degrees, 360.0)
    return _from_hsv(hsv)


def saturation_scale(img, factor):
    hsv = _to_hsv(np.clip(img, 0.0, 1.0))
    hsv[..., 1] = np.clip(hsv[..., 1] * factor, 0.0, 1.0)
    return _from_hsv(hsv)


def contrast_scale(img, factor):
    mean = img.mean()
    return (img - mean) * factor + mean


def clahe(img, clip_limit=2.0, tiles=8):
    """Local histogram equalization of the lightness channel."""
    rgb8 = (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    lab = cv2.cvtColor(rgb8, cv2.COLOR_RGB2LAB)
    op = cv2.createCLAHE(clipLimit=clip_limit, tileGridSize=(tiles, tiles))
    lab[..., 0] = op.apply(np.ascontiguousarray(lab[..., 0]))
    return cv2.cvtColor(lab, cv2.COLOR_LAB2RGB).astype(np.float64) / 255.0


def sepia(img):
    return img @ SEPIA.T


def shift_scale_rotate(img, mask, dx, dy, scale, angle):
    """Apply one affine warp to both arrays; the mask uses nearest-neighbor sampling."""
    h, w = mask.shape
    m = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), angle, scale)
    m[0, 2] += dx * w
    m[1, 2] += dy * h
    img_out = cv2.warpAffine(img.astype(np.float32), m, (w, h), flags=cv2.INTER_LINEAR,
                             borderMode=cv2.BORDER_REFLECT_101)
    mask_out = cv2.warpAffine(mask.astype(np.uint8), m, (w, h), flags=cv2.INTER_NEAREST,
                              borderMode=cv2.BORDER_REFLECT_101)
    return img_out.astype(np.float64), mask_out


def augment(img, mask, cfg, rng):
    """Randomly augment an image and its road mask.

    :param img: (H, W, 3) float image in [0, 1]
    :param mask: (H, W) binary mask
    :type cfg: AugmentConfig
    :type rng: numpy.random.Generator
    :return: (augmented image clipped to [0, 1], binary uint8 mask)
    """
    img = np.asarray(img, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.uint8)
    if img.shape[:2] != mask.shape:
        raise ContractViolation(f"image {img.shape[:2]} and mask {mask.shape} sizes differ")
    cfg = cfg or AugmentConfig()
    out = img.copy()
    out_mask = mask.copy()

    fire = rng.random()
    jitter = rng.uniform(0.8, 1.2, 3)
    if fire < cfg.color_jitter:
        out = color_jitter(out, *jitter)

    fire = rng.random()
    degrees = rng.uniform(-20.0, 20.0)
    if fire < cfg.hue:
        out = hue_shift(out, degrees)

    fire = rng.random()
    factor = rng.uniform(0.7, 1.3)
    if fire < cfg.saturation:
        out = saturation_scale(out, factor)

    fire = rng.random()
    factor = rng.uniform(0.8, 1.2)
    if fire < cfg.contrast:
        out = contrast_scale(out, factor)

    fire = rng.random()
    shift = rng.uniform(-20.0 / 255.0, 20.0 / 255.0, 3)
    if fire < cfg.rgb_shift:
        out = out + shift

    fire = rng.random()
    order = rng.permutation(3)
    if fire < cfg.channel_shuffle:
        out = out[..., order]

    fire = rng.random()
    if fire < cfg.clahe:
        out = clahe(out)

    fire = rng.random()
    if fire < cfg.sepia:
        out = sepia(out)

    out = np.clip(out, 0.0, 1.0)

    fire = rng.random()
    if fire < cfg.flip:
        out = out[:, ::-1].copy()
        out_mask = out_mask[:, ::-1].copy()

    fire = rng.random()
    dx, dy = rng.uniform(-cfg.shift_limit, cfg.shift_limit, 2)
    scale = rng.uniform(cfg.scale_min, cfg.scale_max)
    angle = rng.uniform(-cfg.rotate_limit, cfg.rotate_limit)
    if fire < cfg.shift_scale_rotate:
        out, out_mask = shift_scale_rotate(out, out_mask, dx, dy, scale, angle)
        out = np.clip(out, 0.0, 1.0)

    return out, out_mask
