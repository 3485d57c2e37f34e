# -*- coding: utf-8 -*-
"""Segmenter training data: frame collection, augmentation and PPM/PGM directories."""
import glob
import logging
import math
import os

import cv2
import numpy as np
from tqdm import tqdm

from ..domain import Action
from ..errors import CollectionError, ContractViolation
from ..sim.dynamics import speed_controller
from ..utils import clamp, derive_seed, ensure_dir, wrap_angle
from .augment import augment
from .preprocess import PipelineMode, preprocess, preprocess_mask, require_ground_truth

logger = logging.getLogger(__name__)

FRAME_STRIDE = 4
STEERING_NOISE = 0.3


def follow_steering(track, state, noise=0.0):
    """Steering that tracks the centerline, from ground-truth pose, plus ``noise``."""
    point, heading, _ = track.pose_at(state.lap_distance)
    dx, dy = state.x - point[0], state.y - point[1]
    lateral = -math.sin(heading) * dx + math.cos(heading) * dy
    error = wrap_angle(heading - state.heading)
    return clamp(2.0 * error - 0.25 * lateral + noise, -1.0, 1.0)


def collect_segmenter_frames(envs, n_frames, seed, speed_range=(5.0, 15.0), speed_gain=0.5):
    """Record raw (image, mask) pairs while wandering along the tracks.

    Episodes start at random positions and steer along the centerline with
    slowly varying random noise, so frames cover straights, corners and
    views of the road edge.

    :param envs: environments built with ``provide_masks=True``
    :param n_frames: number of pairs to record
    :param seed: base seed
    :return: (images (N, H, W, 3) float64, masks (N, H, W) uint8)
    """
    if not envs:
        raise CollectionError("no environment to collect segmenter frames from")
    images, masks = [], []
    episode = 0
    with tqdm(total=n_frames, desc='segmenter frames', disable=None, leave=False) as bar:
        while len(images) < n_frames:
            env = envs[episode % len(envs)]
            if not env.provide_masks:
                raise ContractViolation("segmenter frames need an environment that provides masks")
            rng = np.random.default_rng(derive_seed(seed, 'segmenter_frames', episode))
            target = rng.uniform(*speed_range)
            obs, info = env.reset(seed=derive_seed(seed, 'segmenter_env', episode),
                                options={'start_distance': rng.uniform(0.0, env.track_length)})
            noise = 0.0
            t = 0
            while len(images) < n_frames:
                if t % FRAME_STRIDE == 0:
                    images.append(obs.copy())
                    masks.append(info['mask'].copy())
                    bar.update(1)
                noise = 0.9 * noise + STEERING_NOISE * rng.normal()
                state = info['state']
                action = Action(follow_steering(env.track, state, noise),
                                speed_controller(state.speed, target, speed_gain))
                obs, _, terminated, truncated, info = env.step(action)
                t += 1
                if terminated or truncated:
                    break
            episode += 1
    logger.info("collected %d segmenter frames over %d episodes", len(images), episode)
    return np.stack(images), np.stack(masks).astype(np.uint8)


def build_segmenter_dataset(images, masks, augment_cfg, rng, mode=PipelineMode.TRAINING):
    """Augment every raw pair, then crop and resize it to the segmenter input size."""
    require_ground_truth(mode)
    out_images, out_masks = [], []
    for img, mask in zip(images, masks):
        aug_img, aug_mask = augment(img, mask, augment_cfg, rng)
        out_images.append(preprocess(aug_img))
        out_masks.append(preprocess_mask(aug_mask, mode))
    return np.stack(out_images), np.stack(out_masks)


def save_frames(directory, images, masks):
    """Write ``img_%05d.ppm`` (8-bit RGB) and ``mask_%05d.pgm`` (0/255) pairs."""
    ensure_dir(directory)
    paths = []
    for i, (img, mask) in enumerate(zip(images, masks)):
        img_path = os.path.join(directory, f"img_{i:05d}.ppm")
        mask_path = os.path.join(directory, f"mask_{i:05d}.pgm")
        rgb8 = (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
        cv2.imwrite(img_path, cv2.cvtColor(rgb8, cv2.COLOR_RGB2BGR))
        cv2.imwrite(mask_path, (np.asarray(mask) > 0).astype(np.uint8) * 255)
        paths.extend([img_path, mask_path])
    return paths


def load_frames(directory):
    """Read a directory written by :func:`save_frames`.

    :return: (images float64 in [0, 1], masks uint8 in {0, 1})
    """
    img_paths = sorted(glob.glob(os.path.join(directory, 'img_*.ppm')))
    if not img_paths:
        raise CollectionError(f"no frames found in {directory}")
    images, masks = [], []
    for img_path in img_paths:
        index = os.path.basename(img_path)[len('img_'):-len('.ppm')]
        mask_path = os.path.join(directory, f"mask_{index}.pgm")
        bgr = cv2.imread(img_path, cv2.IMREAD_COLOR)
        mask = cv2.imread(mask_path, cv2.IMREAD_GRAYSCALE)
        if bgr is None or mask is None:
            raise CollectionError(f"cannot read frame pair {index} in {directory}")
        images.append(cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB).astype(np.float64) / 255.0)
        masks.append((mask > 127).astype(np.uint8))
    return np.stack(images), np.stack(masks)
