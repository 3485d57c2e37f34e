# -*- coding: utf-8 -*-
import csv
import logging

import numpy as np
from tqdm import tqdm

from ..configs import VaeConfig
from ..domain import Action
from ..errors import ContractViolation
from ..sim.dynamics import speed_controller
from ..utils import derive_seed
from ..vision.preprocess import PipelineMode, downsample_mask, preprocess_mask
from .vae import check_dataset

logger = logging.getLogger(__name__)

LATENT_DUMP_HEADER = ['episode', 'step', 'z1', 'z2', 'speed']


def collect_vae_dataset(envs, n_episodes, constant_speed, seed, speed_gain=0.5, cfg=None):
    """Drive straight at constant speed and keep the 28x28 ground-truth masks.

    Each episode starts at a random position along the track already at
    ``constant_speed``, holds steering at 0 and runs until the car leaves
    the road or the step cap is reached.

    :param envs: environments built with ``provide_masks=True``, used round-robin
    :rtype: numpy.ndarray
    :raises InsufficientDataError: fewer than ``cfg.min_masks`` masks
    :raises DegenerateDataError: almost every mask is identical
    """
    cfg = cfg or VaeConfig()
    v_max = envs[0].dynamics.v_max
    if not 0 <= constant_speed <= v_max:
        raise ContractViolation(f"constant_speed must be in [0, {v_max}], got {constant_speed}")
    masks = []
    for episode in tqdm(range(n_episodes), desc='vae data', disable=None, leave=False):
        env = envs[episode % len(envs)]
        rng = np.random.default_rng(derive_seed(seed, 'vae_start', episode))
        _, info = env.reset(seed=derive_seed(seed, 'vae_env', episode),
                            options={'start_distance': rng.uniform(0.0, env.track_length),
                                     'initial_speed': constant_speed})
        while True:
            masks.append(downsample_mask(preprocess_mask(info['mask'], PipelineMode.TRAINING)))
            state = info['state']
            action = Action(0.0, speed_controller(state.speed, constant_speed, speed_gain))
            _, _, terminated, truncated, info = env.step(action)
            if terminated or truncated:
                break
    masks = np.stack(masks) if masks else np.zeros((0, 28, 28), dtype=np.uint8)
    logger.info("collected %d VAE masks over %d episodes", len(masks), n_episodes)
    check_dataset(masks, cfg)
    return masks


def write_latent_dump(path, rows):
    """CSV of ``(episode, step, z1, z2, speed)`` rows."""
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(LATENT_DUMP_HEADER)
        for episode, step, z1, z2, speed in rows:
            writer.writerow([episode, step, repr(float(z1)), repr(float(z2)), repr(float(speed))])


def read_latent_dump(path):
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        return [(int(r['episode']), int(r['step']), float(r['z1']), float(r['z2']), float(r['speed']))
                for r in reader]
