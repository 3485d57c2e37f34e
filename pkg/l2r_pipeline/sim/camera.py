# -*- coding: utf-8 -*-
"""Ego-view pinhole camera over a flat ground plane."""
import logging
import math

import numpy as np

from ..configs import CameraConfig

logger = logging.getLogger(__name__)


class Camera:
    """Precomputed ray table of a forward-looking camera.

    The camera sits ``cam_height`` meters above the car's reference point and
    looks along the heading. Rows below the horizon hit the ground; the
    bottom ``hood_fraction`` of the image shows the car's hood.

    :param cfg: camera configuration
    :type cfg: CameraConfig
    """

    def __init__(self, cfg=None):
        self.cfg = cfg or CameraConfig()
        h, w = self.cfg.height, self.cfg.width
        self.hood_rows = int(round(h * self.cfg.hood_fraction))
        focal = self.cfg.focal_fraction * w
        cy = self.cfg.horizon_fraction * h
        cx = 0.5 * w

        rows = np.arange(h) + 0.5
        cols = np.arange(w) + 0.5
        below = rows - cy
        self.ground_rows = np.flatnonzero((below > 0) & (np.arange(h) < h - self.hood_rows))
        forward = focal * self.cfg.cam_height / below[self.ground_rows]
        # left of the image center is positive lateral offset
        lateral = -(cols[None, :] - cx) * forward[:, None] / focal
        self.forward = np.broadcast_to(forward[:, None], lateral.shape).copy()
        self.lateral = lateral
        self.sky_rows = np.flatnonzero(below <= 0)

    def ground_points(self, state):
        """World coordinates (rows, width, 2) of the ground pixels for a car state."""
        c, s = math.cos(state.heading), math.sin(state.heading)
        x = state.x + self.forward * c - self.lateral * s
        y = state.y + self.forward * s + self.lateral * c
        return np.stack([x, y], axis=-1)

    def render_mask(self, state, track):
        """Ground-truth road mask, 1 where the pixel sees road."""
        mask = np.zeros((self.cfg.height, self.cfg.width), dtype=np.uint8)
        if len(self.ground_rows):
            mask[self.ground_rows] = track.on_road(self.ground_points(state))
        return mask

    def render(self, state, track, rng=None):
        """Render the camera image and its ground-truth road mask.

        :param rng: noise source; no noise is added when None
        :type rng: numpy.random.Generator
        :return: (image float64 (H, W, 3) in [0, 1], mask uint8 (H, W))
        """
        cfg = self.cfg
        mask = self.render_mask(state, track)
        img = np.empty((cfg.height, cfg.width, 3), dtype=np.float64)
        img[:] = cfg.grass_color
        img[mask == 1] = cfg.road_color
        img[self.sky_rows] = cfg.sky_color
        if self.hood_rows:
            img[cfg.height - self.hood_rows:] = cfg.hood_color
        if rng is not None and cfg.noise_sigma > 0:
            img += rng.normal(0.0, cfg.noise_sigma, img.shape)
            np.clip(img, 0.0, 1.0, out=img)
        return img, mask


def render_camera(state, track, cfg=None, rng=None):
    """Ego-view image and ground-truth mask for ``state`` on ``track``."""
    return Camera(cfg).render(state, track, rng)
