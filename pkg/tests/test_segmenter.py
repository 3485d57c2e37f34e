# -*- coding: utf-8 -*-
import dataclasses
import math
import os
import struct
import tempfile
import unittest
import warnings

import numpy as np

from l2r_pipeline.configs import AugmentConfig, CameraConfig, SegmenterConfig
from l2r_pipeline.domain import CarState
from l2r_pipeline.errors import ChecksumMismatch, ContractViolation, InsufficientDataError, TrainingFailure
from l2r_pipeline.sim.camera import Camera
from l2r_pipeline.sim.track import make_stadium_track
from l2r_pipeline.vision.augment import augment
from l2r_pipeline.vision.dataset import build_segmenter_dataset
from l2r_pipeline.vision.preprocess import preprocess, preprocess_mask
from l2r_pipeline.vision.segmenter import (SegmenterModel, load_segmenter, pixel_accuracy, save_segmenter,
                                           segment, segment_batch, segmenter_grad_check, train_segmenter)

ROAD = np.array([0.42, 0.42, 0.45])
GRASS = np.array([0.20, 0.55, 0.18])
GEOMETRIC_ONLY = dataclasses.replace(AugmentConfig.disabled(), shift_scale_rotate=1.0)


def two_color_dataset(n, size, seed):
    """Noiseless road/grass images split by a random line, with exact masks."""
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:size, 0:size]
    images = np.empty((n, size, size, 3))
    masks = np.empty((n, size, size), dtype=np.uint8)
    for i in range(n):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        offset = rng.uniform(-0.3, 0.3) * size
        side = (cols - size / 2) * np.cos(angle) + (rows - size / 2) * np.sin(angle) - offset
        masks[i] = side > 0
        images[i] = np.where(masks[i][..., None] == 1, ROAD, GRASS)
    return images, masks


def random_pose(track, rng):
    """A car state somewhere on ``track``, off the centerline and slightly turned."""
    arc = rng.uniform(0.0, track.total_length)
    point, heading, half_width = track.pose_at(arc)
    offset = rng.uniform(-0.5, 0.5) * half_width
    return CarState(x=float(point[0] - math.sin(heading) * offset), y=float(point[1] + math.cos(heading) * offset),
                    heading=heading + rng.uniform(-0.25, 0.25), speed=0.0, lap_distance=arc)


def rendered_frames(track, camera, n, seed, noisy=True):
    """Raw camera frames and masks at random poses."""
    rng = np.random.default_rng(seed)
    pairs = [camera.render(random_pose(track, rng), track, rng if noisy else None) for _ in range(n)]
    return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])


def iou(predicted, truth):
    predicted, truth = predicted > 0, truth > 0
    union = np.logical_or(predicted, truth).sum()
    return 1.0 if union == 0 else float(np.logical_and(predicted, truth).sum() / union)


class SegmenterGradientTests(unittest.TestCase):

    def test_analytic_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        model = SegmenterModel.initialize(4, rng)
        images = rng.uniform(0.0, 1.0, (3, 8, 8, 3))
        masks = rng.integers(0, 2, (3, 8, 8))
        error = segmenter_grad_check(model, images, masks, 100, np.random.default_rng(1))
        self.assertLess(error, 1e-4)

    def test_grad_check_is_seeded(self):
        rng = np.random.default_rng(2)
        model = SegmenterModel.initialize(3, rng)
        images = rng.uniform(0.0, 1.0, (2, 6, 6, 3))
        masks = rng.integers(0, 2, (2, 6, 6))
        a = segmenter_grad_check(model, images, masks, 20, np.random.default_rng(5))
        b = segmenter_grad_check(model, images, masks, 20, np.random.default_rng(5))
        self.assertEqual(a, b)


class SegmenterTrainingTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.images, cls.masks = two_color_dataset(80, 48, seed=0)
        cls.cfg = SegmenterConfig(min_pairs=40, max_epochs=40, target_accuracy=0.999)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            cls.model = train_segmenter(cls.images, cls.masks, cls.cfg, np.random.default_rng(0))

    def test_separable_colors_are_learned(self):
        self.assertGreaterEqual(self.model.heldout_accuracy, 0.99)
        self.assertGreaterEqual(pixel_accuracy(self.model, self.images, self.masks), 0.99)

    def test_flipped_labels_score_near_zero(self):
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            flipped = train_segmenter(self.images, 1 - self.masks, self.cfg, np.random.default_rng(0))
        self.assertGreaterEqual(flipped.heldout_accuracy, 0.99)
        self.assertLessEqual(pixel_accuracy(flipped, self.images, self.masks), 0.05)

    def test_unseen_images(self):
        images, masks = two_color_dataset(10, 48, seed=99)
        predicted = segment_batch(self.model, images)
        self.assertGreaterEqual(float(np.mean(predicted == masks)), 0.98)
        self.assertTrue(np.array_equal(segment(self.model, images[0]), predicted[0]))

    def test_training_is_seeded(self):
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            again = train_segmenter(self.images, self.masks, self.cfg, np.random.default_rng(0))
        for name, value in self.model.params.items():
            self.assertTrue(np.array_equal(value, again.params[name]), name)
        self.assertEqual(self.model.loss_curve, again.loss_curve)

    def test_save_and_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'segmenter.seg')
            save_segmenter(self.model, path)
            loaded = load_segmenter(path)
            with open(path, 'r+b') as f:
                f.seek(-1, os.SEEK_END)
                last = f.read(1)
                f.seek(-1, os.SEEK_END)
                f.write(bytes([last[0] ^ 0xFF]))
            with self.assertRaises(ChecksumMismatch):
                load_segmenter(path)
        self.assertEqual(loaded.epochs, self.model.epochs)
        self.assertEqual(loaded.loss_curve, self.model.loss_curve)
        self.assertEqual(loaded.heldout_accuracy, self.model.heldout_accuracy)
        self.assertTrue(np.array_equal(segment_batch(loaded, self.images[:5]),
                                       segment_batch(self.model, self.images[:5])))

    def test_file_starts_with_the_shape_header_and_parameters(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'segmenter.seg')
            save_segmenter(self.model, path)
            with open(path, 'rb') as f:
                data = f.read()
        self.assertEqual(data[:4], b'SEG1')
        offset = 4
        (count,) = struct.unpack_from('<I', data, offset)
        offset += 4
        self.assertEqual(count, 4)
        shapes = []
        for _ in range(count):
            (ndim,) = struct.unpack_from('<I', data, offset)
            shapes.append(struct.unpack_from(f'<{ndim}I', data, offset + 4))
            offset += 4 + 4 * ndim
        self.assertEqual(shapes, [(54, 8), (8,), (72, 1), (1,)])
        w1 = np.frombuffer(data, dtype='<f4', count=54 * 8, offset=offset).reshape(54, 8)
        self.assertTrue(np.array_equal(w1.astype(np.float64), self.model.params['w1']))


class RenderedFrameTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.track = make_stadium_track(straight_length=100.0, radius=25.0)
        raw_images, raw_masks = rendered_frames(cls.track, Camera(), 120, seed=0)
        images, masks = build_segmenter_dataset(raw_images, raw_masks, dataclasses.replace(
            AugmentConfig.disabled(), shift_scale_rotate=0.5), np.random.default_rng(1))
        cfg = SegmenterConfig(min_pairs=60, max_epochs=30, target_accuracy=0.99)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            cls.model = train_segmenter(images, masks, cfg, np.random.default_rng(2))
        cls.clean = Camera(CameraConfig(noise_sigma=0.0))

    def test_noiseless_frames_are_segmented(self):
        raw_images, raw_masks = rendered_frames(self.track, self.clean, 10, seed=3, noisy=False)
        scores = [iou(segment(self.model, preprocess(raw)), preprocess_mask(mask))
                  for raw, mask in zip(raw_images, raw_masks)]
        self.assertGreaterEqual(np.mean(scores), 0.9)
        self.assertGreaterEqual(min(scores), 0.8)

    def test_geometric_augmentation_costs_little(self):
        raw_images, raw_masks = rendered_frames(self.track, self.clean, 100, seed=4, noisy=False)
        rng = np.random.default_rng(5)
        plain, warped = [], []
        for raw, mask in zip(raw_images, raw_masks):
            plain.append(iou(segment(self.model, preprocess(raw)), preprocess_mask(mask)))
            aug_img, aug_mask = augment(raw, mask, GEOMETRIC_ONLY, rng)
            warped.append(iou(segment(self.model, preprocess(aug_img)), preprocess_mask(aug_mask)))
        self.assertLess(np.mean(plain) - np.mean(warped), 0.1)

    def test_sky_is_not_road(self):
        sky = np.empty((64, 64, 3))
        sky[:] = CameraConfig().sky_color
        self.assertLess(float(segment(self.model, sky).mean()), 0.05)


class SegmenterFailureTests(unittest.TestCase):

    def test_untrained_model_cannot_segment(self):
        with self.assertRaises(ContractViolation):
            segment(SegmenterModel.untrained(), np.zeros((64, 64, 3)))

    def test_too_few_pairs(self):
        images, masks = two_color_dataset(10, 16, seed=1)
        with self.assertRaises(InsufficientDataError):
            train_segmenter(images, masks, SegmenterConfig(), np.random.default_rng(0))

    def test_unlearnable_labels_fail(self):
        rng = np.random.default_rng(4)
        images = rng.uniform(0.0, 1.0, (40, 12, 12, 3))
        masks = rng.integers(0, 2, (40, 12, 12))
        cfg = SegmenterConfig(min_pairs=20, max_epochs=2)
        with self.assertRaises(TrainingFailure) as ctx:
            train_segmenter(images, masks, cfg, np.random.default_rng(0))
        self.assertEqual(len(ctx.exception.loss_curve), 2)


if __name__ == '__main__':
    unittest.main()
