# -*- coding: utf-8 -*-
"""Small convolutional per-pixel road classifier with hand-written gradients.

Two 3x3 'same' convolutions: the first maps the input features to
``hidden_channels`` tanh units, the second maps those to one road logit
per pixel. Input features are the pixel color centered at 0.5 followed by
the color relative to the frame's per-channel mean.
"""
import dataclasses
import logging
import math
import warnings

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from tqdm import tqdm

from .. import binfile
from ..configs import SegmenterConfig
from ..errors import ContractViolation, InsufficientDataError, NumericalFailure, TrainingFailure
from ..utils import log_function

logger = logging.getLogger(__name__)

MAGIC = b'SEG1'
IN_FEATURES = 6
PARAM_NAMES = ('w1', 'b1', 'w2', 'b2')


@dataclasses.dataclass
class SegmenterModel:
    """Segmenter parameters plus training metadata.

    ``trained`` is False for the untrained sentinel returned by
    :meth:`untrained`; such a model cannot segment.
    """
    params: dict
    epochs: int = 0
    final_loss: float = float('nan')
    heldout_accuracy: float = float('nan')
    road_fraction: float = float('nan')
    loss_curve: list = dataclasses.field(default_factory=list)
    trained: bool = True

    @classmethod
    def initialize(cls, hidden_channels, rng):
        c = int(hidden_channels)
        params = {
            'w1': rng.normal(0.0, 1.0 / math.sqrt(9 * IN_FEATURES), (9 * IN_FEATURES, c)),
            'b1': np.zeros(c),
            'w2': rng.normal(0.0, 1.0 / math.sqrt(9 * c), (9 * c, 1)),
            'b2': np.zeros(1),
        }
        return cls(params=params, trained=False)

    @classmethod
    def untrained(cls, hidden_channels=8):
        return cls.initialize(hidden_channels, np.random.default_rng(0))

    @property
    def hidden_channels(self):
        return self.params['b1'].shape[0]

    @property
    def n_params(self):
        return sum(p.size for p in self.params.values())

    def flat(self):
        return np.concatenate([self.params[n].ravel() for n in PARAM_NAMES])

    def set_flat(self, vector):
        offset = 0
        for n in PARAM_NAMES:
            p = self.params[n]
            p[...] = vector[offset:offset + p.size].reshape(p.shape)
            offset += p.size


def input_features(images):
    """(B, H, W, 3) images to (B, H, W, 6) model features."""
    images = np.asarray(images, dtype=np.float64)
    relative = images - images.mean(axis=(1, 2), keepdims=True)
    return np.concatenate([images - 0.5, relative], axis=-1)


def im2col(x):
    """3x3 zero-padded patches: (B, H, W, C) to (B, H, W, C*9) ordered (c, ky, kx)."""
    b, h, w, c = x.shape
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    windows = sliding_window_view(padded, (3, 3), axis=(1, 2))
    return windows.reshape(b, h, w, c * 9)


def col2im(cols, channels):
    """Adjoint of :func:`im2col`."""
    b, h, w, _ = cols.shape
    cols = cols.reshape(b, h, w, channels, 3, 3)
    padded = np.zeros((b, h + 2, w + 2, channels))
    for ky in range(3):
        for kx in range(3):
            padded[:, ky:ky + h, kx:kx + w, :] += cols[..., ky, kx]
    return padded[:, 1:-1, 1:-1, :]


def forward(params, images):
    """Road logits (B, H, W) plus the activations needed by :func:`backward`."""
    cols1 = im2col(input_features(images))
    hidden = np.tanh(cols1 @ params['w1'] + params['b1'])
    cols2 = im2col(hidden)
    logits = (cols2 @ params['w2'])[..., 0] + params['b2'][0]
    return logits, (cols1, hidden, cols2)


def bce_with_logits(logits, targets):
    """Mean per-pixel binary cross-entropy, stable for any logit."""
    return float(np.mean(np.logaddexp(0.0, logits) - targets * logits))


def loss_and_grads(params, images, masks):
    """Mean per-pixel BCE and its gradient with respect to every parameter."""
    targets = np.asarray(masks, dtype=np.float64)
    logits, (cols1, hidden, cols2) = forward(params, images)
    loss = bce_with_logits(logits, targets)

    dlogits = (0.5 * (1.0 + np.tanh(0.5 * logits)) - targets) / logits.size
    c = hidden.shape[-1]
    dl = dlogits[..., None]
    grads = {
        'w2': cols2.reshape(-1, cols2.shape[-1]).T @ dl.reshape(-1, 1),
        'b2': np.array([dlogits.sum()]),
    }
    dhidden = col2im(dl @ params['w2'].T, c)
    dpre = dhidden * (1.0 - hidden ** 2)
    grads['w1'] = cols1.reshape(-1, cols1.shape[-1]).T @ dpre.reshape(-1, c)
    grads['b1'] = dpre.reshape(-1, c).sum(axis=0)
    return loss, grads


def _predict_logits(model, images, batch_size=32):
    out = []
    for start in range(0, len(images), batch_size):
        logits, _ = forward(model.params, images[start:start + batch_size])
        out.append(logits)
    return np.concatenate(out) if out else np.zeros((0,) + np.shape(images)[1:3])


def pixel_accuracy(model, images, masks):
    predicted = _predict_logits(model, np.asarray(images)) > 0.0
    return float(np.mean(predicted == (np.asarray(masks) > 0)))


def segment(model, img):
    """Binary road mask of one preprocessed image (sigmoid > 0.5, i.e. logit > 0).

    :type model: SegmenterModel
    :param img: (64, 64, 3) image
    :rtype: numpy.ndarray
    """
    if not model.trained:
        raise ContractViolation("segment() called with an untrained segmenter")
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ContractViolation(f"expected an (H, W, 3) image, got shape {img.shape}")
    logits, _ = forward(model.params, img[None])
    return (logits[0] > 0.0).astype(np.uint8)


def segment_batch(model, images):
    if not model.trained:
        raise ContractViolation("segment() called with an untrained segmenter")
    return (_predict_logits(model, np.asarray(images)) > 0.0).astype(np.uint8)


def segmenter_grad_check(model, images, masks, n_params, rng, step=1e-3):
    """Largest relative error between analytic and central-difference gradients.

    :param n_params: number of randomly selected parameters to check
    :rtype: float
    """
    work = SegmenterModel(params={k: v.copy() for k, v in model.params.items()})
    _, grads = loss_and_grads(work.params, images, masks)
    analytic = np.concatenate([grads[n].ravel() for n in PARAM_NAMES])
    base = work.flat()
    chosen = rng.choice(base.size, size=min(n_params, base.size), replace=False)
    worst = 0.0
    for i in chosen:
        shifted = base.copy()
        shifted[i] = base[i] + step
        work.set_flat(shifted)
        plus, _ = loss_and_grads(work.params, images, masks)
        shifted[i] = base[i] - step
        work.set_flat(shifted)
        minus, _ = loss_and_grads(work.params, images, masks)
        numeric = (plus - minus) / (2.0 * step)
        worst = max(worst, abs(analytic[i] - numeric) / max(abs(analytic[i]) + abs(numeric), 1e-6))
    return worst


@log_function
def train_segmenter(images, masks, cfg=None, rng=None):
    """Train the segmenter with momentum SGD on per-pixel BCE.

    Training stops early when the held-out accuracy reaches
    ``cfg.target_accuracy``. Finishing between ``cfg.failure_accuracy`` and
    the target only warns.

    :param images: (N, 64, 64, 3) preprocessed images
    :param masks: (N, 64, 64) binary masks
    :type cfg: SegmenterConfig
    :type rng: numpy.random.Generator
    :rtype: SegmenterModel
    :raises InsufficientDataError: fewer than ``cfg.min_pairs`` pairs
    :raises TrainingFailure: held-out accuracy below ``cfg.failure_accuracy``
    """
    cfg = cfg or SegmenterConfig()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    images = np.asarray(images, dtype=np.float64)
    masks = np.asarray(masks, dtype=np.float64)
    n = len(images)
    if n < cfg.min_pairs:
        raise InsufficientDataError(f"segmenter needs at least {cfg.min_pairs} pairs, got {n}")
    if masks.shape != images.shape[:3]:
        raise ContractViolation(f"masks {masks.shape} do not match images {images.shape}")

    order = rng.permutation(n)
    n_holdout = max(1, int(math.ceil(n * cfg.holdout_fraction)))
    holdout, train = order[:n_holdout], order[n_holdout:]
    road_fraction = float(masks[train].mean())
    logger.info("segmenter: %d train / %d held-out pairs, road fraction %.3f",
                len(train), len(holdout), road_fraction)

    model = SegmenterModel.initialize(cfg.hidden_channels, rng)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    accuracy = 0.0
    batch_index = 0
    for epoch in tqdm(range(cfg.max_epochs), desc='segmenter', disable=None, leave=False):
        shuffled = train[rng.permutation(len(train))]
        losses = []
        for start in range(0, len(shuffled), cfg.batch_size):
            batch = shuffled[start:start + cfg.batch_size]
            loss, grads = loss_and_grads(model.params, images[batch], masks[batch])
            if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise NumericalFailure("segmenter loss became non-finite", batch_index)
            for k, g in grads.items():
                velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * g
                model.params[k] += velocity[k]
            losses.append(loss)
            batch_index += 1
        model.loss_curve.append(float(np.mean(losses)))
        model.epochs = epoch + 1
        accuracy = pixel_accuracy(model, images[holdout], masks[holdout])
        logger.debug("segmenter epoch %d loss %.5f held-out accuracy %.4f",
                     epoch + 1, model.loss_curve[-1], accuracy)
        if accuracy >= cfg.target_accuracy:
            break

    for k in model.params:
        model.params[k] = model.params[k].astype(np.float32).astype(np.float64)
    model.trained = True
    model.final_loss = model.loss_curve[-1]
    model.heldout_accuracy = pixel_accuracy(model, images[holdout], masks[holdout])
    model.road_fraction = road_fraction

    if model.heldout_accuracy < cfg.failure_accuracy:
        raise TrainingFailure(
            f"segmenter held-out accuracy {model.heldout_accuracy:.4f} < {cfg.failure_accuracy}",
            model.loss_curve)
    if model.heldout_accuracy < cfg.target_accuracy:
        warnings.warn(f"segmenter held-out accuracy {model.heldout_accuracy:.4f} "
                      f"is below the target {cfg.target_accuracy}")
    logger.info("segmenter trained: %d epochs, held-out accuracy %.4f", model.epochs, model.heldout_accuracy)
    return model


def save_segmenter(model, path):
    """Write ``path`` as magic, shape header, f32 parameters, then the training record."""
    writer = binfile.Writer()
    binfile.write_shapes_and_params(writer, {n: model.params[n] for n in PARAM_NAMES})
    writer.u32(model.epochs).f64(model.final_loss).f64(model.heldout_accuracy).f64(model.road_fraction)
    writer.u32(len(model.loss_curve)).array(model.loss_curve, np.float64)
    binfile.write_checked(path, MAGIC, writer.getvalue())


def load_segmenter(path):
    reader = binfile.Reader(binfile.read_checked(path, MAGIC), path)
    params = binfile.read_shapes_and_params(reader, PARAM_NAMES)
    epochs = reader.u32()
    final_loss, accuracy, road_fraction = reader.f64(), reader.f64(), reader.f64()
    curve = reader.array(reader.u32(), np.float64).tolist()
    reader.done()
    return SegmenterModel(params=params, epochs=epochs, final_loss=final_loss, heldout_accuracy=accuracy,
                          road_fraction=road_fraction, loss_curve=curve, trained=True)
