# -*- coding: utf-8 -*-
"""Fully connected variational autoencoder with manual backpropagation.

The encoder maps a flattened binary mask through tanh layers to the mean
and log-variance of a 2-D Gaussian posterior; the decoder mirrors the
hidden sizes and ends in per-pixel logits.
"""
import dataclasses
import logging
import math
import warnings

import numpy as np
from tqdm import tqdm

from .. import binfile
from ..configs import VaeConfig
from ..domain import Latent
from ..errors import (ContractViolation, DegenerateDataError, InsufficientDataError,
                      NumericalFailure, TrainingFailure)
from ..utils import log_function

logger = logging.getLogger(__name__)

MAGIC = b'VAE2'
LATENT_DIM = 2
PROB_EPS = 1e-7
LOGIT_LIMIT = math.log((1.0 - PROB_EPS) / PROB_EPS)


def param_names(n_hidden):
    names = []
    for i in range(n_hidden):
        names += [f'enc_w{i}', f'enc_b{i}']
    names += ['mu_w', 'mu_b', 'lv_w', 'lv_b']
    for i in range(n_hidden):
        names += [f'dec_w{i}', f'dec_b{i}']
    names += ['out_w', 'out_b']
    return names


@dataclasses.dataclass
class VaeModel:
    input_shape: tuple
    hidden: tuple
    params: dict
    kl_weight: float = 1.0
    epochs: int = 0
    final_loss: float = float('nan')
    heldout_iou: float = float('nan')
    loss_curve: list = dataclasses.field(default_factory=list)

    @classmethod
    def initialize(cls, input_shape, hidden, rng, kl_weight=1.0):
        input_dim = int(np.prod(input_shape))
        params = {}

        def dense(prefix, fan_in, fan_out):
            params[f'{prefix}_w'] = rng.normal(0.0, 1.0 / math.sqrt(fan_in), (fan_in, fan_out))
            params[f'{prefix}_b'] = np.zeros(fan_out)

        sizes = [input_dim] + list(hidden)
        for i in range(len(hidden)):
            params[f'enc_w{i}'] = rng.normal(0.0, 1.0 / math.sqrt(sizes[i]), (sizes[i], sizes[i + 1]))
            params[f'enc_b{i}'] = np.zeros(sizes[i + 1])
        dense('mu', sizes[-1], LATENT_DIM)
        dense('lv', sizes[-1], LATENT_DIM)
        dec_sizes = [LATENT_DIM] + list(reversed(hidden))
        for i in range(len(hidden)):
            params[f'dec_w{i}'] = rng.normal(0.0, 1.0 / math.sqrt(dec_sizes[i]), (dec_sizes[i], dec_sizes[i + 1]))
            params[f'dec_b{i}'] = np.zeros(dec_sizes[i + 1])
        dense('out', dec_sizes[-1], input_dim)
        ordered = {name: params[name] for name in param_names(len(hidden))}
        return cls(input_shape=tuple(input_shape), hidden=tuple(hidden), params=ordered, kl_weight=kl_weight)

    @property
    def input_dim(self):
        return int(np.prod(self.input_shape))

    def flat(self):
        return np.concatenate([p.ravel() for p in self.params.values()])

    def set_flat(self, vector):
        offset = 0
        for p in self.params.values():
            p[...] = vector[offset:offset + p.size].reshape(p.shape)
            offset += p.size

    def copy(self):
        return dataclasses.replace(self, params={k: v.copy() for k, v in self.params.items()},
                                   loss_curve=list(self.loss_curve))


def _flatten(model, masks):
    masks = np.asarray(masks)
    if masks.shape[1:] != model.input_shape:
        raise ContractViolation(f"expected masks of shape {model.input_shape}, got {masks.shape[1:]}")
    return masks.reshape(len(masks), -1).astype(np.float64)


def _encode(params, n_hidden, x):
    acts = [x]
    h = x
    for i in range(n_hidden):
        h = np.tanh(h @ params[f'enc_w{i}'] + params[f'enc_b{i}'])
        acts.append(h)
    mu = h @ params['mu_w'] + params['mu_b']
    logvar = h @ params['lv_w'] + params['lv_b']
    return mu, logvar, acts


def _decode(params, n_hidden, z):
    acts = [z]
    h = z
    for i in range(n_hidden):
        h = np.tanh(h @ params[f'dec_w{i}'] + params[f'dec_b{i}'])
        acts.append(h)
    logits = h @ params['out_w'] + params['out_b']
    return logits, acts


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _terms(logits, x, mu, logvar):
    clamped = np.clip(logits, -LOGIT_LIMIT, LOGIT_LIMIT)
    recon = float(np.mean(np.sum(np.logaddexp(0.0, clamped) - x * clamped, axis=1)))
    kl = float(np.mean(0.5 * np.sum(mu ** 2 + np.exp(logvar) - logvar - 1.0, axis=1)))
    return recon, kl, clamped


def elbo_loss(model, batch, rng=None, eps=None):
    """Negative ELBO of a batch of masks.

    :param batch: (B, *input_shape) binary masks
    :param rng: source of the reparameterization noise
    :param eps: explicit (B, 2) noise, overrides ``rng``
    :return: (total, reconstruction, kl)
    :raises ContractViolation: when neither ``rng`` nor ``eps`` is given
    :raises NumericalFailure: when the loss is not finite
    """
    x = _flatten(model, batch)
    if len(x) == 0:
        raise ContractViolation("elbo_loss needs a non-empty batch")
    if eps is None and rng is None:
        raise ContractViolation("elbo_loss needs either rng or eps for the reparameterization noise")
    if eps is None:
        eps = rng.standard_normal((len(x), LATENT_DIM))
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != (len(x), LATENT_DIM):
        raise ContractViolation(f"expected noise of shape {(len(x), LATENT_DIM)}, got {eps.shape}")
    n_hidden = len(model.hidden)
    mu, logvar, _ = _encode(model.params, n_hidden, x)
    z = mu + np.exp(0.5 * logvar) * eps
    logits, _ = _decode(model.params, n_hidden, z)
    recon, kl, _ = _terms(logits, x, mu, logvar)
    total = recon + model.kl_weight * kl
    if not math.isfinite(total):
        raise NumericalFailure("non-finite ELBO")
    return total, recon, kl


def loss_and_grads(model, x, eps):
    """Negative ELBO terms and parameter gradients for flattened inputs ``x``."""
    params = model.params
    n_hidden = len(model.hidden)
    n = len(x)
    mu, logvar, enc_acts = _encode(params, n_hidden, x)
    std = np.exp(0.5 * logvar)
    z = mu + std * eps
    logits, dec_acts = _decode(params, n_hidden, z)
    recon, kl, clamped = _terms(logits, x, mu, logvar)
    total = recon + model.kl_weight * kl

    grads = {}
    inside = (logits > -LOGIT_LIMIT) & (logits < LOGIT_LIMIT)
    delta = (_sigmoid(clamped) - x) * inside / n
    grads['out_w'] = dec_acts[-1].T @ delta
    grads['out_b'] = delta.sum(axis=0)
    dh = delta @ params['out_w'].T
    for i in reversed(range(n_hidden)):
        dpre = dh * (1.0 - dec_acts[i + 1] ** 2)
        grads[f'dec_w{i}'] = dec_acts[i].T @ dpre
        grads[f'dec_b{i}'] = dpre.sum(axis=0)
        dh = dpre @ params[f'dec_w{i}'].T
    dz = dh

    beta = model.kl_weight
    dmu = dz + beta * mu / n
    dlogvar = dz * eps * 0.5 * std + beta * 0.5 * (np.exp(logvar) - 1.0) / n
    h = enc_acts[-1]
    grads['mu_w'] = h.T @ dmu
    grads['mu_b'] = dmu.sum(axis=0)
    grads['lv_w'] = h.T @ dlogvar
    grads['lv_b'] = dlogvar.sum(axis=0)
    dh = dmu @ params['mu_w'].T + dlogvar @ params['lv_w'].T
    for i in reversed(range(n_hidden)):
        dpre = dh * (1.0 - enc_acts[i + 1] ** 2)
        grads[f'enc_w{i}'] = enc_acts[i].T @ dpre
        grads[f'enc_b{i}'] = dpre.sum(axis=0)
        dh = dpre @ params[f'enc_w{i}'].T
    return (total, recon, kl), {name: grads[name] for name in params}


def encode_batch(model, masks):
    """Posterior means (B, 2) of a batch of masks."""
    mu, _, _ = _encode(model.params, len(model.hidden), _flatten(model, masks))
    return mu


def decode_batch(model, z):
    """Per-pixel road probabilities in (0, 1) for latents ``z`` (B, 2)."""
    z = np.asarray(z, dtype=np.float64).reshape(-1, LATENT_DIM)
    logits, _ = _decode(model.params, len(model.hidden), z)
    return _sigmoid(np.clip(logits, -LOGIT_LIMIT, LOGIT_LIMIT)).reshape((len(z),) + model.input_shape)


def encode(model, mask):
    """Posterior mean of one mask.

    :rtype: Latent
    """
    mask = np.asarray(mask)
    if mask.shape != model.input_shape:
        raise ContractViolation(f"expected a {model.input_shape} mask, got {mask.shape}")
    z1, z2 = encode_batch(model, mask[None])[0]
    return Latent(float(z1), float(z2))


def decode(model, z):
    if isinstance(z, Latent):
        z = z.as_array()
    return decode_batch(model, z)[0]


def reconstruction_iou(model, masks):
    """Mean IoU between masks and their thresholded reconstructions.

    A sample whose mask and reconstruction are both empty counts as 1.
    """
    masks = np.asarray(masks) > 0
    if len(masks) == 0:
        return float('nan')
    recon = decode_batch(model, encode_batch(model, masks)) > 0.5
    inter = np.logical_and(masks, recon).reshape(len(masks), -1).sum(axis=1)
    union = np.logical_or(masks, recon).reshape(len(masks), -1).sum(axis=1)
    iou = np.where(union == 0, 1.0, inter / np.maximum(union, 1))
    return float(np.mean(iou))


def grad_check(model, batch, n_params, rng, step=1e-3):
    """Largest relative error between analytic and central-difference gradients.

    The reparameterization noise is drawn once from ``rng`` and frozen.
    """
    work = model.copy()
    x = _flatten(work, batch)
    eps = rng.standard_normal((len(x), LATENT_DIM))
    _, grads = loss_and_grads(work, x, eps)
    analytic = np.concatenate([g.ravel() for g in grads.values()])
    base = work.flat()
    chosen = rng.choice(base.size, size=min(n_params, base.size), replace=False)
    worst = 0.0
    for i in chosen:
        shifted = base.copy()
        shifted[i] = base[i] + step
        work.set_flat(shifted)
        (plus, _, _), _ = loss_and_grads(work, x, eps)
        shifted[i] = base[i] - step
        work.set_flat(shifted)
        (minus, _, _), _ = loss_and_grads(work, x, eps)
        numeric = (plus - minus) / (2.0 * step)
        worst = max(worst, abs(analytic[i] - numeric) / max(abs(analytic[i]) + abs(numeric), 1e-6))
    return worst


def check_dataset(masks, cfg):
    """Reject mask sets that are too uniform or too small to train on."""
    n = len(masks)
    if n == 0:
        raise InsufficientDataError("no masks collected; collect more episodes")
    unique = len({m.tobytes() for m in np.asarray(masks, dtype=np.uint8)})
    if unique / n < cfg.min_unique_fraction:
        raise DegenerateDataError(
            f"only {unique} distinct masks out of {n}; the car probably never moved")
    if n < cfg.min_masks:
        raise InsufficientDataError(
            f"{n} masks collected, at least {cfg.min_masks} needed; collect more episodes")


@log_function
def train_vae(masks, cfg=None, rng=None):
    """Train a VAE with momentum SGD on the negative ELBO.

    :param masks: (N, *cfg.input_shape) binary masks
    :type cfg: VaeConfig
    :type rng: numpy.random.Generator
    :rtype: VaeModel
    :raises TrainingFailure: held-out IoU below ``cfg.failure_iou``
    """
    cfg = cfg or VaeConfig()
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    masks = np.asarray(masks, dtype=np.uint8)
    check_dataset(masks, cfg)

    n = len(masks)
    order = rng.permutation(n)
    n_holdout = max(1, int(math.ceil(n * cfg.holdout_fraction)))
    holdout, train = order[:n_holdout], order[n_holdout:]
    model = VaeModel.initialize(cfg.input_shape, cfg.encoder_hidden, rng, kl_weight=cfg.kl_weight)
    x_all = _flatten(model, masks)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    batch_index = 0

    for epoch in tqdm(range(cfg.epochs), desc='vae', disable=None, leave=False):
        shuffled = train[rng.permutation(len(train))]
        totals = []
        for start in range(0, len(shuffled), cfg.batch_size):
            x = x_all[shuffled[start:start + cfg.batch_size]]
            eps = rng.standard_normal((len(x), LATENT_DIM))
            (total, _, kl), grads = loss_and_grads(model, x, eps)
            if not math.isfinite(total):
                raise NumericalFailure("non-finite ELBO", batch_index)
            if kl < -1e-12:
                raise NumericalFailure(f"negative KL term {kl}", batch_index)
            norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if not math.isfinite(norm):
                raise NumericalFailure("non-finite gradient", batch_index)
            scale = min(1.0, cfg.clip_norm / norm) if norm > 0 else 1.0
            for k, g in grads.items():
                velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * scale * g
                model.params[k] += velocity[k]
            totals.append(total)
            batch_index += 1
        model.loss_curve.append(float(np.mean(totals)))
        model.epochs = epoch + 1
        logger.debug("vae epoch %d loss %.4f", epoch + 1, model.loss_curve[-1])

    for k in model.params:
        model.params[k] = model.params[k].astype(np.float32).astype(np.float64)
    model.final_loss = model.loss_curve[-1]
    model.heldout_iou = reconstruction_iou(model, masks[holdout])
    if model.heldout_iou < cfg.failure_iou:
        raise TrainingFailure(f"VAE held-out IoU {model.heldout_iou:.4f} < {cfg.failure_iou}", model.loss_curve)
    if model.heldout_iou < cfg.target_iou:
        warnings.warn(f"VAE held-out IoU {model.heldout_iou:.4f} is below the target {cfg.target_iou}")
    logger.info("vae trained: %d epochs, final loss %.3f, held-out IoU %.4f",
                model.epochs, model.final_loss, model.heldout_iou)
    return model


def save_vae(model, path):
    """Write ``path`` as magic, shape header, f32 parameters, then the model record."""
    writer = binfile.Writer()
    binfile.write_shapes_and_params(writer, model.params)
    writer.u32(len(model.input_shape))
    for dim in model.input_shape:
        writer.u32(dim)
    writer.u32(len(model.hidden))
    for size in model.hidden:
        writer.u32(size)
    writer.f64(model.kl_weight).u32(model.epochs).f64(model.final_loss).f64(model.heldout_iou)
    writer.u32(len(model.loss_curve)).array(model.loss_curve, np.float64)
    binfile.write_checked(path, MAGIC, writer.getvalue())


def load_vae(path):
    reader = binfile.Reader(binfile.read_checked(path, MAGIC), path)
    shapes = binfile.read_shapes(reader)
    n_hidden, rest = divmod(len(shapes) - 6, 4)
    if n_hidden < 0 or rest:
        raise ContractViolation(f"{path}: {len(shapes)} parameter arrays do not form a VAE")
    params = binfile.read_params(reader, param_names(n_hidden), shapes)
    input_shape = tuple(reader.u32() for _ in range(reader.u32()))
    hidden = tuple(reader.u32() for _ in range(reader.u32()))
    if hidden != tuple(params[f'enc_b{i}'].shape[-1] for i in range(n_hidden)):
        raise ContractViolation(f"{path}: hidden sizes {hidden} disagree with the parameter shapes")
    kl_weight, epochs = reader.f64(), reader.u32()
    final_loss, heldout_iou = reader.f64(), reader.f64()
    curve = reader.array(reader.u32(), np.float64).tolist()
    reader.done()
    return VaeModel(input_shape=input_shape, hidden=hidden, params=params, kl_weight=kl_weight,
                    epochs=epochs, final_loss=final_loss, heldout_iou=heldout_iou, loss_curve=curve)
