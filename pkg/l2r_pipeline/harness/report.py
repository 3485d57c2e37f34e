# -*- coding: utf-8 -*-
"""Deterministic text and CSV renderings of a finished artifact directory."""
import csv
import logging
import os

from ..adapt import load_speed_model
from ..configfile import load_config
from ..errors import ChecksumMismatch, MissingArtifactError, PipelineError
from ..latent.collect import read_latent_dump, write_latent_dump
from ..latent.vae import load_vae
from ..sim.track import load_track_csv
from ..utils import ensure_dir
from ..vision.segmenter import load_segmenter
from .artifacts import ArtifactStore
from .pipeline import (CONFIG_FILE, LATENT_DUMP, SEGMENTER_FILE, SPEED_MODEL_FILE, STAGE_NAMES, VAE_FILE)

logger = logging.getLogger(__name__)

REPORT_DIR = 'report'


def _warn(message):
    logger.warning(message)


def _checked(store, stage, relpath):
    """Verified full path of an artifact, or None with a warning when it is unusable."""
    try:
        return store.require(stage, relpath)
    except (MissingArtifactError, ChecksumMismatch) as e:
        _warn(f"report: skipping {relpath}: {e}")
        return None


def _write_csv(path, header, rows):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _latent_scatter(store, out_dir):
    path = _checked(store, 'value_buffer', LATENT_DUMP)
    if path is None:
        return None
    target = os.path.join(out_dir, 'latent_scatter.csv')
    write_latent_dump(target, read_latent_dump(path))
    return target


def _track_length(store, cfg):
    """Length of the training track when its CSV was recorded, else None."""
    if cfg is None:
        return None
    relpath = f"tracks/track_{cfg.track_seed}.csv"
    if relpath not in store.files_of('vae_data'):
        return None
    path = _checked(store, 'vae_data', relpath)
    return load_track_csv(path).total_length if path else None


def _speed_per_segment(store, out_dir):
    path = _checked(store, 'speed_model', SPEED_MODEL_FILE)
    if path is None:
        return None
    cfg_path = _checked(store, 'config', CONFIG_FILE)
    cfg = load_config(cfg_path) if cfg_path else None
    model = load_speed_model(path, cfg.adapt if cfg else None)
    track_length = _track_length(store, cfg) or model.track_length
    rows = []
    for i, target in enumerate(model.targets):
        end = min((i + 1) * model.segment_length, track_length)
        rows.append([i, f"{i * model.segment_length:.3f}", f"{end:.3f}",
                     f"{target:.6f}", f"{3.6 * target:.6f}"])
    return _write_csv(os.path.join(out_dir, 'speed_per_segment.csv'),
                      ['segment_index', 'start_m', 'end_m', 'target_speed_mps', 'target_speed_kmh'], rows)


def _loss_curves(store, out_dir):
    rows = []
    for stage, relpath, loader in (('segmenter', SEGMENTER_FILE, load_segmenter), ('vae', VAE_FILE, load_vae)):
        path = _checked(store, stage, relpath)
        if path is None:
            continue
        try:
            curve = loader(path).loss_curve
        except PipelineError as e:
            _warn(f"report: cannot read {relpath}: {e}")
            continue
        rows.extend([stage, epoch, repr(float(loss))] for epoch, loss in enumerate(curve))
    if not rows:
        return None
    return _write_csv(os.path.join(out_dir, 'loss_curves.csv'), ['stage', 'epoch', 'loss'], rows)


def _stage_order(stage):
    order = ('config',) + STAGE_NAMES
    return (order.index(stage) if stage in order else len(order), stage)


def _summary(store, out_dir, written):
    lines = ['artifacts', '---------']
    for stage in sorted(store.manifest, key=_stage_order):
        for relpath, checksum in sorted(store.files_of(stage).items()):
            full = store.path(relpath)
            try:
                store.verify_file(relpath)
                status = 'ok'
            except MissingArtifactError:
                status = 'MISSING'
            except ChecksumMismatch:
                status = 'CORRUPT'
            lines.append(f"{stage:<18} {relpath:<40} {checksum} {status}")
            if status != 'ok':
                _warn(f"report: {full} is {status.lower()}")
    missing = [s for s in STAGE_NAMES if s not in store.manifest]
    if missing:
        lines.append('')
        lines.append('incomplete stages: ' + ', '.join(missing))
    lines.extend(['', 'report files', '------------'])
    lines.extend(os.path.basename(p) for p in written)
    lines.extend(['', 'metrics', '-------'])
    metrics_path = _checked(store, 'evaluation', 'metrics.txt')
    if metrics_path is None:
        lines.append('no evaluation metrics')
    else:
        with open(metrics_path, 'r', encoding='utf-8') as f:
            lines.append(f.read().rstrip('\n'))
    path = os.path.join(out_dir, 'summary.txt')
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')
    return path


def cmd_report(artifact_dir):
    """Write ``report/`` inside ``artifact_dir``; returns the written paths.

    Missing or corrupt artifacts are skipped with a warning.

    :raises MissingArtifactError: the directory holds no artifacts at all
    """
    store = ArtifactStore(artifact_dir)
    if not store.manifest:
        raise MissingArtifactError('pipeline', os.path.join(artifact_dir, 'manifest.json') + ' (no artifacts)')
    out_dir = ensure_dir(store.path(REPORT_DIR))
    written = [p for p in (_latent_scatter(store, out_dir), _speed_per_segment(store, out_dir),
                           _loss_curves(store, out_dir)) if p is not None]
    written.append(_summary(store, out_dir, written))
    logger.info("report written to %s", out_dir)
    return written
