# -*- coding: utf-8 -*-
"""Artifact directory with a checksum manifest and per-stage cache keys."""
import hashlib
import json
import logging
import os

from ..errors import ChecksumMismatch, MissingArtifactError
from ..utils import ensure_dir, sha256_file

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'


def stage_key(stage, config_text, upstream):
    """Cache key of a stage: its name, its config lines and its inputs' checksums.

    :param upstream: mapping of relative path to sha256 of every input file
    :rtype: str
    """
    payload = json.dumps({'stage': stage, 'config': config_text, 'upstream': upstream},
                         sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


class ArtifactStore:
    """Files under ``root`` plus ``manifest.json``.

    The manifest maps each completed stage to its cache key and the
    sha256 of every file it produced (paths relative to ``root``).
    """

    def __init__(self, root):
        self.root = root
        self.manifest = self._load()

    def _load(self):
        path = os.path.join(self.root, MANIFEST)
        if not os.path.exists(path):
            return {}
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def save(self):
        ensure_dir(self.root)
        with open(os.path.join(self.root, MANIFEST), 'w', encoding='utf-8') as f:
            json.dump(self.manifest, f, sort_keys=True, indent=2)
            f.write('\n')

    def path(self, *parts):
        return os.path.join(self.root, *parts)

    def files_of(self, stage):
        return dict(self.manifest.get(stage, {}).get('files', {}))

    def checksums(self, stages):
        """Recorded checksums of every file produced by ``stages``."""
        out = {}
        for stage in stages:
            out.update(self.files_of(stage))
        return out

    def verify_file(self, relpath):
        """Check one recorded file against the manifest.

        :raises MissingArtifactError: the file or its record is absent
        :raises ChecksumMismatch: the file content changed
        """
        for stage, entry in sorted(self.manifest.items()):
            if relpath in entry.get('files', {}):
                full = self.path(relpath)
                if not os.path.exists(full):
                    raise MissingArtifactError(stage, full)
                actual = sha256_file(full)
                expected = entry['files'][relpath]
                if actual != expected:
                    raise ChecksumMismatch(full, expected, actual)
                return full
        raise MissingArtifactError(self._stage_guess(relpath), self.path(relpath))

    def _stage_guess(self, relpath):
        return os.path.splitext(os.path.basename(relpath))[0]

    def require(self, stage, relpath):
        """Path of an artifact produced by ``stage``, verified against the manifest."""
        if relpath not in self.files_of(stage):
            raise MissingArtifactError(stage, self.path(relpath))
        return self.verify_file(relpath)

    def verify_stage(self, stage):
        """Verify every file of ``stage``; returns their full paths in sorted order."""
        files = self.files_of(stage)
        if not files:
            raise MissingArtifactError(stage, self.root)
        return [self.verify_file(relpath) for relpath in sorted(files)]

    def is_fresh(self, stage, key):
        entry = self.manifest.get(stage)
        if not entry or entry.get('key') != key:
            return False
        for relpath, expected in entry.get('files', {}).items():
            full = self.path(relpath)
            if not os.path.exists(full) or sha256_file(full) != expected:
                logger.warning("artifact %s of stage '%s' is missing or corrupt; re-running", relpath, stage)
                return False
        return True

    def record(self, stage, key, paths):
        files = {}
        for full in paths:
            rel = os.path.relpath(full, self.root).replace(os.sep, '/')
            files[rel] = sha256_file(full)
        self.manifest[stage] = {'key': key, 'files': files}
        self.save()

    def forget(self, stage):
        if self.manifest.pop(stage, None) is not None:
            self.save()
