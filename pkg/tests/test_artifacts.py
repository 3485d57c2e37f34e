# -*- coding: utf-8 -*-
import json
import os
import tempfile
import unittest

from l2r_pipeline.errors import ChecksumMismatch, MissingArtifactError
from l2r_pipeline.harness.artifacts import MANIFEST, ArtifactStore, stage_key
from l2r_pipeline.utils import sha256_file


def write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    return path


class StageKeyTests(unittest.TestCase):

    def test_key_depends_on_every_input(self):
        base = stage_key('vae', 'vae.epochs = 120', {'vae_masks.npy': 'ab'})
        self.assertEqual(base, stage_key('vae', 'vae.epochs = 120', {'vae_masks.npy': 'ab'}))
        self.assertNotEqual(base, stage_key('segmenter', 'vae.epochs = 120', {'vae_masks.npy': 'ab'}))
        self.assertNotEqual(base, stage_key('vae', 'vae.epochs = 121', {'vae_masks.npy': 'ab'}))
        self.assertNotEqual(base, stage_key('vae', 'vae.epochs = 120', {'vae_masks.npy': 'ac'}))

    def test_upstream_order_does_not_matter(self):
        a = stage_key('x', '', {'a': '1', 'b': '2'})
        b = stage_key('x', '', {'b': '2', 'a': '1'})
        self.assertEqual(a, b)


class ArtifactStoreTests(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = self.tmp.name
        self.store = ArtifactStore(self.root)

    def tearDown(self):
        self.tmp.cleanup()

    def record_model(self):
        path = write(self.store.path('models', 'model.bin'), 'weights')
        self.store.record('model', 'k1', [path])
        return path

    def test_empty_directory_has_no_manifest(self):
        self.assertEqual(self.store.manifest, {})
        self.assertFalse(os.path.exists(os.path.join(self.root, MANIFEST)))

    def test_record_writes_relative_paths_and_checksums(self):
        path = self.record_model()
        with open(os.path.join(self.root, MANIFEST), 'r', encoding='utf-8') as f:
            manifest = json.load(f)
        self.assertEqual(manifest, {'model': {'key': 'k1', 'files': {'models/model.bin': sha256_file(path)}}})
        self.assertEqual(ArtifactStore(self.root).manifest, manifest)

    def test_manifest_is_stable(self):
        self.record_model()
        with open(os.path.join(self.root, MANIFEST), 'rb') as f:
            first = f.read()
        ArtifactStore(self.root).save()
        with open(os.path.join(self.root, MANIFEST), 'rb') as f:
            self.assertEqual(f.read(), first)

    def test_freshness(self):
        path = self.record_model()
        self.assertTrue(self.store.is_fresh('model', 'k1'))
        self.assertFalse(self.store.is_fresh('model', 'k2'))
        self.assertFalse(self.store.is_fresh('other', 'k1'))
        write(path, 'tampered')
        with self.assertLogs('l2r_pipeline.harness.artifacts', level='WARNING'):
            self.assertFalse(self.store.is_fresh('model', 'k1'))

    def test_require_verifies_content(self):
        path = self.record_model()
        self.assertEqual(self.store.require('model', 'models/model.bin'), path)
        write(path, 'tampered')
        with self.assertRaises(ChecksumMismatch):
            self.store.require('model', 'models/model.bin')
        os.remove(path)
        with self.assertRaises(MissingArtifactError):
            self.store.require('model', 'models/model.bin')

    def test_missing_stage_is_named(self):
        with self.assertRaises(MissingArtifactError) as ctx:
            self.store.require('vae', 'vae.vae')
        self.assertEqual(ctx.exception.stage, 'vae')
        self.assertIn("run the 'vae' stage first", str(ctx.exception))
        with self.assertRaises(MissingArtifactError):
            self.store.verify_stage('vae')

    def test_verify_stage_and_checksums(self):
        a = write(self.store.path('a.txt'), 'a')
        b = write(self.store.path('b.txt'), 'b')
        self.store.record('pair', 'k', [b, a])
        self.assertEqual(self.store.verify_stage('pair'), [a, b])
        self.assertEqual(sorted(self.store.checksums(['pair'])), ['a.txt', 'b.txt'])

    def test_forget(self):
        self.record_model()
        self.store.forget('model')
        self.assertEqual(ArtifactStore(self.root).manifest, {})
        self.store.forget('model')


if __name__ == '__main__':
    unittest.main()
