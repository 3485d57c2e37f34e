# -*- coding: utf-8 -*-
"""Little-endian binary artifact files closed by a SHA-256 trailer.

Layout::

    magic (4 bytes) | payload | sha256(magic + payload) (32 bytes)

Model payloads start with the shape header and the f32 parameters
(:func:`write_shapes_and_params`) and keep their training record last.
"""
import hashlib
import struct

import numpy as np

from .errors import ChecksumMismatch, ContractViolation

TRAILER_SIZE = 32


def write_checked(path, magic, payload):
    body = magic + payload
    with open(path, 'wb') as f:
        f.write(body)
        f.write(hashlib.sha256(body).digest())


def read_checked(path, magic):
    """Read a file written by :func:`write_checked` and return its payload.

    :raises ChecksumMismatch: when the trailer does not match the content
    :raises ContractViolation: when the magic is wrong
    """
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < len(magic) + TRAILER_SIZE:
        raise ChecksumMismatch(path, 'trailer', 'truncated file')
    body, trailer = data[:-TRAILER_SIZE], data[-TRAILER_SIZE:]
    actual = hashlib.sha256(body).digest()
    if actual != trailer:
        raise ChecksumMismatch(path, trailer.hex(), actual.hex())
    if body[:len(magic)] != magic:
        raise ContractViolation(f"{path}: bad magic {body[:len(magic)]!r}, expected {magic!r}")
    return body[len(magic):]


class Writer:
    """Accumulates little-endian fields."""

    def __init__(self):
        self.parts = []

    def u32(self, value):
        self.parts.append(struct.pack('<I', int(value)))
        return self

    def f64(self, value):
        self.parts.append(struct.pack('<d', float(value)))
        return self

    def array(self, values, dtype):
        self.parts.append(np.ascontiguousarray(values, dtype=np.dtype(dtype).newbyteorder('<')).tobytes())
        return self

    def getvalue(self):
        return b''.join(self.parts)


class Reader:
    def __init__(self, data, path='<bytes>'):
        self.data = data
        self.offset = 0
        self.path = path

    def _take(self, size):
        if self.offset + size > len(self.data):
            raise ContractViolation(f"{self.path}: unexpected end of data")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u32(self):
        return struct.unpack('<I', self._take(4))[0]

    def f64(self):
        return struct.unpack('<d', self._take(8))[0]

    def array(self, count, dtype):
        dt = np.dtype(dtype).newbyteorder('<')
        return np.frombuffer(self._take(count * dt.itemsize), dtype=dt).astype(np.dtype(dtype).newbyteorder('='))

    def done(self):
        if self.offset != len(self.data):
            raise ContractViolation(f"{self.path}: {len(self.data) - self.offset} trailing bytes")


def write_shapes_and_params(writer, params):
    """Shape header followed by all parameters as f32, in dict order."""
    writer.u32(len(params))
    for value in params.values():
        writer.u32(value.ndim)
        for dim in value.shape:
            writer.u32(dim)
    for value in params.values():
        writer.array(value.ravel(), np.float32)


def read_shapes(reader):
    """The shape header written by :func:`write_shapes_and_params`."""
    shapes = []
    for _ in range(reader.u32()):
        ndim = reader.u32()
        shapes.append(tuple(reader.u32() for _ in range(ndim)))
    return shapes


def read_params(reader, names, shapes):
    if len(shapes) != len(names):
        raise ContractViolation(f"{reader.path}: expected {len(names)} parameter arrays, found {len(shapes)}")
    params = {}
    for name, shape in zip(names, shapes):
        size = int(np.prod(shape)) if shape else 1
        params[name] = reader.array(size, np.float32).astype(np.float64).reshape(shape)
    return params


def read_shapes_and_params(reader, names):
    return read_params(reader, names, read_shapes(reader))
