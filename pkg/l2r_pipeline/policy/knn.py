# -*- coding: utf-8 -*-
"""Exact k-nearest-neighbor search over small 3-D buffers.

Distances are compared as squared Euclidean distances computed component
by component in the same order everywhere, so the vectorised search and
the scalar scan agree bit for bit. Ties go to the lower entry index.
"""
import numpy as np


def squared_distances(points, query):
    d = np.asarray(points, dtype=np.float64) - np.asarray(query, dtype=np.float64)
    return d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]


def nearest_indices(points, query, k):
    """Indices of the ``k`` nearest points, nearest first.

    Fewer than ``k`` points returns all of them.
    """
    d2 = squared_distances(points, query)
    return np.argsort(d2, kind='stable')[:k]


def brute_force_neighbors(points, query, k):
    """Reference scan in plain Python, same ordering rule as :func:`nearest_indices`."""
    q0, q1, q2 = (float(v) for v in query)
    scored = []
    for i, (p0, p1, p2) in enumerate(np.asarray(points, dtype=np.float64).tolist()):
        d0, d1, d2 = p0 - q0, p1 - q1, p2 - q2
        scored.append((d0 * d0 + d1 * d1 + d2 * d2, i))
    scored.sort()
    return [i for _, i in scored[:k]]


def majority_vote(labels):
    """Most frequent label; ties go to the tied label that appears first.

    :param labels: labels ordered nearest first
    """
    counts = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    best = max(counts.values())
    for label in labels:
        if counts[label] == best:
            return label
    raise ValueError("majority_vote needs at least one label")
