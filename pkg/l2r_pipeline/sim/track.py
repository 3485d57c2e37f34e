# -*- coding: utf-8 -*-
"""Closed-loop race tracks: generation, road-membership queries, CSV I/O."""
import csv
import dataclasses
import functools
import logging
import math

import numpy as np
from scipy.interpolate import splev, splprep
from scipy.spatial import cKDTree

from ..configs import TrackParams
from ..errors import ContractViolation, TrackGenerationError

logger = logging.getLogger(__name__)

QUERY_NEIGHBORS = 16
DENSE_SAMPLES_PER_CONTROL = 200
_CHUNK = 512


@dataclasses.dataclass(frozen=True)
class RoadQuery:
    """Per-point answer of :meth:`TrackSpec.query`; every array has the query shape."""
    distance: np.ndarray
    segment: np.ndarray
    t: np.ndarray
    half_width: np.ndarray
    arc_position: np.ndarray

    @property
    def off_road(self):
        return self.distance > self.half_width


@dataclasses.dataclass(frozen=True, eq=False)
class TrackSpec:
    """A closed centerline with per-point road half-width.

    Segment ``i`` joins point ``i`` to point ``(i + 1) % n``. Arc length
    is measured from point 0 in the direction of increasing index.
    """
    seed: int
    centerline: np.ndarray
    half_width: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.centerline, dtype=np.float64)
        hw = np.ascontiguousarray(self.half_width, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise ContractViolation("centerline must be an (n >= 3, 2) array")
        if hw.shape != (len(pts),) or not np.all(hw > 0):
            raise ContractViolation("half_width must be positive, one value per point")
        if not np.all(np.isfinite(pts)):
            raise ContractViolation("centerline must be finite")
        pts.flags.writeable = False
        hw.flags.writeable = False
        object.__setattr__(self, 'centerline', pts)
        object.__setattr__(self, 'half_width', hw)

    def __len__(self):
        return len(self.centerline)

    @functools.cached_property
    def segment_lengths(self):
        return np.linalg.norm(np.roll(self.centerline, -1, axis=0) - self.centerline, axis=1)

    @functools.cached_property
    def cumulative(self):
        """Arc length at each vertex, starting at 0."""
        return np.concatenate(([0.0], np.cumsum(self.segment_lengths)[:-1]))

    @functools.cached_property
    def total_length(self):
        return float(math.fsum(self.segment_lengths))

    @functools.cached_property
    def max_spacing(self):
        return float(np.max(self.segment_lengths))

    @functools.cached_property
    def _tree(self):
        return cKDTree(self.centerline)

    def heading_at(self, index):
        a = self.centerline[index % len(self)]
        b = self.centerline[(index + 1) % len(self)]
        return math.atan2(b[1] - a[1], b[0] - a[0])

    def pose_at(self, arc_position):
        """Centerline point, tangent heading and half-width at an arc-length position.

        :param arc_position: meters along the track, any value (wrapped)
        :return: (point, heading, half_width)
        """
        s = float(arc_position) % self.total_length
        i = int(np.searchsorted(self.cumulative, s, side='right') - 1)
        t = (s - self.cumulative[i]) / self.segment_lengths[i]
        j = (i + 1) % len(self)
        a = self.centerline[i]
        b = self.centerline[j]
        hw = self.half_width[i] * (1.0 - t) + self.half_width[j] * t
        return a + t * (b - a), self.heading_at(i), float(hw)

    def _nearest(self, points, segments):
        """Nearest of the candidate ``segments`` (n_points, n_candidates) per point."""
        n = len(self)
        a = self.centerline[segments]
        b = self.centerline[(segments + 1) % n]
        ab = b - a
        ap = points[:, None, :] - a
        t = np.clip(np.einsum('pci,pci->pc', ap, ab) / np.einsum('pci,pci->pc', ab, ab), 0.0, 1.0)
        diff = ap - t[..., None] * ab
        d = np.sqrt(np.einsum('pci,pci->pc', diff, diff))
        # smallest distance first, then lowest segment index
        best = np.min(d, axis=1, keepdims=True)
        masked = np.where(d == best, segments, np.iinfo(np.int64).max)
        pick = np.argmin(masked, axis=1)
        rows = np.arange(len(points))
        return segments[rows, pick], d[rows, pick], t[rows, pick]

    def _brute_force(self, points):
        segs, dists, ts = [], [], []
        all_segments = np.arange(len(self))
        for start in range(0, len(points), _CHUNK):
            chunk = points[start:start + _CHUNK]
            s, d, t = self._nearest(chunk, np.broadcast_to(all_segments, (len(chunk), len(self))))
            segs.append(s)
            dists.append(d)
            ts.append(t)
        if not segs:
            empty = np.zeros(0)
            return empty.astype(np.int64), empty, empty
        return np.concatenate(segs), np.concatenate(dists), np.concatenate(ts)

    def _result(self, shape, seg, dist, t):
        j = (seg + 1) % len(self)
        hw = self.half_width[seg] * (1.0 - t) + self.half_width[j] * t
        arc = np.mod(self.cumulative[seg] + t * self.segment_lengths[seg], self.total_length)
        arc = np.where(arc >= self.total_length, 0.0, arc)
        return RoadQuery(dist.reshape(shape), seg.reshape(shape), t.reshape(shape),
                         hw.reshape(shape), arc.reshape(shape))

    def query(self, points):
        """Nearest-segment road query for an array of 2-D points.

        Candidate segments are those adjacent to the nearest centerline
        vertices; points for which the candidate set cannot be proven to
        contain the nearest segment are answered by a full scan, so the
        result always equals :meth:`query_brute_force`.

        :param points: (..., 2) array in meters
        :rtype: RoadQuery
        """
        pts = np.asarray(points, dtype=np.float64)
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, 2)
        n = len(self)
        k = min(QUERY_NEIGHBORS, n)
        vdist, idx = self._tree.query(flat, k=k)
        vdist = np.asarray(vdist).reshape(len(flat), k)
        idx = np.asarray(idx, dtype=np.int64).reshape(len(flat), k)
        candidates = np.concatenate([idx, (idx - 1) % n], axis=1)
        seg, dist, t = self._nearest(flat, candidates)

        # every vertex within dist + spacing/2 must be a candidate
        unsure = vdist[:, -1] <= dist + 0.5 * self.max_spacing
        if k < n and np.any(unsure):
            s2, d2, t2 = self._brute_force(flat[unsure])
            seg[unsure], dist[unsure], t[unsure] = s2, d2, t2
        return self._result(shape, seg, dist, t)

    def query_brute_force(self, points):
        """Same answer as :meth:`query`, scanning every segment."""
        pts = np.asarray(points, dtype=np.float64)
        shape = pts.shape[:-1]
        seg, dist, t = self._brute_force(pts.reshape(-1, 2))
        return self._result(shape, seg, dist, t)

    def on_road(self, points):
        """Boolean road membership of ``(..., 2)`` points.

        Points farther from every vertex than the widest road reach are
        off-road without a segment search.
        """
        pts = np.asarray(points, dtype=np.float64)
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, 2)
        reach = float(np.max(self.half_width)) + 0.5 * self.max_spacing
        vdist, _ = self._tree.query(flat, k=1)
        near = np.asarray(vdist) <= reach
        result = np.zeros(len(flat), dtype=bool)
        if np.any(near):
            q = self.query(flat[near])
            result[near] = ~q.off_road
        return result.reshape(shape)


def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def find_self_intersection(points, chunk=256):
    """First pair of non-adjacent properly crossing segments of a closed polyline.

    :param points: (n, 2) vertices, the loop closes from the last to the first
    :return: ``(i, j)`` segment indices, or None for a simple loop
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    a = pts
    b = np.roll(pts, -1, axis=0)
    j = np.arange(n)
    for start in range(0, n, chunk):
        i = np.arange(start, min(start + chunk, n))[:, None]
        p1, p2 = a[i], b[i]
        q1, q2 = a[None, :], b[None, :]
        d1 = _orient(q1, q2, p1)
        d2 = _orient(q1, q2, p2)
        d3 = _orient(p1, p2, q1)
        d4 = _orient(p1, p2, q2)
        hit = (d1 * d2 < 0) & (d3 * d4 < 0)
        gap = np.abs(i - j[None, :])
        hit &= (gap > 1) & (gap < n - 1)
        if np.any(hit):
            ii, jj = np.argwhere(hit)[0]
            return int(i[ii, 0]), int(jj)
    return None


def max_curvature(points):
    """Largest discrete curvature (1/m) of a closed polyline."""
    pts = np.asarray(points, dtype=np.float64)
    d = np.roll(pts, -1, axis=0) - pts
    heading = np.arctan2(d[:, 1], d[:, 0])
    turn = np.abs(np.angle(np.exp(1j * (np.roll(heading, -1) - heading))))
    lengths = np.linalg.norm(d, axis=1)
    return float(np.max(turn / (0.5 * (lengths + np.roll(lengths, -1)))))


def road_overlaps(points, half_width, spacing):
    """True when two far-apart stretches of the loop come within a road width of each other."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    reach = 2.0 * float(np.max(half_width)) + 2.0
    pairs = cKDTree(pts).query_pairs(reach, output_type='ndarray')
    if len(pairs) == 0:
        return False
    gap = np.abs(pairs[:, 0] - pairs[:, 1])
    gap = np.minimum(gap, n - gap) * spacing
    return bool(np.any(gap > 3.0 * reach))


def _candidate(rng, params):
    n = params.n_control_points
    step = 2.0 * math.pi / n
    angles = (np.arange(n) + rng.uniform(-params.angle_jitter, params.angle_jitter, n)) * step
    radii = rng.uniform(params.radius_min, params.radius_max, n)
    widths = rng.uniform(params.half_width_min, params.half_width_max, n)

    # periodic splprep ignores the last sample, which must repeat the first
    x = np.append(radii * np.cos(angles), radii[0] * math.cos(angles[0]))
    y = np.append(radii * np.sin(angles), radii[0] * math.sin(angles[0]))
    tck, u_ctrl = splprep([x, y], s=0, k=3, per=1)

    u = np.linspace(0.0, 1.0, n * DENSE_SAMPLES_PER_CONTROL + 1)
    dense = np.column_stack(splev(u, tck))
    dense[-1] = dense[0]
    s = np.concatenate(([0.0], np.cumsum(np.linalg.norm(np.diff(dense, axis=0), axis=1))))
    length = s[-1]

    count = int(math.ceil(length / params.spacing))
    arc = np.arange(count) * (length / count)
    points = np.column_stack([np.interp(arc, s, dense[:, 0]), np.interp(arc, s, dense[:, 1])])
    ctrl_arc = np.interp(u_ctrl[:-1], u, s)
    half_width = np.interp(arc, ctrl_arc, widths, period=length)
    return points, half_width, length / count


def generate_track(seed, params=None):
    """Generate a simple closed track, deterministically from ``seed``.

    Candidates are drawn until one passes the self-intersection,
    turning-radius and road-overlap checks.

    :param seed: track seed
    :type seed: int
    :param params: generation parameters, defaults to :class:`TrackParams`
    :type params: TrackParams
    :rtype: TrackSpec
    :raises TrackGenerationError: when ``params.max_attempts`` candidates were rejected
    """
    params = params or TrackParams()
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, 0x7472])
    reason = ''
    for attempt in range(1, params.max_attempts + 1):
        points, half_width, spacing = _candidate(rng, params)
        crossing = find_self_intersection(points)
        if crossing is not None:
            reason = f"segments {crossing[0]} and {crossing[1]} cross"
        elif max_curvature(points) > 1.0 / params.min_turn_radius:
            reason = "turn tighter than min_turn_radius"
        elif road_overlaps(points, half_width, spacing):
            reason = "road overlaps itself"
        else:
            logger.debug("track seed=%s accepted after %d attempt(s)", seed, attempt)
            return TrackSpec(seed=int(seed), centerline=points, half_width=half_width)
        logger.debug("track seed=%s attempt %d rejected: %s", seed, attempt, reason)
    raise TrackGenerationError(seed, params.max_attempts, reason)


def make_stadium_track(straight_length=400.0, radius=40.0, half_width=6.0, spacing=0.5, seed=-1):
    """Two parallel straights joined by semicircles, counter-clockwise.

    The first straight starts at the origin heading along +x.
    """
    n_straight = int(math.ceil(straight_length / spacing))
    n_arc = int(math.ceil(math.pi * radius / spacing))
    xs = np.arange(n_straight) * (straight_length / n_straight)
    theta = np.arange(n_arc) * (math.pi / n_arc)
    points = np.vstack([
        np.column_stack([xs, np.zeros_like(xs)]),
        np.column_stack([straight_length + radius * np.sin(theta), radius - radius * np.cos(theta)]),
        np.column_stack([straight_length - xs, np.full_like(xs, 2.0 * radius)]),
        np.column_stack([-radius * np.sin(theta), radius + radius * np.cos(theta)]),
    ])
    return TrackSpec(seed=seed, centerline=points, half_width=np.full(len(points), float(half_width)))


def save_track_csv(track, path):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['x', 'y', 'half_width'])
        for (x, y), hw in zip(track.centerline, track.half_width):
            writer.writerow([f"{x:.9g}", f"{y:.9g}", f"{hw:.9g}"])


def load_track_csv(path, seed=-1):
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ['x', 'y', 'half_width']:
            raise ContractViolation(f"{path}: expected header x,y,half_width, got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=np.float64)
    return TrackSpec(seed=seed, centerline=data[:, :2], half_width=data[:, 2])
