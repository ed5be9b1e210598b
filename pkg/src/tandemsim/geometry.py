"""Planar geometry kernels: angles, segment distances, ray intersections.

All functions are pure and operate on plain floats or numpy arrays.
Segments are rows of (x0, y0, x1, y1).
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def heading_to(from_xy, to_xy) -> float:
    return math.atan2(to_xy[1] - from_xy[1], to_xy[0] - from_xy[0])


def forward_vec(heading: float) -> tuple[float, float]:
    return (math.cos(heading), math.sin(heading))


def dist2d(a, b) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def point_segment_distances(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Distance from each point to each segment, shape (N, M)."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    s = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    a = s[:, :2]
    e = s[:, 2:] - a
    ee = np.maximum(np.einsum("md,md->m", e, e), 1e-300)
    # t: projection parameter of each point onto each segment, clamped to [0,1]
    d = p[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("nmd,md->nm", d, e) / ee, 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * e[None, :, :]
    return np.linalg.norm(p[:, None, :] - closest, axis=-1)


def min_segment_distance(point, segments: np.ndarray) -> float:
    if len(segments) == 0:
        return math.inf
    return float(point_segment_distances(np.asarray([point]), segments)[0].min())


def rays_hit_segments(
    origin, directions: np.ndarray, segments: np.ndarray, max_range: float
) -> np.ndarray:
    """First-hit distance for each unit-direction ray, saturated at max_range."""
    dirs = np.asarray(directions, dtype=np.float64).reshape(-1, 2)
    if len(segments) == 0:
        return np.full(len(dirs), max_range)
    s = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    o = np.asarray(origin, dtype=np.float64)
    a = s[:, :2]
    e = s[:, 2:] - a
    ao = a - o
    denom = dirs[:, None, 0] * e[None, :, 1] - dirs[:, None, 1] * e[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ao[None, :, 0] * e[None, :, 1] - ao[None, :, 1] * e[None, :, 0]) / denom
        u = (ao[None, :, 0] * dirs[:, None, 1] - ao[None, :, 1] * dirs[:, None, 0]) / denom
    valid = (np.abs(denom) > 1e-12) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    return np.minimum(t.min(axis=1), max_range)


def ray_hit_segments(origin, direction, segments: np.ndarray, max_range: float) -> float:
    return float(rays_hit_segments(origin, np.asarray([direction]), segments, max_range)[0])


def rays_hit_discs(
    origin, directions: np.ndarray, centers: np.ndarray, radii: np.ndarray, max_range: float
) -> np.ndarray:
    """First-hit distance of each ray against a set of discs, inf-free, saturated."""
    dirs = np.asarray(directions, dtype=np.float64).reshape(-1, 2)
    if len(centers) == 0:
        return np.full(len(dirs), max_range)
    c = np.asarray(centers, dtype=np.float64).reshape(-1, 2) - np.asarray(origin, dtype=np.float64)
    m = np.einsum("kd,cd->kc", dirs, c)
    q = np.einsum("cd,cd->c", c, c)[None, :] - np.asarray(radii, dtype=np.float64)[None, :] ** 2
    disc = m * m - q
    with np.errstate(invalid="ignore"):
        root = np.sqrt(np.where(disc >= 0.0, disc, 0.0))
    t = m - root
    hit = (disc >= 0.0) & (t >= 0.0)
    t = np.where(hit, t, np.inf)
    return np.minimum(t.min(axis=1), max_range)


def segments_block_los(p, q, segments: np.ndarray) -> bool:
    """True when the open segment p-q crosses any wall segment."""
    d = (q[0] - p[0], q[1] - p[1])
    length = math.hypot(*d)
    if length < 1e-12:
        return False
    direction = (d[0] / length, d[1] / length)
    hit = ray_hit_segments(p, direction, segments, math.inf)
    return hit < length - 1e-9


def disc_overlaps_segments(center, radius: float, segments: np.ndarray) -> bool:
    """Strict overlap (tangency excluded)."""
    return min_segment_distance(center, segments) < radius
