"""Scalar geometric primitives: AABBs and the exact segment-triangle test.

Inputs and outputs are single precision (float32 world coordinates); the
intersection arithmetic itself runs in double precision.  The compiled batch
kernels re-implement `intersect_segment_triangle` with the identical
operation order, so both produce bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# |det| below this is treated as parallel / degenerate -> no hit.
DET_EPSILON = 1e-9
# Barycentric boundary tolerance: edge/vertex grazing counts as a hit.
BARY_EPSILON = 1e-7


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box; min <= max on every axis."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float


@dataclass(frozen=True)
class HitRecord:
    """Outcome of one segment-triangle test.

    On a hit, ``t`` is the segment parameter in [0, 1], ``(u, v)`` the
    barycentric coordinates, and ``point`` the intersection point
    ``start + t * (end - start)``.  On a miss only ``hit`` is meaningful.
    """

    hit: bool
    t: float = 0.0
    u: float = 0.0
    v: float = 0.0
    point: tuple[float, float, float] = (0.0, 0.0, 0.0)


MISS = HitRecord(hit=False)


def segment_aabb(start, end) -> Aabb:
    """Bounding box of a segment: componentwise min/max of its endpoints."""
    return Aabb(
        min(start[0], end[0]), max(start[0], end[0]),
        min(start[1], end[1]), max(start[1], end[1]),
        min(start[2], end[2]), max(start[2], end[2]),
    )


def triangle_aabb(a, b, c) -> Aabb:
    """Bounding box of a triangle's three vertices."""
    return Aabb(
        min(a[0], b[0], c[0]), max(a[0], b[0], c[0]),
        min(a[1], b[1], c[1]), max(a[1], b[1], c[1]),
        min(a[2], b[2], c[2]), max(a[2], b[2], c[2]),
    )


def aabb_overlap(a: Aabb, b: Aabb) -> bool:
    """True iff the boxes intersect on all three axes.

    Touching boundaries (shared face/edge/corner) count as overlap, so the
    broad phase can never discard a true hit.
    """
    return (
        a.x_min <= b.x_max and a.x_max >= b.x_min
        and a.y_min <= b.y_max and a.y_max >= b.y_min
        and a.z_min <= b.z_max and a.z_max >= b.z_min
    )


def intersect_segment_triangle(start, end, a, b, c) -> HitRecord:
    """Moller-Trumbore segment vs. triangle test.

    Solves directly for the segment parameter t and barycentric (u, v).
    A hit requires t in [0, 1] and (u, v) inside the triangle up to
    ``BARY_EPSILON``.  Degenerate (zero-area) triangles and segments lying
    in the triangle's plane yield |det| < ``DET_EPSILON`` and miss.
    """
    ax, ay, az = float(a[0]), float(a[1]), float(a[2])
    sx, sy, sz = float(start[0]), float(start[1]), float(start[2])

    e1x = float(b[0]) - ax
    e1y = float(b[1]) - ay
    e1z = float(b[2]) - az
    e2x = float(c[0]) - ax
    e2y = float(c[1]) - ay
    e2z = float(c[2]) - az
    dx = float(end[0]) - sx
    dy = float(end[1]) - sy
    dz = float(end[2]) - sz

    # p = d x e2
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < DET_EPSILON:
        return MISS
    inv_det = 1.0 / det

    tx = sx - ax
    ty = sy - ay
    tz = sz - az
    u = (tx * px + ty * py + tz * pz) * inv_det
    if u < -BARY_EPSILON or u > 1.0 + BARY_EPSILON:
        return MISS

    # q = t x e1
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv_det
    if v < -BARY_EPSILON or u + v > 1.0 + BARY_EPSILON:
        return MISS

    t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
    if t < 0.0 or t > 1.0:
        return MISS

    return HitRecord(
        hit=True,
        t=t,
        u=u,
        v=v,
        point=(sx + t * dx, sy + t * dy, sz + t * dz),
    )


def hit_distance(start, point) -> float:
    """Euclidean distance from the segment start to the hit point."""
    dx = float(point[0]) - float(start[0])
    dy = float(point[1]) - float(start[1])
    dz = float(point[2]) - float(start[2])
    return math.sqrt(dx * dx + dy * dy + dz * dz)
