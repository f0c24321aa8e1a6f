"""Morton (Z-order) keys for triangle centroids.

Centroids are quantized onto a 2^21-per-axis grid and bit-interleaved into a
63-bit code: x occupies bit 0 of each 3-bit group, y bit 1, z bit 2
(...zyxzyx).  Sorting the codes clusters spatially nearby triangles, which is
what makes the radix-tree construction produce a usable hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_BITS = 21
GRID_MAX = (1 << GRID_BITS) - 1  # 2097151

_MASK_0 = 0x1FFFFF
_MASK_1 = 0x1F00000000FFFF
_MASK_2 = 0x1F0000FF0000FF
_MASK_3 = 0x100F00F00F00F00F
_MASK_4 = 0x10C30C30C30C30C3
_MASK_5 = 0x1249249249249249


@dataclass(frozen=True)
class SupportInterval:
    """Componentwise bounds of a point set, as float64 triples."""

    min: tuple[float, float, float]
    max: tuple[float, float, float]


def triangle_centroids(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Centroid of each triangle's vertices, float64, shape (N_t, 3)."""
    v = vertices.astype(np.float64, copy=False)
    return (v[triangles[:, 0]] + v[triangles[:, 1]] + v[triangles[:, 2]]) / 3.0


def centroid_support(points: np.ndarray) -> SupportInterval:
    """Componentwise min/max over a non-empty (N, 3) point array."""
    p = points.astype(np.float64, copy=False)
    lo = p.min(axis=0)
    hi = p.max(axis=0)
    return SupportInterval(min=tuple(lo), max=tuple(hi))


def quantize_points(points: np.ndarray, support: SupportInterval) -> np.ndarray:
    """Map points inside `support` onto the integer grid [0, 2^21 - 1]^3.

    Per axis: floor((p - min) / (max - min) * (2^21 - 1)), clamped.  An axis
    with zero extent maps everything to 0 (flat meshes are legal).
    """
    p = points.astype(np.float64, copy=False)
    lo = np.asarray(support.min, dtype=np.float64)
    hi = np.asarray(support.max, dtype=np.float64)
    extent = hi - lo
    q = np.zeros(p.shape, dtype=np.uint32)
    for axis in range(3):
        if extent[axis] > 0.0:
            scaled = np.floor((p[:, axis] - lo[axis]) / extent[axis] * float(GRID_MAX))
            q[:, axis] = np.clip(scaled, 0.0, float(GRID_MAX)).astype(np.uint32)
    return q


def quantize_point(point, support: SupportInterval) -> tuple[int, int, int]:
    """Scalar version of `quantize_points`."""
    q = quantize_points(np.asarray([point], dtype=np.float64), support)
    return int(q[0, 0]), int(q[0, 1]), int(q[0, 2])


def split_bits(v: int) -> int:
    """Scatter the low 21 bits of v so bit i lands at bit 3*i (magic masks)."""
    v &= _MASK_0
    v = (v | v << 32) & _MASK_1
    v = (v | v << 16) & _MASK_2
    v = (v | v << 8) & _MASK_3
    v = (v | v << 4) & _MASK_4
    v = (v | v << 2) & _MASK_5
    return v


def split_bits_loop(v: int) -> int:
    """Loop-based bit scatter; independent oracle for `split_bits`."""
    out = 0
    for i in range(GRID_BITS):
        out |= ((v >> i) & 1) << (3 * i)
    return out


def compact_bits(v: int) -> int:
    """Inverse of `split_bits`: gather every third bit back together."""
    v &= _MASK_5
    v = (v ^ (v >> 2)) & _MASK_4
    v = (v ^ (v >> 4)) & _MASK_3
    v = (v ^ (v >> 8)) & _MASK_2
    v = (v ^ (v >> 16)) & _MASK_1
    v = (v ^ (v >> 32)) & _MASK_0
    return v


def morton_encode(qx: int, qy: int, qz: int) -> int:
    """Interleave three 21-bit coordinates into one 63-bit code."""
    return split_bits(qx) | split_bits(qy) << 1 | split_bits(qz) << 2


def morton_encode_loop(qx: int, qy: int, qz: int) -> int:
    """Loop-based encoder; must agree with `morton_encode` everywhere."""
    return split_bits_loop(qx) | split_bits_loop(qy) << 1 | split_bits_loop(qz) << 2


def morton_decode(code: int) -> tuple[int, int, int]:
    """Recover (qx, qy, qz) from a 63-bit interleaved code."""
    return compact_bits(code), compact_bits(code >> 1), compact_bits(code >> 2)


def morton_encode_points(q: np.ndarray) -> np.ndarray:
    """Vectorized `morton_encode` over an (N, 3) uint array -> (N,) uint64."""
    codes = np.zeros(q.shape[0], dtype=np.uint64)
    for axis in range(3):
        v = q[:, axis].astype(np.uint64)
        v = (v | v << 32) & _MASK_1
        v = (v | v << 16) & _MASK_2
        v = (v | v << 8) & _MASK_3
        v = (v | v << 4) & _MASK_4
        v = (v | v << 2) & _MASK_5
        codes |= v << axis
    return codes


def sort_by_morton(
    codes: np.ndarray, indices: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Sort keys ascending by (code, original index).

    The index tiebreak makes the order total even with duplicate codes,
    which the radix-tree construction relies on.  Returns the permuted
    (codes, indices) pair.
    """
    codes = np.asarray(codes, dtype=np.uint64)
    if indices is None:
        indices = np.arange(codes.shape[0], dtype=np.int32)
    else:
        indices = np.asarray(indices)
    order = np.lexsort((indices, codes))
    return codes[order], indices[order]
