"""Shared fixtures and comparison helpers for the test suite."""

from __future__ import annotations

import numpy as np

from raysurf import Mesh, ResultSet, SegmentBatch

UNIT_TRIANGLE = (
    np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=np.float32),
    np.array([[0, 1, 2]], dtype=np.int32),
)

# 12-triangle closed axis-aligned cube spanning [0, 1]^3.
CUBE_VERTICES = np.array(
    [
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ],
    dtype=np.float32,
)
CUBE_TRIANGLES = np.array(
    [
        [0, 2, 1], [0, 3, 2],  # z = 0
        [4, 5, 6], [4, 6, 7],  # z = 1
        [0, 1, 5], [0, 5, 4],  # y = 0
        [3, 6, 2], [3, 7, 6],  # y = 1
        [0, 4, 7], [0, 7, 3],  # x = 0
        [1, 2, 6], [1, 6, 5],  # x = 1
    ],
    dtype=np.int32,
)


def cube_mesh() -> Mesh:
    return Mesh.from_arrays(CUBE_VERTICES, CUBE_TRIANGLES)


def unit_triangle_mesh() -> Mesh:
    return Mesh.from_arrays(*UNIT_TRIANGLE)


def random_mesh(rng: np.random.Generator, num_triangles: int) -> Mesh:
    """Triangle soup with random vertices; may contain tiny/odd triangles."""
    num_vertices = max(3, num_triangles + 2)
    vertices = rng.uniform(-10.0, 10.0, size=(num_vertices, 3)).astype(np.float32)
    tris = np.empty((num_triangles, 3), dtype=np.int32)
    for j in range(num_triangles):
        tris[j] = rng.choice(num_vertices, size=3, replace=False)
    return Mesh.from_arrays(vertices, tris)


def random_segments(
    rng: np.random.Generator, count: int, span: float = 12.0
) -> SegmentBatch:
    starts = rng.uniform(-span, span, size=(count, 3)).astype(np.float32)
    ends = rng.uniform(-span, span, size=(count, 3)).astype(np.float32)
    return SegmentBatch.from_arrays(starts, ends)


_FIELDS = ("crossing", "counts", "ray_index", "distance", "triangle_id", "point")
_FLOAT_FIELDS = ("distance", "point")


def assert_results_equal(
    a: ResultSet, b: ResultSet, float_tol: float = 0.0, context: str = ""
) -> None:
    """Exact equality of two ResultSets; float_tol > 0 relaxes only the
    floating-point fields (for comparisons across formulations)."""
    assert a.mode == b.mode, context
    assert a.num_rays == b.num_rays, context
    for field in _FIELDS:
        x, y = getattr(a, field), getattr(b, field)
        assert (x is None) == (y is None), f"{context}: {field} presence differs"
        if x is None:
            continue
        if float_tol > 0.0 and field in _FLOAT_FIELDS:
            assert np.allclose(x, y, atol=float_tol, rtol=0.0), (
                f"{context}: {field} beyond tolerance {float_tol}"
            )
        else:
            assert np.array_equal(x, y), f"{context}: {field} differs"


def assert_mode_consistency(boolean: ResultSet, count: ResultSet, bary: ResultSet):
    """The cross-mode ResultSet invariant for one (mesh, segments) input."""
    flags = boolean.crossing.astype(bool)
    assert np.array_equal(flags, count.counts >= 1)
    assert np.array_equal(np.nonzero(flags)[0].astype(np.int32), bary.ray_index)
