"""Thin wrapper presenting the Cython kernels behind the backend interface."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import lbvh
from ..exceptions import TraversalStackOverflow
from ..mesh import Mesh
from . import _core

NAME = "compiled"

_MODE_TAGS = {
    lbvh.MODE_BOOLEAN: 0,
    lbvh.MODE_BARYCENTRIC: 1,
    lbvh.MODE_COUNT: 2,
}

# Below this leaf count, threaded construction is pure overhead.
_PARALLEL_BUILD_THRESHOLD = 2048


def build_tree(mesh: Mesh, sorted_codes, sorted_ids, workers: int = 1):
    """Atomic-gated bottom-up construction; returns (tree, reset_s, construct_s)."""
    n = mesh.num_triangles
    t0 = time.perf_counter()
    tree = lbvh._reset_tree(mesh, sorted_ids)
    t1 = time.perf_counter()
    if n == 1:
        tree.internal_child_left[0] = tree.num_internal
        return tree, t1 - t0, 0.0

    codes = np.ascontiguousarray(sorted_codes, dtype=np.uint64)
    ids = np.ascontiguousarray(sorted_ids, dtype=np.int32)

    def construct(lo: int, hi: int) -> None:
        _core.construct_range(
            codes,
            ids,
            tree.internal_child_left,
            tree.internal_child_right,
            tree.internal_range_left,
            tree.internal_range_right,
            tree.internal_visit,
            tree.internal_triangle_id,
            tree.internal_bounds,
            tree.leaf_bounds,
            n,
            lo,
            hi,
        )

    if workers <= 1 or n < _PARALLEL_BUILD_THRESHOLD:
        construct(0, n)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(construct, int(bounds[w]), int(bounds[w + 1]))
                for w in range(workers)
            ]
            for f in futures:
                f.result()
    t2 = time.perf_counter()
    return tree, t1 - t0, t2 - t1


def batch_query(
    mesh: Mesh,
    tree: lbvh.BvhTree,
    segments,
    seg_boxes: np.ndarray,
    mode: str,
    max_collisions: int,
    max_stack: int,
    lo: int,
    hi: int,
    out: dict[str, np.ndarray],
) -> None:
    status, bad_segment = _core.batch_query(
        mesh.vertices,
        mesh.triangles,
        segments.starts,
        segments.ends,
        seg_boxes,
        tree.internal_bounds,
        tree.internal_child_left,
        tree.internal_child_right,
        tree.leaf_triangle_id,
        tree.leaf_bounds,
        tree.root,
        tree.num_triangles,
        _MODE_TAGS[mode],
        max_collisions,
        max_stack,
        lo,
        hi,
        out["detected"],
        out["counts"],
        out["tri"],
        out["dist"],
        out["points"],
    )
    if status == 1:
        raise TraversalStackOverflow(
            f"traversal stack overflow (capacity {max_stack})",
            segment_index=bad_segment,
        )


def batch_baseline(
    mesh: Mesh,
    tri_boxes: np.ndarray,
    segments,
    seg_boxes: np.ndarray,
    mode: str,
    lo: int,
    hi: int,
    out: dict[str, np.ndarray],
) -> None:
    _core.batch_baseline(
        mesh.vertices,
        mesh.triangles,
        tri_boxes,
        segments.starts,
        segments.ends,
        seg_boxes,
        _MODE_TAGS[mode],
        lo,
        hi,
        out["detected"],
        out["counts"],
        out["tri"],
        out["dist"],
        out["points"],
    )
