"""Pure NumPy/Python kernels; the reference semantics for the compiled core."""

from __future__ import annotations

import time

import numpy as np

from .. import lbvh
from ..exceptions import TraversalStackOverflow
from ..geometry import hit_distance
from ..mesh import Mesh

NAME = "pure"


def build_tree(mesh: Mesh, sorted_codes, sorted_ids, workers: int = 1):
    """Sequential reference construction; returns (tree, reset_s, construct_s)."""
    n = mesh.num_triangles
    t0 = time.perf_counter()
    tree = lbvh._reset_tree(mesh, sorted_ids)
    t1 = time.perf_counter()
    if n == 1:
        tree.internal_child_left[0] = tree.num_internal
        return tree, t1 - t0, 0.0
    codes = np.ascontiguousarray(sorted_codes, dtype=np.uint64)
    ids = np.ascontiguousarray(sorted_ids, dtype=np.int32)
    for i in range(n):
        lbvh._climb_from_leaf(tree, codes, ids, i)
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
    """Run `lbvh.find_collisions` for segments [lo, hi) with a shared buffer."""
    buffer = lbvh.CollisionBuffer(max_collisions)
    starts = segments.starts
    ends = segments.ends
    for i in range(lo, hi):
        try:
            res = lbvh.find_collisions(
                mesh, starts[i], ends[i], seg_boxes[i], tree, buffer, mode, max_stack
            )
        except TraversalStackOverflow as exc:
            raise TraversalStackOverflow(str(exc), segment_index=i) from None
        _store(out, i, mode, res, starts[i])


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
    """All-pairs prescreen + exact test for segments [lo, hi)."""
    from ..geometry import intersect_segment_triangle

    verts = mesh.vertices
    tris = mesh.triangles
    n_tri = mesh.num_triangles
    starts = segments.starts
    ends = segments.ends
    for i in range(lo, hi):
        qbox = seg_boxes[i]
        start = starts[i]
        end = ends[i]
        detected = False
        n_hits = 0
        best = None
        best_t = 0.0
        for j in range(n_tri):
            if not lbvh._boxes_overlap(qbox, tri_boxes[j]):
                continue
            ia, ib, ic = tris[j]
            rec = intersect_segment_triangle(
                start, end, verts[ia], verts[ib], verts[ic]
            )
            if not rec.hit:
                continue
            detected = True
            n_hits += 1
            if mode == lbvh.MODE_BOOLEAN:
                break
            if best is None or rec.t < best_t or (
                rec.t == best_t and j < best.triangle_id
            ):
                best_t = rec.t
                best = lbvh.SegmentHit(j, rec.t, rec.u, rec.v, rec.point)
        if mode == lbvh.MODE_BOOLEAN:
            _store(out, i, mode, detected, start)
        elif mode == lbvh.MODE_COUNT:
            _store(out, i, mode, n_hits, start)
        else:
            _store(out, i, mode, best, start)


def _store(out: dict[str, np.ndarray], i: int, mode: str, res, start) -> None:
    if mode == lbvh.MODE_BOOLEAN:
        out["detected"][i] = 1 if res else 0
    elif mode == lbvh.MODE_COUNT:
        out["counts"][i] = res
    else:
        if res is None:
            return
        out["detected"][i] = 1
        out["tri"][i] = res.triangle_id
        out["dist"][i] = np.float32(hit_distance(start, res.point))
        out["points"][i] = np.asarray(res.point, dtype=np.float32)
