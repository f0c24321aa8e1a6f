"""Batch orchestration: ingest, index, query in parallel, assemble results.

`run_batch` is the accelerated path (morton sort + radix tree + per-segment
traversal); `run_baseline_allpairs` is the quadratic prescreen-everything
strategy kept as a benchmark baseline and correctness cross-check.  Both
produce identical `ResultSet`s in all three output modes.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import morton
from ._backend import get_backend
from .exceptions import ValidationError
from .lbvh import (
    MAX_COLLISIONS,
    MAX_STACK,
    MODE_BARYCENTRIC,
    MODE_BOOLEAN,
    MODE_COUNT,
    MODES,
)
from .mesh import Mesh

# Below this many segments the chunking overhead is not worth it.
_MIN_SEGMENTS_PER_WORKER = 256


@dataclass
class SegmentBatch:
    """Paired start/end point arrays, (N_r, 3) float32 each."""

    starts: np.ndarray
    ends: np.ndarray

    @classmethod
    def from_arrays(cls, starts, ends) -> "SegmentBatch":
        s = np.ascontiguousarray(starts, dtype=np.float32).reshape(-1, 3)
        e = np.ascontiguousarray(ends, dtype=np.float32).reshape(-1, 3)
        batch = cls(starts=s, ends=e)
        batch.validate()
        return batch

    @property
    def count(self) -> int:
        return self.starts.shape[0]

    def validate(self) -> None:
        if self.starts.shape != self.ends.shape:
            raise ValidationError(
                f"segment start/end arrays differ in shape: "
                f"{self.starts.shape} vs {self.ends.shape}"
            )
        if not (np.isfinite(self.starts).all() and np.isfinite(self.ends).all()):
            raise ValidationError("segment endpoints contain non-finite values")


@dataclass(eq=False)
class ResultSet:
    """Per-mode batch output.

    boolean: ``crossing`` holds one 0/1 flag per segment.
    count: ``counts`` holds the number of exact hits per segment.
    barycentric: parallel lists with one entry per intersecting segment,
    ray indices ascending — index, distance |point - start|, triangle id,
    and the intersection point.
    """

    mode: str
    num_rays: int
    crossing: np.ndarray | None = None
    counts: np.ndarray | None = None
    ray_index: np.ndarray | None = None
    distance: np.ndarray | None = None
    triangle_id: np.ndarray | None = None
    point: np.ndarray | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def num_crossing(self) -> int:
        if self.mode == MODE_BOOLEAN:
            return int(np.count_nonzero(self.crossing))
        if self.mode == MODE_COUNT:
            return int(np.count_nonzero(self.counts))
        return int(self.ray_index.shape[0])


@dataclass
class EngineConfig:
    mode: str = MODE_BOOLEAN
    sort_rays: bool = False
    workers: int | None = None  # None -> one per CPU
    max_collisions: int = MAX_COLLISIONS
    max_stack: int = MAX_STACK
    backend: str | None = None  # None -> compiled if available

    def resolved_workers(self) -> int:
        if self.workers is None:
            return max(1, os.cpu_count() or 1)
        if self.workers < 1:
            raise ValidationError("workerCount must be >= 1")
        return self.workers

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        self.resolved_workers()


def compute_segment_boxes(segments: SegmentBatch) -> np.ndarray:
    """Per-segment AABBs, (N_r, 6) float32, same layout as triangle boxes."""
    lo = np.minimum(segments.starts, segments.ends)
    hi = np.maximum(segments.starts, segments.ends)
    boxes = np.empty((segments.count, 6), dtype=np.float32)
    boxes[:, 0::2] = lo
    boxes[:, 1::2] = hi
    return boxes


def sort_segments_by_morton(
    segments: SegmentBatch,
) -> tuple[SegmentBatch, np.ndarray]:
    """Reorder segments along the Z-curve of their midpoints.

    Returns the permuted batch and the permutation (``perm[k]`` is the
    original index of sorted slot k) so results can be reported in the
    caller's order.  Purely a locality optimization; results are unaffected.
    """
    n = segments.count
    if n == 0:
        return segments, np.empty(0, dtype=np.int64)
    mid = (segments.starts.astype(np.float64) + segments.ends.astype(np.float64)) / 2.0
    support = morton.centroid_support(mid)
    codes = morton.morton_encode_points(morton.quantize_points(mid, support))
    perm = np.lexsort((np.arange(n), codes))
    return (
        SegmentBatch(
            starts=np.ascontiguousarray(segments.starts[perm]),
            ends=np.ascontiguousarray(segments.ends[perm]),
        ),
        perm,
    )


def _empty_outputs(n: int) -> dict[str, np.ndarray]:
    return {
        "detected": np.zeros(n, dtype=np.int32),
        "counts": np.zeros(n, dtype=np.int32),
        "tri": np.full(n, -1, dtype=np.int32),
        "dist": np.zeros(n, dtype=np.float32),
        "points": np.zeros((n, 3), dtype=np.float32),
    }


def _run_chunked(kernel, n: int, workers: int) -> None:
    """Invoke kernel(lo, hi) over a partition of [0, n), possibly in threads.

    Chunks are finer than the worker count so an unlucky expensive chunk
    does not gate the whole batch.
    """
    if n == 0:
        return
    workers = min(workers, max(1, n // _MIN_SEGMENTS_PER_WORKER))
    if workers <= 1:
        kernel(0, n)
        return
    chunks = min(workers * 4, max(1, n // _MIN_SEGMENTS_PER_WORKER))
    bounds = np.linspace(0, n, chunks + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(kernel, int(bounds[c]), int(bounds[c + 1]))
            for c in range(chunks)
        ]
        for f in futures:
            f.result()


def _assemble(
    mode: str,
    out: dict[str, np.ndarray],
    perm: np.ndarray | None,
    timings: dict[str, float],
) -> ResultSet:
    """Un-permute per-segment outputs and compact barycentric entries."""
    n = out["detected"].shape[0] if mode != MODE_COUNT else out["counts"].shape[0]
    if perm is not None:
        for key in ("detected", "counts", "tri", "dist"):
            orig = np.empty_like(out[key])
            orig[perm] = out[key]
            out[key] = orig
        pts = np.empty_like(out["points"])
        pts[perm] = out["points"]
        out["points"] = pts

    if mode == MODE_BOOLEAN:
        return ResultSet(
            mode=mode, num_rays=n, crossing=out["detected"], timings=timings
        )
    if mode == MODE_COUNT:
        return ResultSet(mode=mode, num_rays=n, counts=out["counts"], timings=timings)
    idx = np.nonzero(out["detected"])[0].astype(np.int32)
    return ResultSet(
        mode=mode,
        num_rays=n,
        ray_index=idx,
        distance=out["dist"][idx],
        triangle_id=out["tri"][idx],
        point=out["points"][idx],
        timings=timings,
    )


def _empty_result(mode: str, n: int) -> ResultSet:
    return _assemble(mode, _empty_outputs(n), None, {})


def run_batch(
    mesh: Mesh, segments: SegmentBatch, config: EngineConfig | None = None
) -> ResultSet:
    """Index the mesh and test every segment against it.

    Results are identical to applying `lbvh.find_collisions` to each segment
    independently; segments are distributed across workers, each with its own
    collision buffer and traversal stack.
    """
    config = config or EngineConfig()
    config.validate()
    if segments.count == 0 or mesh.num_triangles == 0:
        return _empty_result(config.mode, segments.count)

    backend = get_backend(config.backend)
    workers = config.resolved_workers()
    timings: dict[str, float] = {}

    perm = None
    if config.sort_rays:
        t0 = time.perf_counter()
        segments, perm = sort_segments_by_morton(segments)
        timings["ray sort"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    seg_boxes = compute_segment_boxes(segments)
    timings["ray boxes"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    centroids = morton.triangle_centroids(mesh.vertices, mesh.triangles)
    support = morton.centroid_support(centroids)
    quantized = morton.quantize_points(centroids, support)
    timings["quantization"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    codes = morton.morton_encode_points(quantized)
    timings["encoding"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sorted_codes, sorted_ids = morton.sort_by_morton(codes)
    timings["sorting"] = time.perf_counter() - t0

    tree, reset_s, construct_s = backend.build_tree(
        mesh, sorted_codes, sorted_ids, workers=workers
    )
    timings["reset"] = reset_s
    timings["construct"] = construct_s

    out = _empty_outputs(segments.count)
    t0 = time.perf_counter()

    def kernel(lo: int, hi: int) -> None:
        backend.batch_query(
            mesh,
            tree,
            segments,
            seg_boxes,
            config.mode,
            config.max_collisions,
            config.max_stack,
            lo,
            hi,
            out,
        )

    _run_chunked(kernel, segments.count, workers)
    timings["query"] = time.perf_counter() - t0

    return _assemble(config.mode, out, perm, timings)


def run_baseline_allpairs(
    mesh: Mesh, segments: SegmentBatch, config: EngineConfig | None = None
) -> ResultSet:
    """Test every segment against every triangle (AABB prescreen + exact).

    O(N_t * N_r); kept for benchmarking and as an independent execution path
    whose results must match `run_batch` exactly.
    """
    config = config or EngineConfig()
    config.validate()
    if segments.count == 0 or mesh.num_triangles == 0:
        return _empty_result(config.mode, segments.count)

    backend = get_backend(config.backend)
    workers = config.resolved_workers()
    timings: dict[str, float] = {}

    perm = None
    if config.sort_rays:
        t0 = time.perf_counter()
        segments, perm = sort_segments_by_morton(segments)
        timings["ray sort"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    seg_boxes = compute_segment_boxes(segments)
    timings["ray boxes"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tri_boxes = mesh.triangle_boxes()
    timings["triangle boxes"] = time.perf_counter() - t0

    out = _empty_outputs(segments.count)
    t0 = time.perf_counter()

    def kernel(lo: int, hi: int) -> None:
        backend.batch_baseline(
            mesh, tri_boxes, segments, seg_boxes, config.mode, lo, hi, out
        )

    _run_chunked(kernel, segments.count, workers)
    timings["query"] = time.perf_counter() - t0

    return _assemble(config.mode, out, perm, timings)
