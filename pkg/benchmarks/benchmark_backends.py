#!/usr/bin/env python3
"""Benchmark: compiled kernels vs. pure fallback, LBVH vs. all-pairs baseline,
worker scaling, and the sorted-segment variant.

Usage:
    python3 benchmarks/benchmark_backends.py [--triangles N] [--segments N]
        [--pure-segments N] [--seed N]

The pure backend runs on a reduced segment count (it is a correctness
fallback, not a fast path); the reported rate is still per-segment.
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from raysurf import (
    EngineConfig,
    SegmentBatch,
    available_backends,
    run_baseline_allpairs,
    run_batch,
    sort_segments_by_morton,
)
from raysurf.oracle import generate_scene


def best_of(n, fn):
    best = None
    out = None
    for _ in range(n):
        t0 = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best, out


def subset(segments: SegmentBatch, n: int) -> SegmentBatch:
    return SegmentBatch(starts=segments.starts[:n].copy(), ends=segments.ends[:n].copy())


def rate(n, seconds):
    return f"{n / seconds / 1e6:8.2f} Mseg/s" if seconds > 0 else "   n/a"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--triangles", type=int, default=29_284)
    ap.add_argument("--segments", type=int, default=1_000_000)
    ap.add_argument("--pure-segments", type=int, default=2_000)
    ap.add_argument("--seed", type=int, default=2022)
    args = ap.parse_args()

    cores = os.cpu_count() or 1
    print(f"host: {cores} cores; backends available: {available_backends()}")
    print(f"scene: {args.triangles} triangles, {args.segments} segments (seed {args.seed})")
    scene = generate_scene(args.triangles, args.segments, 0.5, args.seed)
    mesh, segments = scene.mesh, scene.segments

    rows = []

    # --- backends head-to-head (same inputs, reduced count for pure) ---
    small = subset(segments, args.pure_segments)
    for backend in available_backends():
        t, rs = best_of(
            2,
            lambda b=backend: run_batch(
                mesh, small, EngineConfig(backend=b, workers=1)
            ),
        )
        rows.append((f"run_batch[{backend}] workers=1 ({small.count} segs)", t, small.count))
        del rs

    # --- compiled engine at full scale ---
    if "compiled" in available_backends():
        t1, rs1 = best_of(
            2, lambda: run_batch(mesh, segments, EngineConfig(workers=1))
        )
        rows.append((f"run_batch[compiled] workers=1 ({segments.count} segs)", t1, segments.count))
        tw, rsw = best_of(
            2, lambda: run_batch(mesh, segments, EngineConfig(workers=cores))
        )
        rows.append((f"run_batch[compiled] workers={cores}", tw, segments.count))
        assert np.array_equal(rs1.crossing, rsw.crossing)

        tb, rsb = best_of(
            1, lambda: run_baseline_allpairs(mesh, segments, EngineConfig(workers=cores))
        )
        rows.append((f"baseline all-pairs workers={cores}", tb, segments.count))
        assert np.array_equal(rsb.crossing, rsw.crossing)
        print(f"\nLBVH vs all-pairs speedup: {tb / tw:.1f}x")

        coherent, _ = sort_segments_by_morton(segments)
        tc, _ = best_of(2, lambda: run_batch(mesh, coherent, EngineConfig(workers=cores)))
        rows.append(("run_batch[compiled] pre-sorted (coherent) rays", tc, segments.count))

    print(f"\n{'case':<55} {'best time':>10}   rate")
    for name, t, n in rows:
        print(f"{name:<55} {t:9.3f}s   {rate(n, t)}")


if __name__ == "__main__":
    main()
