"""Brute-force reference results and synthetic scene generation.

The reference intersector deliberately uses a different formulation from the
production path: it intersects each segment with the triangle's plane and
then classifies the point with three cross-product sign tests.  Agreement
between the two is therefore evidence of correctness, not a tautology.  No
prescreening of any kind is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import ResultSet, SegmentBatch
from .exceptions import ValidationError
from .geometry import DET_EPSILON
from .lbvh import MODE_BARYCENTRIC, MODE_BOOLEAN, MODE_COUNT, MODES
from .mesh import Mesh

# Cap on elements of the (segments x triangles) working block.
_BLOCK_PAIRS = 2_000_000

# Barycentric margin the generator keeps between a constructed crossing
# point and the triangle's edges; ground truth must not hinge on epsilons.
_GRAZE_MARGIN = 0.05


def oracle_hit_triangle(start, end, a, b, c) -> tuple[bool, float]:
    """Scalar plane-intersection + sign-test classification of one pair.

    Returns (hit, t).  Used to cross-check the production intersection
    routine on random pairs.
    """
    a = np.asarray(a, dtype=np.float64)
    d = np.asarray(end, dtype=np.float64) - np.asarray(start, dtype=np.float64)
    s = np.asarray(start, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    n = np.cross(b - a, c - a)
    denom = float(np.dot(n, d))
    if abs(denom) < DET_EPSILON:
        return False, 0.0
    t = float(np.dot(n, a - s)) / denom
    if t < 0.0 or t > 1.0:
        return False, 0.0
    p = s + t * d
    if (
        np.dot(n, np.cross(b - a, p - a)) >= 0.0
        and np.dot(n, np.cross(c - b, p - b)) >= 0.0
        and np.dot(n, np.cross(a - c, p - c)) >= 0.0
    ):
        return True, t
    return False, 0.0


def _hits_block(
    s: np.ndarray, d: np.ndarray, va: np.ndarray, vb: np.ndarray, vc: np.ndarray,
    normals: np.ndarray, n_dot_a: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """(hits, t) matrices for a block of segments against every triangle."""
    denom = d @ normals.T  # (bs, nt)
    num = n_dot_a[None, :] - s @ normals.T
    live = np.abs(denom) >= DET_EPSILON
    t = np.zeros_like(denom)
    np.divide(num, denom, out=t, where=live)
    live &= (t >= 0.0) & (t <= 1.0)

    # p = s + t*d, expanded per pair
    p = s[:, None, :] + t[..., None] * d[:, None, :]  # (bs, nt, 3)
    for e0, v0 in ((vb - va, va), (vc - vb, vb), (va - vc, vc)):
        r = p - v0[None, :, :]
        cx = e0[None, :, 1] * r[..., 2] - e0[None, :, 2] * r[..., 1]
        cy = e0[None, :, 2] * r[..., 0] - e0[None, :, 0] * r[..., 2]
        cz = e0[None, :, 0] * r[..., 1] - e0[None, :, 1] * r[..., 0]
        side = (
            cx * normals[None, :, 0]
            + cy * normals[None, :, 1]
            + cz * normals[None, :, 2]
        )
        live &= side >= 0.0
        if not live.any():
            break
    return live, t


def oracle_intersect(
    mesh: Mesh, segments: SegmentBatch, mode: str = MODE_BOOLEAN
) -> ResultSet:
    """Exact-test-only reference results in the requested mode."""
    results = oracle_intersect_all_modes(mesh, segments)
    return results[mode]


def oracle_intersect_all_modes(
    mesh: Mesh, segments: SegmentBatch
) -> dict[str, ResultSet]:
    """One scan producing consistent boolean, count and barycentric results."""
    n_r = segments.count
    n_t = mesh.num_triangles

    crossing = np.zeros(n_r, dtype=np.int32)
    counts = np.zeros(n_r, dtype=np.int32)
    best_t = np.full(n_r, np.inf)
    best_tri = np.full(n_r, -1, dtype=np.int32)

    if n_t and n_r:
        v = mesh.vertices.astype(np.float64)
        va = v[mesh.triangles[:, 0]]
        vb = v[mesh.triangles[:, 1]]
        vc = v[mesh.triangles[:, 2]]
        normals = np.cross(vb - va, vc - va)
        n_dot_a = np.einsum("ij,ij->i", normals, va)
        starts64 = segments.starts.astype(np.float64)
        dirs64 = segments.ends.astype(np.float64) - starts64

        block = max(1, _BLOCK_PAIRS // n_t)
        for lo in range(0, n_r, block):
            hi = min(n_r, lo + block)
            hits, t = _hits_block(
                starts64[lo:hi], dirs64[lo:hi], va, vb, vc, normals, n_dot_a
            )
            counts[lo:hi] = hits.sum(axis=1)
            crossing[lo:hi] = (counts[lo:hi] > 0).astype(np.int32)
            t_masked = np.where(hits, t, np.inf)
            j_star = np.argmin(t_masked, axis=1)  # first minimum = lowest id
            rows = np.arange(lo, hi)
            sel = crossing[lo:hi] > 0
            best_tri[rows[sel]] = j_star[sel].astype(np.int32)
            best_t[rows[sel]] = t_masked[np.arange(hi - lo)[sel], j_star[sel]]

    idx = np.nonzero(crossing)[0].astype(np.int32)
    if idx.size:
        s = segments.starts[idx].astype(np.float64)
        d = segments.ends[idx].astype(np.float64) - s
        p = s + best_t[idx, None] * d
        dist = np.sqrt(((p - s) ** 2).sum(axis=1)).astype(np.float32)
        points = p.astype(np.float32)
    else:
        dist = np.zeros(0, dtype=np.float32)
        points = np.zeros((0, 3), dtype=np.float32)

    return {
        MODE_BOOLEAN: ResultSet(mode=MODE_BOOLEAN, num_rays=n_r, crossing=crossing),
        MODE_COUNT: ResultSet(mode=MODE_COUNT, num_rays=n_r, counts=counts),
        MODE_BARYCENTRIC: ResultSet(
            mode=MODE_BARYCENTRIC,
            num_rays=n_r,
            ray_index=idx,
            distance=dist,
            triangle_id=best_tri[idx],
            point=points,
        ),
    }


@dataclass
class SyntheticScene:
    """Generated mesh + segments with per-segment ground truth."""

    mesh: Mesh
    segments: SegmentBatch
    expected_crossings: np.ndarray  # (N_r,) uint8, known by construction


def generate_scene(
    num_triangles: int, num_rays: int, crossing_fraction: float, seed: int
) -> SyntheticScene:
    """Height-field surface plus segments with known crossing flags.

    The surface is a triangulated random height field over a rectangular
    domain (single-valued in z).  Crossing segments are vertical lines
    through a point strictly interior to a chosen triangle, spanning well
    past the surface's z-range, so they cross exactly once.  Non-crossing
    segments sit entirely above the surface, entirely below it, or outside
    the domain footprint.  Deterministic for a given seed.
    """
    if not 0.0 <= crossing_fraction <= 1.0:
        raise ValidationError("crossing fraction must be within [0, 1]")
    if num_triangles < 1:
        raise ValidationError("need at least one triangle")
    rng = np.random.default_rng(seed)

    # --- surface ---
    nx = max(1, int(np.ceil(np.sqrt(num_triangles / 2.0))))
    ny = max(1, int(np.ceil(num_triangles / (2.0 * nx))))
    xs = np.arange(nx + 1, dtype=np.float64)
    ys = np.arange(ny + 1, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    phase = rng.uniform(0.0, 2.0 * np.pi, size=4)
    z = (
        1.5 * np.sin(0.37 * gx + phase[0]) * np.cos(0.23 * gy + phase[1])
        + 0.8 * np.sin(0.11 * gx + 0.19 * gy + phase[2])
        + 0.1 * np.sin(1.7 * gx + phase[3])
    )
    vertices = np.column_stack(
        [gx.ravel(), gy.ravel(), z.ravel()]
    ).astype(np.float32)

    def vid(ix, iy):
        return ix * (ny + 1) + iy

    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    ci = ci.ravel()
    cj = cj.ravel()
    v00 = vid(ci, cj)
    v10 = vid(ci + 1, cj)
    v01 = vid(ci, cj + 1)
    v11 = vid(ci + 1, cj + 1)
    tris = np.empty((2 * nx * ny, 3), dtype=np.int32)
    tris[0::2] = np.column_stack([v00, v10, v11])
    tris[1::2] = np.column_stack([v00, v11, v01])
    mesh = Mesh.from_arrays(vertices, tris[:num_triangles])

    z_lo = float(vertices[:, 2].min())
    z_hi = float(vertices[:, 2].max())
    z_pad = 0.5 + 0.1 * (z_hi - z_lo)

    # --- segments ---
    n_cross = int(round(crossing_fraction * num_rays))
    flags = np.zeros(num_rays, dtype=np.uint8)
    flags[:n_cross] = 1
    rng.shuffle(flags)
    starts = np.zeros((num_rays, 3), dtype=np.float64)
    ends = np.zeros((num_rays, 3), dtype=np.float64)

    cross_idx = np.nonzero(flags)[0]
    if cross_idx.size:
        k = cross_idx.size
        tri_pick = rng.integers(0, mesh.num_triangles, size=k)
        w = rng.random((k, 2))
        fold = w.sum(axis=1) > 1.0
        w[fold] = 1.0 - w[fold]
        bary = np.column_stack([1.0 - w.sum(axis=1), w[:, 0], w[:, 1]])
        bary = _GRAZE_MARGIN + (1.0 - 3.0 * _GRAZE_MARGIN) * bary
        corners = mesh.vertices[mesh.triangles[tri_pick]].astype(np.float64)
        pts = np.einsum("kc,kcj->kj", bary, corners)
        below = z_lo - z_pad * (1.0 + rng.random(k))
        above = z_hi + z_pad * (1.0 + rng.random(k))
        upward = rng.random(k) < 0.5
        z0 = np.where(upward, below, above)
        z1 = np.where(upward, above, below)
        starts[cross_idx, 0] = pts[:, 0]
        starts[cross_idx, 1] = pts[:, 1]
        starts[cross_idx, 2] = z0
        ends[cross_idx, 0] = pts[:, 0]
        ends[cross_idx, 1] = pts[:, 1]
        ends[cross_idx, 2] = z1

    miss_idx = np.nonzero(flags == 0)[0]
    if miss_idx.size:
        k = miss_idx.size
        kind = rng.integers(0, 3, size=k)
        x = rng.uniform(-1.0, nx + 1.0, size=(k, 2))
        y = rng.uniform(-1.0, ny + 1.0, size=(k, 2))
        z0 = np.empty((k, 2))
        above = kind == 0
        below = kind == 1
        beside = kind == 2
        z0[above] = z_hi + z_pad + rng.uniform(0.0, 2.0 * z_pad, size=(above.sum(), 2))
        z0[below] = z_lo - z_pad - rng.uniform(0.0, 2.0 * z_pad, size=(below.sum(), 2))
        z0[beside] = rng.uniform(z_lo - z_pad, z_hi + z_pad, size=(beside.sum(), 2))
        # "beside" segments sit strictly left of the domain's x-range
        x[beside] = rng.uniform(-6.0, -1.0, size=(beside.sum(), 2))
        starts[miss_idx, 0] = x[:, 0]
        starts[miss_idx, 1] = y[:, 0]
        starts[miss_idx, 2] = z0[:, 0]
        ends[miss_idx, 0] = x[:, 1]
        ends[miss_idx, 1] = y[:, 1]
        ends[miss_idx, 2] = z0[:, 1]

    segments = SegmentBatch.from_arrays(starts, ends)
    return SyntheticScene(mesh=mesh, segments=segments, expected_crossings=flags)


def write_scene_files(scene: SyntheticScene, directory) -> dict[str, str]:
    """Emit the four binary input files for end-to-end CLI runs."""
    from . import io_cli

    return io_cli.write_input_files(
        directory,
        scene.mesh.vertices,
        scene.mesh.triangles,
        scene.segments.starts,
        scene.segments.ends,
    )
