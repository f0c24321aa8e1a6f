"""Compiled core vs. pure fallback: trees and results must be bit-identical."""

import numpy as np
import pytest

from helpers import assert_results_equal, random_mesh, random_segments
from raysurf import EngineConfig, available_backends, morton, run_baseline_allpairs, run_batch
from raysurf._backend import get_backend
from raysurf.exceptions import TraversalStackOverflow
from raysurf.lbvh import MODES, validate_structure
from raysurf.oracle import generate_scene

needs_compiled = pytest.mark.skipif(
    "compiled" not in available_backends(), reason="compiled backend not built"
)

TREE_FIELDS = (
    "internal_bounds",
    "internal_child_left",
    "internal_child_right",
    "internal_range_left",
    "internal_range_right",
    "internal_triangle_id",
    "internal_visit",
    "leaf_bounds",
    "leaf_triangle_id",
    "leaf_range_left",
    "leaf_range_right",
    "sorted_triangle_ids",
)


def sorted_keys_for(mesh):
    centroids = morton.triangle_centroids(mesh.vertices, mesh.triangles)
    support = morton.centroid_support(centroids)
    codes = morton.morton_encode_points(morton.quantize_points(centroids, support))
    return morton.sort_by_morton(codes)


def assert_trees_equal(a, b):
    assert a.num_triangles == b.num_triangles
    for field in TREE_FIELDS:
        assert np.array_equal(getattr(a, field), getattr(b, field)), field


@needs_compiled
class TestTreeEquality:
    @pytest.mark.parametrize("n_tri", [1, 2, 3, 7, 8, 100, 5000])
    def test_bit_identical_trees(self, n_tri):
        rng = np.random.default_rng(n_tri)
        mesh = random_mesh(rng, n_tri)
        codes, ids = sorted_keys_for(mesh)
        pure_tree, _, _ = get_backend("pure").build_tree(mesh, codes, ids)
        comp_tree, _, _ = get_backend("compiled").build_tree(mesh, codes, ids)
        assert_trees_equal(pure_tree, comp_tree)
        validate_structure(comp_tree)

    @pytest.mark.parametrize("workers", [1, 2, 4])
    def test_parallel_construction_deterministic(self, workers):
        rng = np.random.default_rng(55)
        mesh = random_mesh(rng, 6000)  # above the parallel-build threshold
        codes, ids = sorted_keys_for(mesh)
        reference, _, _ = get_backend("compiled").build_tree(mesh, codes, ids, workers=1)
        tree, _, _ = get_backend("compiled").build_tree(
            mesh, codes, ids, workers=workers
        )
        assert_trees_equal(reference, tree)
        validate_structure(tree)

    def test_duplicate_code_meshes(self):
        # Identical centroids force every morton code equal.
        rng = np.random.default_rng(56)
        verts = rng.uniform(-1, 1, size=(6, 3)).astype(np.float32)
        tris = np.array(
            [[0, 1, 2], [1, 2, 3], [2, 3, 4], [0, 2, 4], [1, 3, 5]], dtype=np.int32
        )
        from raysurf.mesh import Mesh

        mesh = Mesh.from_arrays(np.tile(verts[:1], (6, 1)) * 0 + verts[:1], tris)
        codes, ids = sorted_keys_for(mesh)
        assert len(set(codes.tolist())) == 1
        pure_tree, _, _ = get_backend("pure").build_tree(mesh, codes, ids)
        comp_tree, _, _ = get_backend("compiled").build_tree(mesh, codes, ids)
        assert_trees_equal(pure_tree, comp_tree)


@needs_compiled
class TestResultEquality:
    @pytest.mark.parametrize("mode", MODES)
    def test_scene_results_bitwise(self, mode):
        scene = generate_scene(300, 2500, 0.5, seed=19)
        a = run_batch(scene.mesh, scene.segments, EngineConfig(mode=mode, backend="compiled"))
        b = run_batch(scene.mesh, scene.segments, EngineConfig(mode=mode, backend="pure"))
        assert_results_equal(a, b, context=f"backends {mode}")

    @pytest.mark.parametrize("mode", MODES)
    def test_soup_results_bitwise(self, mode):
        rng = np.random.default_rng(20)
        mesh = random_mesh(rng, 120)
        batch = random_segments(rng, 500)
        a = run_batch(mesh, batch, EngineConfig(mode=mode, backend="compiled"))
        b = run_batch(mesh, batch, EngineConfig(mode=mode, backend="pure"))
        assert_results_equal(a, b, context=f"backends soup {mode}")
        ab = run_baseline_allpairs(mesh, batch, EngineConfig(mode=mode, backend="compiled"))
        bb = run_baseline_allpairs(mesh, batch, EngineConfig(mode=mode, backend="pure"))
        assert_results_equal(ab, bb, context=f"backends baseline {mode}")

    def test_stack_overflow_same_segment(self):
        rng = np.random.default_rng(21)
        mesh = random_mesh(rng, 256)
        batch = random_segments(rng, 6, span=15.0)
        errors = {}
        for backend in ("compiled", "pure"):
            with pytest.raises(TraversalStackOverflow) as info:
                run_batch(
                    mesh, batch, EngineConfig(max_stack=3, backend=backend, workers=1)
                )
            errors[backend] = info.value.segment_index
        assert errors["compiled"] == errors["pure"]
