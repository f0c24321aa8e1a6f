import numpy as np
import pytest

from helpers import cube_mesh, random_mesh, unit_triangle_mesh
from raysurf import Mesh, morton
from raysurf.exceptions import TraversalStackOverflow, ValidationError
from raysurf.geometry import segment_aabb
from raysurf.lbvh import (
    EMPTY,
    MODE_BARYCENTRIC,
    MODE_BOOLEAN,
    MODE_COUNT,
    CollisionBuffer,
    TraversalStack,
    buffer_insert,
    build_bvh,
    find_collisions,
    traverse,
    validate_structure,
)


def build_tree_for(mesh: Mesh):
    centroids = morton.triangle_centroids(mesh.vertices, mesh.triangles)
    support = morton.centroid_support(centroids)
    codes = morton.morton_encode_points(morton.quantize_points(centroids, support))
    sorted_codes, sorted_ids = morton.sort_by_morton(codes)
    return build_bvh(mesh, sorted_codes, sorted_ids)


def query_box_array(aabb):
    return np.array(
        [aabb.x_min, aabb.x_max, aabb.y_min, aabb.y_max, aabb.z_min, aabb.z_max],
        dtype=np.float32,
    )


def collect_all_candidates(tree, box, max_collisions):
    """Drain traverse() across resumptions; returns the list of id batches."""
    stack = TraversalStack()
    node = tree.root
    batches = []
    while True:
        buffer = CollisionBuffer(max_collisions)
        node = traverse(tree, box, node, stack, buffer)
        batches.append(buffer.hits[: buffer.count].tolist())
        if node == EMPTY:
            return batches


class TestBuild:
    def test_single_triangle_leaf_root(self):
        tree = build_tree_for(unit_triangle_mesh())
        assert tree.num_internal == 0
        assert tree.root == 0  # leaf ref
        assert tree.is_leaf_ref(tree.root)
        validate_structure(tree)

    def test_two_triangles(self):
        verts = np.array(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5], [6, 5, 5], [5, 6, 5]],
            dtype=np.float32,
        )
        tris = np.array([[0, 1, 2], [3, 4, 5]], dtype=np.int32)
        tree = build_tree_for(Mesh.from_arrays(verts, tris))
        assert tree.num_internal == 1
        assert tree.root == 0
        assert int(tree.internal_triangle_id[0]) == -2
        assert tree.node_range(0) == (0, 1)
        assert tree.internal_bounds[0].tolist() == [0, 6, 0, 6, 0, 5]
        validate_structure(tree)

    def test_eight_collinear_triangles_in_morton_order(self):
        # Triangles spread along x; distinct codes, so leaf order == x order.
        verts = []
        tris = []
        for j in range(8):
            base = len(verts)
            verts += [[j * 10.0, 0, 0], [j * 10.0 + 1, 0, 0], [j * 10.0, 1, 0]]
            tris.append([base, base + 1, base + 2])
        mesh = Mesh.from_arrays(
            np.array(verts, dtype=np.float32), np.array(tris, dtype=np.int32)
        )
        tree = build_tree_for(mesh)
        validate_structure(tree)
        assert tree.node_range(tree.root) == (0, 7)
        root_bounds = tree.node_bounds(tree.root)
        boxes = mesh.triangle_boxes()
        assert root_bounds[0] == boxes[:, 0].min()
        assert root_bounds[1] == boxes[:, 1].max()
        # in-order walk yields the leaves in sorted (morton) order
        order = []
        stack = [tree.root]
        while stack:
            ref = stack.pop()
            if tree.is_leaf_ref(ref):
                order.append(tree.leaf_index(ref))
                continue
            stack.append(int(tree.internal_child_right[ref]))
            stack.append(int(tree.internal_child_left[ref]))
        assert order == list(range(8))
        assert tree.leaf_triangle_id.tolist() == list(range(8))

    def test_duplicate_codes_still_valid(self):
        # All centroids identical -> every morton code equal; index tiebreaks.
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=np.float32)
        tris = np.array([[0, 1, 2]] * 1, dtype=np.int32)
        stacked_tris = np.array(
            [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [1, 0, 2]], dtype=np.int32
        )
        tree = build_tree_for(Mesh.from_arrays(verts, stacked_tris))
        validate_structure(tree)

    def test_empty_mesh_rejected(self):
        mesh = Mesh.from_arrays(np.zeros((0, 3), np.float32), np.zeros((0, 3), np.int32))
        with pytest.raises(ValidationError):
            build_bvh(mesh, np.zeros(0, np.uint64), np.zeros(0, np.int32))

    @pytest.mark.parametrize("n_tri", [1, 2, 3, 7, 8, 100])
    def test_structure_random_meshes(self, n_tri):
        rng = np.random.default_rng(100 + n_tri)
        for _ in range(5):
            tree = build_tree_for(random_mesh(rng, n_tri))
            validate_structure(tree)


class TestBufferInsert:
    def test_first_insert_not_full(self):
        buf = CollisionBuffer(32)
        assert buffer_insert(buf, 7) is False
        assert buf.count == 1

    def test_full_at_capacity_minus_one(self):
        buf = CollisionBuffer(32)
        buf.count = 30
        assert buffer_insert(buf, 1) is True  # count becomes 31 == MAX - 1
        assert buf.count == 31

    def test_mid_occupancy_not_full(self):
        buf = CollisionBuffer(32)
        buf.count = 5
        assert buffer_insert(buf, 1) is False


class TestTraverse:
    def test_disjoint_query_returns_empty(self):
        tree = build_tree_for(cube_mesh())
        box = query_box_array(segment_aabb((5, 5, 5), (6, 6, 6)))
        stack = TraversalStack()
        buffer = CollisionBuffer(32)
        assert traverse(tree, box, tree.root, stack, buffer) == EMPTY
        assert buffer.count == 0

    def test_everything_overlaps_small_tree(self):
        rng = np.random.default_rng(5)
        mesh = random_mesh(rng, 3)
        tree = build_tree_for(mesh)
        box = np.array([-20, 20, -20, 20, -20, 20], dtype=np.float32)
        stack = TraversalStack()
        buffer = CollisionBuffer(32)
        node = traverse(tree, box, tree.root, stack, buffer)
        assert node == EMPTY
        assert sorted(buffer.hits[: buffer.count].tolist()) == [0, 1, 2]

    def test_resumption_enumerates_once(self):
        rng = np.random.default_rng(6)
        mesh = random_mesh(rng, 100)
        tree = build_tree_for(mesh)
        box = np.array([-20, 20, -20, 20, -20, 20], dtype=np.float32)
        batches = collect_all_candidates(tree, box, max_collisions=32)
        assert len(batches) > 1  # buffer actually filled up
        assert all(len(b) <= 32 for b in batches)
        ids = [t for b in batches for t in b]
        assert len(ids) == len(set(ids)) == 100

    def test_resumption_matches_brute_force_subset(self):
        rng = np.random.default_rng(7)
        mesh = random_mesh(rng, 60)
        tree = build_tree_for(mesh)
        boxes = mesh.triangle_boxes()
        for trial in range(10):
            lo = rng.uniform(-10, 5, size=3)
            hi = lo + rng.uniform(0.5, 12, size=3)
            box = np.array(
                [lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]], dtype=np.float32
            )
            expected = {
                j
                for j in range(60)
                if (
                    box[0] <= boxes[j, 1] and box[1] >= boxes[j, 0]
                    and box[2] <= boxes[j, 3] and box[3] >= boxes[j, 2]
                    and box[4] <= boxes[j, 5] and box[5] >= boxes[j, 4]
                )
            }
            ids = [t for b in collect_all_candidates(tree, box, 8) for t in b]
            assert len(ids) == len(set(ids))
            assert set(ids) == expected

    def test_stack_overflow_detected(self):
        rng = np.random.default_rng(8)
        mesh = random_mesh(rng, 64)
        tree = build_tree_for(mesh)
        box = np.array([-20, 20, -20, 20, -20, 20], dtype=np.float32)
        stack = TraversalStack(capacity=3)
        buffer = CollisionBuffer(256)
        with pytest.raises(TraversalStackOverflow):
            traverse(tree, box, tree.root, stack, buffer)


class TestFindCollisions:
    def flat_square(self):
        verts = np.array(
            [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=np.float32
        )
        tris = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int32)
        return Mesh.from_arrays(verts, tris)

    def test_far_segment_misses(self):
        mesh = self.flat_square()
        tree = build_tree_for(mesh)
        start, end = (50, 50, -1), (50, 50, 1)
        box = query_box_array(segment_aabb(start, end))
        buf = CollisionBuffer(32)
        assert find_collisions(mesh, start, end, box, tree, buf, MODE_BOOLEAN) is False
        assert find_collisions(mesh, start, end, box, tree, buf, MODE_COUNT) == 0
        assert find_collisions(mesh, start, end, box, tree, buf, MODE_BARYCENTRIC) is None

    def test_vertical_through_first_triangle(self):
        mesh = self.flat_square()
        tree = build_tree_for(mesh)
        start, end = (0.7, 0.2, -2.0), (0.7, 0.2, 2.0)  # interior of triangle 0
        box = query_box_array(segment_aabb(start, end))
        buf = CollisionBuffer(32)
        assert find_collisions(mesh, start, end, box, tree, buf, MODE_BOOLEAN) is True
        assert find_collisions(mesh, start, end, box, tree, buf, MODE_COUNT) == 1
        hit = find_collisions(mesh, start, end, box, tree, buf, MODE_BARYCENTRIC)
        assert hit.triangle_id == 0
        assert hit.t == pytest.approx(0.5, abs=1e-6)
        assert hit.point == pytest.approx((0.7, 0.2, 0.0), abs=1e-6)

    def test_cube_parity(self):
        mesh = cube_mesh()
        tree = build_tree_for(mesh)
        buf = CollisionBuffer(32)
        start, end = (0.5, 0.5, 0.5), (7.0, 8.0, 9.0)
        box = query_box_array(segment_aabb(start, end))
        count = find_collisions(mesh, start, end, box, tree, buf, MODE_COUNT)
        assert count % 2 == 1
        start2, end2 = (3.0, 3.0, 3.0), (7.0, 8.0, 9.0)
        box2 = query_box_array(segment_aabb(start2, end2))
        count2 = find_collisions(mesh, start2, end2, box2, tree, buf, MODE_COUNT)
        assert count2 % 2 == 0

    def test_unknown_mode_rejected(self):
        mesh = self.flat_square()
        tree = build_tree_for(mesh)
        buf = CollisionBuffer(32)
        with pytest.raises(ValidationError):
            find_collisions(mesh, (0, 0, 0), (1, 1, 1), np.zeros(6, np.float32), tree, buf, "bogus")
