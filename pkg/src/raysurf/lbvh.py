"""Linear BVH: bottom-up radix-tree construction and stack-based traversal.

The tree is stored as flat struct-of-array node fields.  A mesh of N_t
triangles yields N_t leaf nodes and N_t - 1 internal nodes; one extra
internal slot (index N_t - 1) is not a real node, its left-child field holds
the root reference.  Node references are tagged integers: ``ref < N_t - 1``
names an internal node, anything else names leaf ``ref - (N_t - 1)``; -1 is
the empty marker.

Construction follows the agglomerative single-pass scheme: every leaf walks
toward the root, each parent picked by comparing the key distance at the two
range boundaries, and a visit counter gates the parent so its bounds are
computed only once both children are linked.  Traversal uses a fixed-size
stack and a fixed-capacity collision buffer; when the buffer is nearly full
traversal suspends and returns the node to resume from, with the stack
content persisting across calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import TraversalStackOverflow, ValidationError
from .geometry import intersect_segment_triangle
from .mesh import MAX_TRIANGLES, Mesh

EMPTY = -1
MAX_COLLISIONS = 32
MAX_STACK = 64

MODE_BOOLEAN = "boolean"
MODE_BARYCENTRIC = "barycentric"
MODE_COUNT = "count"
MODES = (MODE_BOOLEAN, MODE_BARYCENTRIC, MODE_COUNT)


@dataclass
class BvhTree:
    """Flat LBVH node storage; see the module docstring for conventions."""

    num_triangles: int
    internal_bounds: np.ndarray       # (N_t, 6) float32; slot N_t-1 unused
    internal_child_left: np.ndarray   # (N_t,) int32; slot N_t-1 = root ref
    internal_child_right: np.ndarray
    internal_range_left: np.ndarray
    internal_range_right: np.ndarray
    internal_triangle_id: np.ndarray  # -1 internal, -2 root
    internal_visit: np.ndarray        # 2 for every real internal after build
    leaf_bounds: np.ndarray           # (N_t, 6) float32
    leaf_triangle_id: np.ndarray      # (N_t,) int32
    leaf_range_left: np.ndarray
    leaf_range_right: np.ndarray
    sorted_triangle_ids: np.ndarray   # morton-order permutation of triangle ids

    @property
    def num_internal(self) -> int:
        return self.num_triangles - 1

    @property
    def root(self) -> int:
        return int(self.internal_child_left[self.num_triangles - 1])

    def is_leaf_ref(self, ref: int) -> bool:
        return ref >= self.num_internal

    def leaf_index(self, ref: int) -> int:
        return ref - self.num_internal

    def node_bounds(self, ref: int) -> np.ndarray:
        if ref < self.num_internal:
            return self.internal_bounds[ref]
        return self.leaf_bounds[ref - self.num_internal]

    def node_range(self, ref: int) -> tuple[int, int]:
        if ref < self.num_internal:
            return (
                int(self.internal_range_left[ref]),
                int(self.internal_range_right[ref]),
            )
        i = ref - self.num_internal
        return int(self.leaf_range_left[i]), int(self.leaf_range_right[i])


class CollisionBuffer:
    """Fixed-capacity list of candidate triangle ids for one query."""

    __slots__ = ("hits", "count", "capacity")

    def __init__(self, capacity: int = MAX_COLLISIONS):
        if capacity < 2:
            raise ValidationError("collision buffer needs capacity >= 2")
        self.capacity = capacity
        self.hits = np.zeros(capacity, dtype=np.int32)
        self.count = 0


class TraversalStack:
    """Fixed-size node-reference stack with the empty marker as bottom sentinel."""

    __slots__ = ("nodes", "top", "capacity")

    def __init__(self, capacity: int = MAX_STACK):
        self.capacity = capacity
        self.nodes = np.full(capacity, EMPTY, dtype=np.int32)
        self.top = 1  # sentinel pushed

    def push(self, ref: int) -> None:
        if self.top >= self.capacity:
            raise TraversalStackOverflow(
                f"traversal stack overflow (capacity {self.capacity})"
            )
        self.nodes[self.top] = ref
        self.top += 1

    def pop(self) -> int:
        self.top -= 1
        return int(self.nodes[self.top])


def buffer_insert(buffer: CollisionBuffer, triangle_id: int) -> bool:
    """Append an id; True means the buffer is nearly full (no room for the
    up-to-two inserts the next traversal step may produce)."""
    buffer.hits[buffer.count] = triangle_id
    buffer.count += 1
    return buffer.count >= buffer.capacity - 1


def _delta_less(codes: np.ndarray, ids: np.ndarray, a: int, b: int) -> bool:
    """Strict total order on adjacent-key distances at split positions a, b.

    Compares the XOR of neighbouring composite keys (code, original id);
    the split index breaks any remaining tie so every range has a unique
    merge direction.
    """
    xa = int(codes[a] ^ codes[a + 1])
    xb = int(codes[b] ^ codes[b + 1])
    if xa != xb:
        return xa < xb
    ia = int(ids[a] ^ ids[a + 1])
    ib = int(ids[b] ^ ids[b + 1])
    if ia != ib:
        return ia < ib
    return a < b


def build_bvh(mesh: Mesh, sorted_codes: np.ndarray, sorted_ids: np.ndarray) -> BvhTree:
    """Build the radix tree from morton-sorted leaves, bottom-up.

    ``sorted_codes``/``sorted_ids`` come from `morton.sort_by_morton`.  Each
    leaf's bounds are the AABB of its triangle; parents are linked child ->
    parent, and a parent's bounds/range are filled by whichever climb reaches
    it second (visit counter 0 -> 1 -> 2).
    """
    n = mesh.num_triangles
    if n < 1:
        raise ValidationError("cannot build a BVH over an empty mesh")
    if n > MAX_TRIANGLES:
        raise ValidationError(f"triangle count {n} exceeds capacity {MAX_TRIANGLES}")

    tree = _reset_tree(mesh, sorted_ids)
    if n == 1:
        # No internal nodes; the single leaf serves as root.
        tree.internal_child_left[0] = tree.num_internal  # leaf ref 0
        return tree

    codes = np.asarray(sorted_codes, dtype=np.uint64)
    ids = np.asarray(sorted_ids, dtype=np.int32)
    for i in range(n):
        _climb_from_leaf(tree, codes, ids, i)
    return tree


def _reset_tree(mesh: Mesh, sorted_ids: np.ndarray) -> BvhTree:
    """Initialize leaf nodes from triangle boxes and blank internal nodes."""
    n = mesh.num_triangles
    boxes = mesh.triangle_boxes()
    order = np.asarray(sorted_ids, dtype=np.int32)
    idx = np.arange(n, dtype=np.int32)
    return BvhTree(
        num_triangles=n,
        internal_bounds=np.zeros((n, 6), dtype=np.float32),
        internal_child_left=np.full(n, EMPTY, dtype=np.int32),
        internal_child_right=np.full(n, EMPTY, dtype=np.int32),
        internal_range_left=np.full(n, -1, dtype=np.int32),
        internal_range_right=np.full(n, -1, dtype=np.int32),
        internal_triangle_id=np.full(n, -1, dtype=np.int32),
        internal_visit=np.zeros(n, dtype=np.int32),
        leaf_bounds=boxes[order],
        leaf_triangle_id=order.copy(),
        leaf_range_left=idx.copy(),
        leaf_range_right=idx.copy(),
        sorted_triangle_ids=order.copy(),
    )


def _climb_from_leaf(tree: BvhTree, codes: np.ndarray, ids: np.ndarray, i: int) -> None:
    n = tree.num_triangles
    n_int = tree.num_internal
    child_l = tree.internal_child_left
    child_r = tree.internal_child_right
    range_l = tree.internal_range_left
    range_r = tree.internal_range_right
    visit = tree.internal_visit

    left = right = i
    node = n_int + i  # leaf ref
    while True:
        if left == 0 and right == n - 1:
            child_l[n - 1] = node  # root-pointer slot
            if node < n_int:
                tree.internal_triangle_id[node] = -2
            return
        if left == 0 or (right != n - 1 and _delta_less(codes, ids, right, left - 1)):
            parent = right
            child_l[parent] = node
            range_l[parent] = left
        else:
            parent = left - 1
            child_r[parent] = node
            range_r[parent] = right
        visit[parent] += 1
        if visit[parent] == 1:
            return  # first arriver stops; the sibling's climb continues
        left = int(range_l[parent])
        right = int(range_r[parent])
        lb = tree.node_bounds(int(child_l[parent]))
        rb = tree.node_bounds(int(child_r[parent]))
        pb = tree.internal_bounds[parent]
        pb[0::2] = np.minimum(lb[0::2], rb[0::2])
        pb[1::2] = np.maximum(lb[1::2], rb[1::2])
        node = parent


def _boxes_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(
        a[0] <= b[1] and a[1] >= b[0]
        and a[2] <= b[3] and a[3] >= b[2]
        and a[4] <= b[5] and a[5] >= b[4]
    )


def traverse(
    tree: BvhTree,
    query_box: np.ndarray,
    node: int,
    stack: TraversalStack,
    buffer: CollisionBuffer,
) -> int:
    """Descend from ``node``, appending overlapping leaves' triangle ids.

    Returns the node at which to resume once the buffer is nearly full, or
    EMPTY when the walk is complete.  The caller resets ``buffer.count``
    before each call; the stack persists across calls.
    """
    n_int = tree.num_internal
    buffer_full = False
    while node != EMPTY and not buffer_full:
        if node >= n_int:
            # Leaf entry point (single-triangle tree).
            if _boxes_overlap(query_box, tree.leaf_bounds[node - n_int]):
                buffer_full = buffer_insert(
                    buffer, int(tree.leaf_triangle_id[node - n_int])
                )
            node = stack.pop()
            continue
        child_l = int(tree.internal_child_left[node])
        child_r = int(tree.internal_child_right[node])
        leaf_l = child_l >= n_int
        leaf_r = child_r >= n_int
        overlap_l = _boxes_overlap(query_box, tree.node_bounds(child_l))
        overlap_r = _boxes_overlap(query_box, tree.node_bounds(child_r))

        if overlap_l and leaf_l:
            buffer_full = buffer_insert(
                buffer, int(tree.leaf_triangle_id[child_l - n_int])
            )
        if overlap_r and leaf_r:
            buffer_full |= buffer_insert(
                buffer, int(tree.leaf_triangle_id[child_r - n_int])
            )

        traverse_l = overlap_l and not leaf_l
        traverse_r = overlap_r and not leaf_r
        if not traverse_l and not traverse_r:
            node = stack.pop()
        else:
            node = child_l if traverse_l else child_r
            if traverse_l and traverse_r:
                stack.push(child_r)
    return node


@dataclass(frozen=True)
class SegmentHit:
    """Nearest confirmed crossing for one segment (barycentric mode)."""

    triangle_id: int
    t: float
    u: float
    v: float
    point: tuple[float, float, float]


def find_collisions(
    mesh: Mesh,
    start,
    end,
    segment_box: np.ndarray,
    tree: BvhTree,
    buffer: CollisionBuffer,
    mode: str = MODE_BOOLEAN,
    max_stack: int = MAX_STACK,
):
    """Alternate coarse traversal and exact tests for one segment.

    Returns a bool (boolean mode), a hit count (count mode) or the nearest
    `SegmentHit` / None (barycentric mode).  Boolean mode stops as soon as
    one crossing is confirmed; the other modes drain every candidate.
    """
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}")
    stack = TraversalStack(max_stack)
    node = tree.root
    verts = mesh.vertices
    tris = mesh.triangles

    detected = False
    n_hits = 0
    best_t = 0.0
    best: SegmentHit | None = None
    while True:
        buffer.count = 0
        node = traverse(tree, segment_box, node, stack, buffer)
        for k in range(buffer.count):
            if mode == MODE_BOOLEAN and detected:
                break
            tid = int(buffer.hits[k])
            ia, ib, ic = tris[tid]
            rec = intersect_segment_triangle(
                start, end, verts[ia], verts[ib], verts[ic]
            )
            if rec.hit:
                detected = True
                n_hits += 1
                if best is None or rec.t < best_t or (
                    rec.t == best_t and tid < best.triangle_id
                ):
                    best_t = rec.t
                    best = SegmentHit(tid, rec.t, rec.u, rec.v, rec.point)
        if node == EMPTY or (mode == MODE_BOOLEAN and detected):
            break

    if mode == MODE_BOOLEAN:
        return detected
    if mode == MODE_COUNT:
        return n_hits
    return best


def validate_structure(tree: BvhTree) -> None:
    """Raise ValueError on any violated structural invariant.

    Checks node counts, the triangle-id conventions, exact parent-bounds
    unions, range partitioning, and that a full walk reaches every leaf
    exactly once within the 2*N_t - 1 visit budget.
    """
    n = tree.num_triangles
    n_int = tree.num_internal
    if tree.leaf_bounds.shape[0] != n:
        raise ValueError("leaf array size differs from triangle count")
    if n == 1:
        if tree.root != n_int:
            raise ValueError("single-triangle tree must use its leaf as root")
        return

    root = tree.root
    if tree.is_leaf_ref(root):
        raise ValueError("root of a multi-triangle tree must be internal")
    if int(tree.internal_triangle_id[root]) != -2:
        raise ValueError("root triangleId must be -2")
    for k in range(n_int):
        if k != root and int(tree.internal_triangle_id[k]) != -1:
            raise ValueError(f"internal node {k} triangleId must be -1")
        if int(tree.internal_visit[k]) != 2:
            raise ValueError(f"internal node {k} visit counter is not 2")
    if tree.node_range(root) != (0, n - 1):
        raise ValueError("root range must span all leaves")

    seen_leaves = np.zeros(n, dtype=bool)
    visits = 0
    stack = [root]
    while stack:
        ref = stack.pop()
        visits += 1
        if visits > 2 * n - 1:
            raise ValueError("walk exceeded 2*N_t - 1 visits (cycle?)")
        if tree.is_leaf_ref(ref):
            i = tree.leaf_index(ref)
            if seen_leaves[i]:
                raise ValueError(f"leaf {i} reachable more than once")
            seen_leaves[i] = True
            if tree.node_range(ref) != (i, i):
                raise ValueError(f"leaf {i} range must be ({i}, {i})")
            tid = int(tree.leaf_triangle_id[i])
            if not 0 <= tid < n:
                raise ValueError(f"leaf {i} triangleId {tid} out of range")
            continue
        cl = int(tree.internal_child_left[ref])
        cr = int(tree.internal_child_right[ref])
        if cl == EMPTY or cr == EMPTY:
            raise ValueError(f"internal node {ref} is missing a child")
        lb = tree.node_bounds(cl)
        rb = tree.node_bounds(cr)
        pb = tree.internal_bounds[ref]
        if not (
            np.array_equal(pb[0::2], np.minimum(lb[0::2], rb[0::2]))
            and np.array_equal(pb[1::2], np.maximum(lb[1::2], rb[1::2]))
        ):
            raise ValueError(f"internal node {ref} bounds are not the child union")
        ll, lr = tree.node_range(cl)
        rl, rr = tree.node_range(cr)
        if lr + 1 != rl:
            raise ValueError(f"internal node {ref} children ranges do not abut")
        if tree.node_range(ref) != (ll, rr):
            raise ValueError(f"internal node {ref} range differs from children span")
        stack.append(cl)
        stack.append(cr)
    if not seen_leaves.all():
        raise ValueError("walk did not reach every leaf")
