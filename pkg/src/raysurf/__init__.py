"""raysurf: batch line-segment vs. triangle-mesh intersection engine.

Given N_r segments and a mesh of N_t triangles, reports per segment whether
it crosses the surface, and optionally where (distance, triangle, point) or
how many times.  Candidate screening goes through a linear BVH built over
morton-sorted triangle centroids; exact tests are Moller-Trumbore.
"""

from ._backend import available_backends, default_backend_name
from .engine import (
    EngineConfig,
    ResultSet,
    SegmentBatch,
    compute_segment_boxes,
    run_baseline_allpairs,
    run_batch,
    sort_segments_by_morton,
)
from .exceptions import (
    InputFileError,
    RaysurfError,
    TraversalStackOverflow,
    UsageError,
    ValidationError,
)
from .lbvh import (
    MAX_COLLISIONS,
    MAX_STACK,
    MODE_BARYCENTRIC,
    MODE_BOOLEAN,
    MODE_COUNT,
    BvhTree,
    CollisionBuffer,
    TraversalStack,
    build_bvh,
    buffer_insert,
    find_collisions,
    traverse,
)
from .mesh import Mesh
from .oracle import SyntheticScene, generate_scene, oracle_intersect

__version__ = "0.1.0"

__all__ = [
    "BvhTree",
    "CollisionBuffer",
    "EngineConfig",
    "InputFileError",
    "MAX_COLLISIONS",
    "MAX_STACK",
    "MODE_BARYCENTRIC",
    "MODE_BOOLEAN",
    "MODE_COUNT",
    "Mesh",
    "RaysurfError",
    "ResultSet",
    "SegmentBatch",
    "SyntheticScene",
    "TraversalStack",
    "TraversalStackOverflow",
    "UsageError",
    "ValidationError",
    "available_backends",
    "build_bvh",
    "buffer_insert",
    "compute_segment_boxes",
    "default_backend_name",
    "find_collisions",
    "generate_scene",
    "oracle_intersect",
    "run_baseline_allpairs",
    "run_batch",
    "sort_segments_by_morton",
    "traverse",
]
