"""Triangle-mesh container and ingestion-time validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

MAX_TRIANGLES = 2**31 - 1


@dataclass
class Mesh:
    """Vertex array plus index triplets referencing it.

    ``vertices`` is (N_v, 3) float32, ``triangles`` (N_t, 3) int32.  Use
    `Mesh.from_arrays` to get dtype canonicalization and validation; the
    intersection code assumes both have happened.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    @classmethod
    def from_arrays(cls, vertices, triangles) -> "Mesh":
        v = np.ascontiguousarray(vertices, dtype=np.float32).reshape(-1, 3)
        t = np.ascontiguousarray(triangles, dtype=np.int32).reshape(-1, 3)
        mesh = cls(vertices=v, triangles=t)
        mesh.validate()
        return mesh

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def validate(self) -> None:
        if not np.isfinite(self.vertices).all():
            raise ValidationError("mesh vertices contain non-finite values")
        if self.num_triangles > MAX_TRIANGLES:
            raise ValidationError(
                f"mesh has {self.num_triangles} triangles; maximum is {MAX_TRIANGLES}"
            )
        if self.num_triangles == 0:
            return
        bad = np.nonzero(
            (self.triangles < 0) | (self.triangles >= self.num_vertices)
        )
        if bad[0].size:
            j = int(bad[0][0])
            raise ValidationError(
                f"triangle {j} references vertex {int(self.triangles[j, bad[1][0]])} "
                f"out of range [0, {self.num_vertices})"
            )
        t = self.triangles
        dup = np.nonzero(
            (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
        )[0]
        if dup.size:
            raise ValidationError(
                f"triangle {int(dup[0])} repeats a vertex index"
            )

    def triangle_boxes(self) -> np.ndarray:
        """Per-triangle AABBs, (N_t, 6) float32 as [xmin, xmax, ymin, ymax, zmin, zmax]."""
        va = self.vertices[self.triangles[:, 0]]
        vb = self.vertices[self.triangles[:, 1]]
        vc = self.vertices[self.triangles[:, 2]]
        lo = np.minimum(np.minimum(va, vb), vc)
        hi = np.maximum(np.maximum(va, vb), vc)
        boxes = np.empty((self.num_triangles, 6), dtype=np.float32)
        boxes[:, 0::2] = lo
        boxes[:, 1::2] = hi
        return boxes
