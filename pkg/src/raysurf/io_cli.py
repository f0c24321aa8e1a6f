"""Bit-exact little-endian binary file I/O and the command-line interface.

Input is four binary files: vertices (float32 x/y/z records), triangles
(int32 index triplets) and the segment start/end point files.  Results are
written next to them with the same record conventions:

    boolean mode      intersect_results_i32       one int32 0/1 per segment
    count mode        intercept_counts_i32        one int32 per segment
    barycentric mode  intersecting_rays_i32       ascending segment indices
                      distances_f32
                      intersecting_triangles_i32
                      intersecting_points_f32     3 floats per entry
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .engine import EngineConfig, ResultSet, SegmentBatch, run_batch
from .exceptions import (
    InputFileError,
    RaysurfError,
    UsageError,
    ValidationError,
)
from .lbvh import MODE_BARYCENTRIC, MODE_BOOLEAN, MODE_COUNT
from .mesh import Mesh

DEFAULT_INPUT_DIR = Path("input")
DEFAULT_FILE_NAMES = ("vertices_f32", "triangles_i32", "rayFrom_f32", "rayTo_f32")

RESULT_FILE_BOOLEAN = "intersect_results_i32"
RESULT_FILE_COUNT = "intercept_counts_i32"
RESULT_FILES_BARYCENTRIC = (
    "intersecting_rays_i32",
    "distances_f32",
    "intersecting_triangles_i32",
    "intersecting_points_f32",
)

_EXIT_CODES = (
    (UsageError, 1),
    (InputFileError, 2),
    (ValidationError, 3),
)

_PHASE_ORDER = (
    "ray sort",
    "ray boxes",
    "quantization",
    "encoding",
    "sorting",
    "reset",
    "construct",
    "query",
)


def _read_triplets(path, dtype: str, what: str) -> np.ndarray:
    path = Path(path)
    try:
        size = path.stat().st_size
    except OSError as exc:
        raise InputFileError(f"cannot read {what} file {path}: {exc}") from None
    if size % 12 != 0:
        raise InputFileError(
            f"{what} file {path} is malformed: {size} bytes is not a multiple of 12"
        )
    try:
        data = np.fromfile(path, dtype=dtype)
    except OSError as exc:
        raise InputFileError(f"cannot read {what} file {path}: {exc}") from None
    return data.reshape(-1, 3)


def read_vertices(path) -> np.ndarray:
    """Vertex records in file order, (N_v, 3) float32."""
    return _read_triplets(path, "<f4", "vertices")


def read_triangles(path, num_vertices: int) -> np.ndarray:
    """Index triplets, (N_t, 3) int32; every index checked against N_v."""
    tris = _read_triplets(path, "<i4", "triangles")
    bad = np.nonzero((tris < 0) | (tris >= num_vertices))
    if bad[0].size:
        j = int(bad[0][0])
        raise ValidationError(
            f"triangle {j} references vertex {int(tris[j, bad[1][0]])} "
            f"out of range [0, {num_vertices})"
        )
    return tris


def read_segments(from_path, to_path) -> SegmentBatch:
    """Paired start/end records; the two files must describe equal counts."""
    starts = _read_triplets(from_path, "<f4", "segment start")
    ends = _read_triplets(to_path, "<f4", "segment end")
    if starts.shape[0] != ends.shape[0]:
        raise InputFileError(
            f"segment files disagree: {starts.shape[0]} start points in "
            f"{from_path} vs {ends.shape[0]} end points in {to_path}"
        )
    return SegmentBatch.from_arrays(starts, ends)


def write_input_files(directory, vertices, triangles, starts, ends) -> dict[str, str]:
    """Emit the four binary input files with their conventional names."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    arrays = (
        np.asarray(vertices, dtype="<f4"),
        np.asarray(triangles, dtype="<i4"),
        np.asarray(starts, dtype="<f4"),
        np.asarray(ends, dtype="<f4"),
    )
    paths = {}
    for name, data in zip(DEFAULT_FILE_NAMES, arrays):
        path = directory / name
        data.tofile(path)
        paths[name] = str(path)
    return paths


def write_results(results: ResultSet, out_dir) -> dict[str, str]:
    """Write the mode's output file(s); returns {file name: path}."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".raysurf_write_probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise InputFileError(f"output directory {out_dir} is not writable: {exc}")

    paths = {}

    def emit(name: str, data: np.ndarray, dtype: str) -> None:
        path = out_dir / name
        np.ascontiguousarray(data).astype(dtype).tofile(path)
        paths[name] = str(path)

    if results.mode == MODE_BOOLEAN:
        emit(RESULT_FILE_BOOLEAN, results.crossing, "<i4")
    elif results.mode == MODE_COUNT:
        emit(RESULT_FILE_COUNT, results.counts, "<i4")
    else:
        emit(RESULT_FILES_BARYCENTRIC[0], results.ray_index, "<i4")
        emit(RESULT_FILES_BARYCENTRIC[1], results.distance, "<f4")
        emit(RESULT_FILES_BARYCENTRIC[2], results.triangle_id, "<i4")
        emit(RESULT_FILES_BARYCENTRIC[3], results.point, "<f4")
    return paths


def read_boolean_results(out_dir) -> np.ndarray:
    return np.fromfile(Path(out_dir) / RESULT_FILE_BOOLEAN, dtype="<i4")


def read_count_results(out_dir) -> np.ndarray:
    return np.fromfile(Path(out_dir) / RESULT_FILE_COUNT, dtype="<i4")


def read_barycentric_results(out_dir):
    """Returns (ray_index, distance, triangle_id, points (K, 3))."""
    out_dir = Path(out_dir)
    rays = np.fromfile(out_dir / RESULT_FILES_BARYCENTRIC[0], dtype="<i4")
    dist = np.fromfile(out_dir / RESULT_FILES_BARYCENTRIC[1], dtype="<f4")
    tris = np.fromfile(out_dir / RESULT_FILES_BARYCENTRIC[2], dtype="<i4")
    pts = np.fromfile(out_dir / RESULT_FILES_BARYCENTRIC[3], dtype="<f4").reshape(-1, 3)
    return rays, dist, tris, pts


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise UsageError(message)


_MODE_ALIASES = {
    "boolean": MODE_BOOLEAN,
    "barycentric": MODE_BARYCENTRIC,
    "intercept_count": MODE_COUNT,
    "count": MODE_COUNT,
}


def _parse_args(argv) -> tuple[dict, EngineConfig, bool, str]:
    parser = _Parser(
        prog="raysurf",
        description="Batch segment/surface intersection test over binary input files.",
    )
    parser.add_argument(
        "files",
        nargs="*",
        metavar="FILE",
        help="vertices triangles rayfrom rayto [silent|default] "
        "[barycentric|intercept_count]; all omitted -> ./input defaults",
    )
    parser.add_argument("--mode", choices=sorted(_MODE_ALIASES), default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--sort-rays", action="store_true")
    parser.add_argument("--out-dir", default=".")
    args = parser.parse_args(argv)

    pos = args.files
    silent = False
    pos_mode = None
    if len(pos) == 0:
        file_paths = [DEFAULT_INPUT_DIR / name for name in DEFAULT_FILE_NAMES]
    elif 4 <= len(pos) <= 6:
        file_paths = [Path(p) for p in pos[:4]]
        if len(pos) >= 5:
            if pos[4] not in ("silent", "default"):
                raise UsageError(
                    f"5th argument must be 'silent' or 'default', got {pos[4]!r}"
                )
            silent = pos[4] == "silent"
        if len(pos) == 6:
            if pos[5] not in ("barycentric", "intercept_count"):
                raise UsageError(
                    "6th argument must be 'barycentric' or 'intercept_count', "
                    f"got {pos[5]!r}"
                )
            pos_mode = _MODE_ALIASES[pos[5]]
    else:
        raise UsageError(
            f"expected zero or 4-6 positional arguments, got {len(pos)}"
        )

    mode = _MODE_ALIASES[args.mode] if args.mode else (pos_mode or MODE_BOOLEAN)
    config = EngineConfig(mode=mode, sort_rays=args.sort_rays, workers=args.workers)
    files = dict(zip(("vertices", "triangles", "ray_from", "ray_to"), file_paths))
    return files, config, silent, args.out_dir


def cli_main(argv=None) -> int:
    """Run the full pipeline; returns the process exit code."""
    try:
        files, config, silent, out_dir = _parse_args(argv)

        t0 = time.perf_counter()
        vertices = read_vertices(files["vertices"])
        triangles = read_triangles(files["triangles"], vertices.shape[0])
        segments = read_segments(files["ray_from"], files["ray_to"])
        mesh = Mesh.from_arrays(vertices, triangles)
        read_s = time.perf_counter() - t0

        results = run_batch(mesh, segments, config)
        write_results(results, out_dir)

        if not silent:
            print(f"vertices : {mesh.num_vertices}")
            print(f"triangles: {mesh.num_triangles}")
            print(f"rays     : {segments.count}")
            print(f"crossing rays: {results.num_crossing()}")
            print(f"input read: {read_s * 1e3:.2f} ms")
            print("phase timings (ms):")
            for phase in _PHASE_ORDER:
                if phase in results.timings:
                    print(f"  {phase:<12} {results.timings[phase] * 1e3:9.2f}")
        return 0
    except RaysurfError as exc:
        for klass, code in _EXIT_CODES:
            if isinstance(exc, klass):
                print(f"raysurf: error: {exc}", file=sys.stderr)
                return code
        print(f"raysurf: internal error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover - defensive
        print(f"raysurf: internal error: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
