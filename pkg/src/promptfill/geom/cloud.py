"""Point cloud container, unit-sphere normalization and file I/O."""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np


def as_points(obj) -> np.ndarray:
    """Coerce a PointCloud or array-like into a float64 (n, 3) array."""
    if isinstance(obj, PointCloud):
        return obj.points
    pts = np.asarray(obj, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (n, 3) points, got shape {pts.shape}")
    return pts


@dataclass(frozen=True)
class PointCloud:
    """An ordered set of 3-D points in a normalized frame.

    Coordinates are stored as float64. Construction validates the two
    invariants every kernel relies on: at least one point, all finite.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"expected (n, 3) points, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("point cloud must contain at least one point")
        if not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def centroid(self) -> np.ndarray:
        # Column-wise sum in sorted order so the result is exactly
        # invariant to point permutation (needed for bit-level
        # reproducibility of FPS seeding).
        cols = np.sort(self.points, axis=0)
        return cols.sum(axis=0) / self.points.shape[0]


def normalize_unit_sphere(pc) -> tuple[PointCloud, np.ndarray, float]:
    """Center a cloud at its centroid and scale the max norm to 1.

    Returns (normalized cloud, center, scale) such that
    ``original = normalized * scale + center``. A degenerate cloud of
    identical points is centered with scale 1.
    """
    pc = PointCloud(as_points(pc))
    center = pc.centroid()
    shifted = pc.points - center
    scale = float(np.sqrt((shifted**2).sum(axis=1).max()))
    if scale <= 0.0:
        scale = 1.0
    return PointCloud(shifted / scale), center, scale


def save_xyz(path, pc) -> None:
    """Write a cloud as text, one ``x y z`` triple per line."""
    pts = as_points(pc)
    with open(path, "w") as f:
        for x, y, z in pts.tolist():
            f.write(f"{x!r} {y!r} {z!r}\n")


def load_xyz(path) -> PointCloud:
    pts = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) < 3:
                raise ValueError(f"{path}:{lineno}: expected 'x y z'")
            try:
                pts.append([float(v) for v in fields[:3]])
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: {e}") from None
    if not pts:
        raise ValueError(f"{path}: no points")
    return PointCloud(np.array(pts, dtype=np.float64))


def save_xyz_binary(path, pc) -> None:
    """Write a cloud as little-endian binary: u32 count, then n*3 f32."""
    pts = as_points(pc).astype("<f4")
    with open(path, "wb") as f:
        f.write(struct.pack("<I", pts.shape[0]))
        f.write(pts.tobytes())


def load_xyz_binary(path) -> PointCloud:
    with open(path, "rb") as f:
        header = f.read(4)
        if len(header) != 4:
            raise ValueError(f"{path}: truncated header")
        (n,) = struct.unpack("<I", header)
        raw = f.read(n * 12)
        if len(raw) != n * 12:
            raise ValueError(f"{path}: expected {n} points, file truncated")
    pts = np.frombuffer(raw, dtype="<f4").reshape(n, 3)
    return PointCloud(pts.astype(np.float64))
