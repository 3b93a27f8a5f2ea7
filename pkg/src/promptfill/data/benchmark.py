"""Completion benchmark construction: part removal and virtual scanning."""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass

import numpy as np

from ..geom import PointCloud, fps, normalize_unit_sphere
from .shapes import PartAnnotatedShape

_S_REMOVE, _S_CAMERA = 70, 80

SCAN_GRID = 64
SCAN_Z_EPSILON = 0.05
SCAN_RADIUS = 3.0
PARTIAL_SIZE = 2048

MODES = ("partnet", "partnet_scan")


@dataclass(frozen=True)
class BenchmarkInstance:
    shape_id: str
    partial: PointCloud
    gt_missing: PointCloud
    gt_prompt: str
    removed_part_type: str
    mode: str
    center: np.ndarray
    scale: float


def scan_from_direction(pc, direction) -> PointCloud:
    """Z-buffer visibility from an orthographic camera along ``direction``.

    The camera sits at SCAN_RADIUS * direction looking at the origin.
    Points project onto a SCAN_GRID^2 pixel grid; per pixel only points
    within SCAN_Z_EPSILON of the minimum depth survive. The output is a
    subset of the input points, in input order.
    """
    pts = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    up = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.99 else np.array([1.0, 0.0, 0.0])
    u = np.cross(up, d)
    u /= np.linalg.norm(u)
    v = np.cross(d, u)
    px = pts @ u
    py = pts @ v
    depth = SCAN_RADIUS - pts @ d
    half = max(np.abs(px).max(), np.abs(py).max(), 1.0) * 1.001
    ix = np.clip(((px + half) / (2 * half) * SCAN_GRID).astype(int), 0, SCAN_GRID - 1)
    iy = np.clip(((py + half) / (2 * half) * SCAN_GRID).astype(int), 0, SCAN_GRID - 1)
    pix = ix * SCAN_GRID + iy
    zbuf = np.full(SCAN_GRID * SCAN_GRID, np.inf)
    np.minimum.at(zbuf, pix, depth)
    keep = depth <= zbuf[pix] + SCAN_Z_EPSILON
    return PointCloud(pts[keep])


def virtual_scan(pc, camera_seed: int) -> PointCloud:
    """Scan from a seeded uniform camera direction on the view sphere."""
    rng = np.random.default_rng([camera_seed, _S_CAMERA])
    z = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2 * np.pi)
    r = np.sqrt(max(0.0, 1.0 - z * z))
    direction = np.array([r * np.cos(phi), r * np.sin(phi), z])
    return scan_from_direction(pc, direction)


def _gt_frame(union: np.ndarray):
    """Normalization frame of the complete shape; exact identity when
    the shape is already in the unit-sphere frame (keeps the subset
    invariants bit-exact for generated data)."""
    _, center, scale = normalize_unit_sphere(union)
    if np.abs(center).max() < 1e-6 and abs(scale - 1.0) < 1e-6:
        return np.zeros(3), 1.0
    return center, scale


def make_benchmark(
    shape: PartAnnotatedShape,
    seed: int,
    mode: str,
    *,
    partial_size: int = PARTIAL_SIZE,
    force_part_type: str | None = None,
) -> BenchmarkInstance:
    """Remove one (seeded-random) part and build the completion task."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if len(shape.parts) < 2:
        raise ValueError("nothing to remove")
    rng = np.random.default_rng([seed, _S_REMOVE, zlib.crc32(shape.shape_id.encode())])
    if force_part_type is None:
        removed_idx = int(rng.integers(len(shape.parts)))
    else:
        removed_idx = next(
            i for i, p in enumerate(shape.parts) if p.part_type == force_part_type
        )
    removed = shape.parts[removed_idx]
    rest = [p.cloud.points for i, p in enumerate(shape.parts) if i != removed_idx]
    union = np.concatenate(rest)

    center, scale = _gt_frame(np.concatenate([union, removed.cloud.points]))
    union_n = (union - center) / scale
    gt_missing = (removed.cloud.points - center) / scale

    if mode == "partnet_scan":
        visible = virtual_scan(union_n, seed).points
    else:
        visible = union_n
    if visible.shape[0] >= partial_size:
        partial = visible[fps(visible, partial_size)]
    else:
        reps = np.resize(np.arange(visible.shape[0]), partial_size)
        partial = visible[reps]

    return BenchmarkInstance(
        shape_id=shape.shape_id,
        partial=PointCloud(partial),
        gt_missing=PointCloud(gt_missing),
        gt_prompt=removed.prompt,
        removed_part_type=removed.part_type,
        mode=mode,
        center=center,
        scale=scale,
    )


def save_benchmark_jsonl(path, instances) -> None:
    with open(path, "w") as f:
        for inst in instances:
            rec = {
                "shape_id": inst.shape_id,
                "mode": inst.mode,
                "removed_part_type": inst.removed_part_type,
                "gt_prompt": inst.gt_prompt,
                "normalization": {"center": inst.center.tolist(), "scale": inst.scale},
                "partial": inst.partial.points.tolist(),
                "gt_missing": inst.gt_missing.points.tolist(),
            }
            f.write(json.dumps(rec) + "\n")


def load_benchmark_jsonl(path) -> list:
    instances = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: malformed JSON ({e.msg})") from None
            try:
                instances.append(
                    BenchmarkInstance(
                        shape_id=rec["shape_id"],
                        partial=PointCloud(np.asarray(rec["partial"], dtype=np.float64)),
                        gt_missing=PointCloud(np.asarray(rec["gt_missing"], dtype=np.float64)),
                        gt_prompt=rec["gt_prompt"],
                        removed_part_type=rec["removed_part_type"],
                        mode=rec["mode"],
                        center=np.asarray(rec["normalization"]["center"], dtype=np.float64),
                        scale=float(rec["normalization"]["scale"]),
                    )
                )
            except KeyError as e:
                raise ValueError(f"{path}:{lineno}: missing field {e}") from None
    return instances
