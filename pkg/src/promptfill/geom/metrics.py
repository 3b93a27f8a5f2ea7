"""Farthest point sampling and the five completion metrics.

All distance computations run through SpatialIndex; the exhaustive
module provides the independent oracle the tests compare against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud, as_points
from .kdtree import SpatialIndex


@dataclass(frozen=True)
class MetricsConfig:
    """Thresholds and reporting scales for MetricsReport rows."""

    fscore_threshold: float = 0.01
    cd_scale: float = 1e3
    tmd_scale: float = 1e2
    uhd_scale: float = 1e2
    mmd_scale: float = 1e3
    k_completions: int = 10

    def __post_init__(self):
        if self.fscore_threshold <= 0:
            raise ValueError("fscore threshold must be positive")
        for name in ("cd_scale", "tmd_scale", "uhd_scale", "mmd_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.k_completions < 2:
            raise ValueError("k_completions must be >= 2")


def fps(pc, m: int) -> np.ndarray:
    """Farthest point sampling: m distinct indices, deterministic.

    The first pick is the point farthest from the centroid; each later
    pick maximizes the minimum distance to the already-picked set. All
    ties resolve to the lowest index.
    """
    cloud = pc if isinstance(pc, PointCloud) else PointCloud(as_points(pc))
    pts = cloud.points
    n = pts.shape[0]
    if m < 1:
        raise ValueError("sample size must be >= 1")
    if m > n:
        raise ValueError("sample size exceeds cloud")
    centroid = cloud.centroid()
    d_seed = ((pts - centroid) ** 2).sum(axis=1)
    picked = np.empty(m, dtype=np.int64)
    picked[0] = int(np.argmax(d_seed))
    min_d2 = ((pts - pts[picked[0]]) ** 2).sum(axis=1)
    min_d2[picked[0]] = -1.0  # never re-pick
    for i in range(1, m):
        nxt = int(np.argmax(min_d2))
        picked[i] = nxt
        d_new = ((pts - pts[nxt]) ** 2).sum(axis=1)
        np.minimum(min_d2, d_new, out=min_d2)
        min_d2[nxt] = -1.0
    return picked


def knn(query, reference, k: int) -> np.ndarray:
    """Indices of each query point's k nearest reference points.

    ``reference`` may be a SpatialIndex or anything coercible to points.
    Neighbors come back in nondecreasing distance order, ties by lowest
    index, exactly as exhaustive search would produce.
    """
    index = reference if isinstance(reference, SpatialIndex) else SpatialIndex(reference)
    _, idx = index.query_knn(as_points(query), k)
    return idx


def chamfer_l2(p, q) -> float:
    """CD-L2: sum of the two directional means of squared NN distances."""
    pp, qq = as_points(p), as_points(q)
    dp, _ = SpatialIndex(qq).query_nearest(pp)
    dq, _ = SpatialIndex(pp).query_nearest(qq)
    return float(dp.mean() + dq.mean())


def fscore(pred, gt, d: float) -> tuple[float, float, float]:
    """(precision, recall, f1) at Euclidean distance threshold d."""
    if d <= 0:
        raise ValueError("threshold must be positive")
    pp, gg = as_points(pred), as_points(gt)
    dp, _ = SpatialIndex(gg).query_nearest(pp)
    dg, _ = SpatialIndex(pp).query_nearest(gg)
    precision = float((np.sqrt(dp) <= d).mean())
    recall = float((np.sqrt(dg) <= d).mean())
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def uhd(partial, completed) -> float:
    """Unidirectional Hausdorff from partial to completed (un-squared)."""
    dp, _ = SpatialIndex(as_points(completed)).query_nearest(as_points(partial))
    return float(np.sqrt(dp.max()))


def tmd(completions) -> float:
    """Total mutual difference of k completions (diversity).

    d_i averages chamfer_l2 from completion i to the other k-1; TMD is
    the sum of the d_i. Pair values are accumulated in sorted order so
    the result is exactly invariant to list permutation.
    """
    k = len(completions)
    if k < 2:
        raise ValueError("diversity undefined")
    clouds = [as_points(c) for c in completions]
    pair_cds = []
    for i in range(k):
        for j in range(i + 1, k):
            pair_cds.append(chamfer_l2(clouds[i], clouds[j]))
    total = float(np.sum(np.sort(pair_cds)))
    return 2.0 * total / (k - 1)


def mmd(completions, gt) -> float:
    """Minimal matching distance: best chamfer_l2 to the ground truth."""
    if len(completions) < 1:
        raise ValueError("need at least one completion")
    gt_pts = as_points(gt)
    return min(chamfer_l2(as_points(c), gt_pts) for c in completions)
