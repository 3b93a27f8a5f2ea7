"""O(n^2) reference implementations of the nearest-neighbor kernels.

These are the correctness oracles for SpatialIndex and for every metric
built on it. They stay deliberately independent of the tree code path.
"""
from __future__ import annotations

import numpy as np

from .cloud import as_points


def pairwise_sqdist(queries, reference) -> np.ndarray:
    q = as_points(queries)
    r = as_points(reference)
    return ((q[:, None, :] - r[None, :, :]) ** 2).sum(axis=2)


def nearest_exhaustive(queries, reference) -> tuple[np.ndarray, np.ndarray]:
    """(squared distance, index) of each query's nearest reference point."""
    d2 = pairwise_sqdist(queries, reference)
    idx = d2.argmin(axis=1)  # argmin returns first occurrence: lowest index
    return d2[np.arange(d2.shape[0]), idx], idx


def knn_exhaustive(queries, reference, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k nearest reference indices per query, ties broken by lowest index."""
    r = as_points(reference)
    if k > r.shape[0]:
        raise ValueError(f"k={k} exceeds reference size {r.shape[0]}")
    d2 = pairwise_sqdist(queries, r)
    # Stable sort keeps equal distances in index order.
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return np.take_along_axis(d2, order, axis=1), order


def chamfer_l2_exhaustive(p, q) -> float:
    dp, _ = nearest_exhaustive(p, q)
    dq, _ = nearest_exhaustive(q, p)
    return float(dp.mean() + dq.mean())


def fscore_exhaustive(pred, gt, d: float) -> tuple[float, float, float]:
    dp, _ = nearest_exhaustive(pred, gt)
    dg, _ = nearest_exhaustive(gt, pred)
    precision = float((np.sqrt(dp) <= d).mean())
    recall = float((np.sqrt(dg) <= d).mean())
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def uhd_exhaustive(partial, completed) -> float:
    dp, _ = nearest_exhaustive(partial, completed)
    return float(np.sqrt(dp.max()))
