"""Axis-aligned splitting tree for exact nearest-neighbor queries.

Results are defined to match exhaustive search exactly: neighbors are
ordered by (squared distance, index) and ties always resolve to the
lowest reference index. The tree only accelerates the search; it never
changes the answer.
"""
from __future__ import annotations

import heapq

import numpy as np

from .cloud import as_points

_LEAF_SIZE = 16


class SpatialIndex:
    """Immutable k-d tree over a reference cloud."""

    def __init__(self, reference, leaf_size: int = _LEAF_SIZE):
        pts = as_points(reference)
        if not np.isfinite(pts).all():
            raise ValueError("reference cloud contains non-finite coordinates")
        self.points = pts
        self.n = pts.shape[0]
        self._leaf_size = max(1, leaf_size)
        # Flattened nodes: internal nodes carry (dim, split_val, left, right),
        # leaves carry (-1, 0.0, start, end) indexing into self._perm.
        self._dims: list[int] = []
        self._vals: list[float] = []
        self._lo: list[int] = []
        self._hi: list[int] = []
        self._perm = np.arange(self.n)
        self._build(0, self.n)
        self._leaf_pts = pts[self._perm]

    def _build(self, start: int, end: int) -> int:
        node = len(self._dims)
        self._dims.append(-1)
        self._vals.append(0.0)
        self._lo.append(start)
        self._hi.append(end)
        if end - start <= self._leaf_size:
            return node
        seg = self._perm[start:end]
        coords = self.points[seg]
        extents = coords.max(axis=0) - coords.min(axis=0)
        dim = int(np.argmax(extents))
        # Sort by (coordinate, original index) so the split is deterministic.
        order = np.lexsort((seg, coords[:, dim]))
        self._perm[start:end] = seg[order]
        mid = start + (end - start) // 2
        split_val = float(self.points[self._perm[mid], dim])
        self._dims[node] = dim
        self._vals[node] = split_val
        self._lo[node] = self._build(start, mid)
        self._hi[node] = self._build(mid, end)
        return node

    def query_nearest(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Nearest reference point per query: (squared distances, indices)."""
        qs = as_points(queries)
        m = qs.shape[0]
        out_d = np.empty(m, dtype=np.float64)
        out_i = np.empty(m, dtype=np.int64)
        dims, vals, los, his = self._dims, self._vals, self._lo, self._hi
        leaf_pts, perm = self._leaf_pts, self._perm
        for qi in range(m):
            q = qs[qi]
            best_d = np.inf
            best_i = -1
            stack = [(0, 0.0)]
            while stack:
                node, plane_d2 = stack.pop()
                if plane_d2 > best_d:
                    continue
                dim = dims[node]
                if dim < 0:
                    s, e = los[node], his[node]
                    dl = ((leaf_pts[s:e] - q) ** 2).sum(axis=1)
                    d2 = dl.min()
                    if d2 < best_d:
                        best_d = d2
                        best_i = int(perm[s:e][dl == d2].min())
                    elif d2 == best_d:
                        cand = int(perm[s:e][dl == d2].min())
                        if cand < best_i:
                            best_i = cand
                    continue
                delta = q[dim] - vals[node]
                off = delta * delta
                if off < plane_d2:
                    off = plane_d2
                if delta < 0.0:
                    stack.append((his[node], off))
                    stack.append((los[node], plane_d2))
                else:
                    stack.append((los[node], off))
                    stack.append((his[node], plane_d2))
            out_d[qi] = best_d
            out_i[qi] = best_i
        return out_d, out_i

    def query_knn(self, queries, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k nearest reference points per query, ordered by (distance, index)."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if k > self.n:
            raise ValueError(f"k={k} exceeds reference size {self.n}")
        qs = as_points(queries)
        m = qs.shape[0]
        out_d = np.empty((m, k), dtype=np.float64)
        out_i = np.empty((m, k), dtype=np.int64)
        dims, vals, los, his = self._dims, self._vals, self._lo, self._hi
        leaf_pts, perm = self._leaf_pts, self._perm
        for qi in range(m):
            q = qs[qi]
            # Max-heap of the current k best as (-d2, -idx); heap[0] is the
            # worst kept neighbor, the one a new candidate must beat.
            heap: list[tuple[float, int]] = []
            stack = [(0, 0.0)]
            while stack:
                node, plane_d2 = stack.pop()
                if len(heap) == k and plane_d2 > -heap[0][0]:
                    continue
                dim = dims[node]
                if dim < 0:
                    s, e = los[node], his[node]
                    dl = ((leaf_pts[s:e] - q) ** 2).sum(axis=1)
                    idxs = perm[s:e]
                    for d2, idx in zip(dl.tolist(), idxs.tolist()):
                        if len(heap) < k:
                            heapq.heappush(heap, (-d2, -idx))
                        elif (d2, idx) < (-heap[0][0], -heap[0][1]):
                            heapq.heapreplace(heap, (-d2, -idx))
                    continue
                delta = q[dim] - vals[node]
                off = delta * delta
                if off < plane_d2:
                    off = plane_d2
                if delta < 0.0:
                    stack.append((his[node], off))
                    stack.append((los[node], plane_d2))
                else:
                    stack.append((los[node], off))
                    stack.append((his[node], plane_d2))
            found = sorted((-nd, -ni) for nd, ni in heap)
            out_d[qi] = [d2 for d2, _ in found]
            out_i[qi] = [idx for _, idx in found]
        return out_d, out_i
