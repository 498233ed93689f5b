"""Directed k-nearest-neighbour graph, rebuilt from scratch every step."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

# Above this swarm size the k-d tree is cheaper than the dense distance matrix.
KDTREE_MIN_N = 256


def _check_k(n: int, k: int, relaxed: bool) -> None:
    lo = 1 if relaxed else 2
    if not lo <= k <= n - 1:
        raise ValueError(f"k must lie in [{lo}, N-1] = [{lo}, {n - 1}], got {k}")


def knn(positions, k: int, *, relaxed: bool = False, method: str = "auto") -> np.ndarray:
    """Return an (N, k) int array; row ``i`` lists agent i's neighbours nearest first.

    Ordering is by squared Euclidean distance, ties broken by the lower id. The
    graph is directed: ``j in knn[i]`` says nothing about ``i in knn[j]``.
    ``relaxed`` admits k = 1, which the swarm itself never uses.
    """
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    _check_k(n, k, relaxed)
    if method == "auto":
        method = "kdtree" if n >= KDTREE_MIN_N else "dense"
    if method == "dense":
        return _knn_dense(pos, k)
    if method == "kdtree":
        return _knn_kdtree(pos, k)
    raise ValueError(f"unknown knn method {method!r}")


def squared_distances(pos: np.ndarray) -> np.ndarray:
    diff = pos[None, :, :] - pos[:, None, :]
    return diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1]


def _knn_dense(pos: np.ndarray, k: int) -> np.ndarray:
    d2 = squared_distances(pos)
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps equal distances in id order
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def _knn_kdtree(pos: np.ndarray, k: int) -> np.ndarray:
    tree = cKDTree(pos)
    dist, _ = tree.query(pos, k=k + 1)
    # Everything within the k-th neighbour distance is a candidate; the radius
    # is padded so ties and rounding inside the tree cannot drop one.
    radius = dist[:, k] * (1 + 1e-9) + 1e-12
    out = np.empty((len(pos), k), dtype=np.intp)
    for i, cand in enumerate(tree.query_ball_point(pos, radius)):
        cand = np.array([j for j in cand if j != i], dtype=np.intp)
        diff = pos[cand] - pos[i]
        d2 = diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1]
        order = np.lexsort((cand, d2))
        out[i] = cand[order[:k]]
    return out
