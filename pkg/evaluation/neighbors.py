"""
Pairs of points closer than a cutoff.

Two interchangeable back ends: a cKDTree spatial hash and O(n^2) brute force.
Both compute distances with the same expression and return pairs in the same
order, so sums over their output are bit-identical.
"""
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

METHODS = ("kdtree", "brute")
# query radius slack so the tree never misses a pair the exact filter keeps
QUERY_MARGIN = 1e-6


def pair_distances(coords: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    delta = coords[i] - coords[j]
    return np.sqrt(delta[:, 0] * delta[:, 0] + delta[:, 1] * delta[:, 1] + delta[:, 2] * delta[:, 2])


def neighbor_pairs(
    coords: np.ndarray, cutoff: float, method: str = "kdtree"
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    All pairs i < j with distance < cutoff, sorted by (i, j).

    Returns:
        Index arrays i, j and their distances
    """
    coords = np.asarray(coords, dtype=float).reshape(-1, 3)
    n = len(coords)
    if n < 2:
        empty = np.zeros(0, dtype=int)
        return empty, empty, np.zeros(0)

    if method == "kdtree":
        pairs = cKDTree(coords).query_pairs(cutoff + QUERY_MARGIN, output_type="ndarray")
        if len(pairs) == 0:
            empty = np.zeros(0, dtype=int)
            return empty, empty, np.zeros(0)
        i = np.minimum(pairs[:, 0], pairs[:, 1]).astype(int)
        j = np.maximum(pairs[:, 0], pairs[:, 1]).astype(int)
        order = np.lexsort((j, i))
        i, j = i[order], j[order]
    elif method == "brute":
        i, j = np.triu_indices(n, k=1)
    else:
        raise ValueError(f"unknown neighbour method {method!r}")

    dist = pair_distances(coords, i, j)
    keep = dist < cutoff
    return i[keep], j[keep], dist[keep]


def pair_codes(i: np.ndarray, j: np.ndarray, n: int) -> np.ndarray:
    """Encode index pairs (i < j) as single integers."""
    return np.asarray(i, dtype=np.int64) * n + np.asarray(j, dtype=np.int64)


def nonbonded_pairs(
    coords: np.ndarray,
    cutoff: float,
    excluded: Optional[np.ndarray] = None,
    method: str = "kdtree",
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    neighbor_pairs without the excluded pairs.

    Args:
        excluded: Pair codes (see pair_codes) of bonded pairs to skip
    """
    i, j, dist = neighbor_pairs(coords, cutoff, method)
    if excluded is not None and len(excluded) and len(i):
        keep = ~np.isin(pair_codes(i, j, len(coords)), excluded)
        i, j, dist = i[keep], j[keep], dist[keep]
    return i, j, dist
