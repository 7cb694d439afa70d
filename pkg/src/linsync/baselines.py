"""Reference clusterers: DBSCAN and Lloyd k-means."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import neighbor_lists, pair_distances
from .errors import InvalidInputError
from .esync import as_state
from .metrics import ClusterLabels

__all__ = ["DbscanParams", "dbscan", "KMeansLabels", "kmeans"]

NOISE = -1


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int = 4

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidInputError("eps must be > 0")
        if self.min_pts < 1:
            raise InvalidInputError("min_pts must be >= 1")


def _centers(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((0, x.shape[1]))
    keep = labels >= 0
    sizes = np.bincount(labels[keep], minlength=k).astype(np.float64)
    return np.stack([np.bincount(labels[keep], weights=x[keep, j], minlength=k) / sizes
                     for j in range(x.shape[1])], axis=1)


def dbscan(data, params: DbscanParams) -> ClusterLabels:
    """Classic DBSCAN; noise points get label -1.

    A point is a core point when its closed eps-ball (itself included)
    holds at least ``min_pts`` points. Clusters are grown from unvisited
    core points in ascending index order, breadth first, so border points
    go to the first cluster that reaches them.
    """
    x = as_state(data).coords
    n = x.shape[0]
    nb = neighbor_lists(x, params.eps)
    is_core = nb.degree + 1 >= params.min_pts
    labels = np.full(n, NOISE, dtype=np.int64)
    k = 0
    for seed in range(n):
        if labels[seed] != NOISE or not is_core[seed]:
            continue
        labels[seed] = k
        queue = deque([seed])
        while queue:
            p = queue.popleft()
            if not is_core[p]:
                continue
            for q in nb.neighbors(p):
                if labels[q] == NOISE:
                    labels[q] = k
                    queue.append(q)
        k += 1
    return ClusterLabels(labels, _centers(x, labels, k))


@dataclass
class KMeansLabels(ClusterLabels):
    costs: list[float] = field(default_factory=list)
    iterations: int = 0

    @property
    def cost(self) -> float:
        return self.costs[-1] if self.costs else float("nan")


def _assign(x: np.ndarray, centers: np.ndarray):
    d = pair_distances(x, centers) ** 2
    lab = np.argmin(d, axis=1)
    return lab, d[np.arange(len(x)), lab]


def _plus_plus_seeds(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new centre is drawn with probability proportional to D^2."""
    n = x.shape[0]
    picks = [int(rng.integers(n))]
    d2 = pair_distances(x, x[picks])[:, 0] ** 2
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # Every point already coincides with a centre; take any unused row.
            nxt = int(rng.choice(np.setdiff1d(np.arange(n), picks)))
        picks.append(nxt)
        d2 = np.minimum(d2, pair_distances(x, x[nxt:nxt + 1])[:, 0] ** 2)
    return x[picks].copy()


def kmeans(data, k: int, seed: int | None = 0, max_iters: int = 100) -> KMeansLabels:
    """Lloyd iterations from k-means++ seeds drawn with ``seed``.

    An emptied cluster is re-seeded with the point farthest from its
    current centre. ``costs`` records the within-cluster sum of squares
    after every assignment step.
    """
    x = as_state(data).coords
    n = x.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    centers = _plus_plus_seeds(x, k, rng)
    labels, sq = _assign(x, centers)
    costs = [float(sq.sum())]
    it = 0
    for it in range(1, max_iters + 1):
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = x[members].mean(axis=0)
            else:
                far = int(np.argmax(sq))
                centers[j] = x[far]
                labels[far] = j
                sq[far] = 0.0
        new_labels, sq = _assign(x, centers)
        costs.append(float(sq.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return KMeansLabels(labels, centers.copy(), costs, it)
