"""Delta-graph statistics and cluster extraction from converged states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import NeighborLists, StateVector, neighbor_lists
from .errors import InvalidInputError

__all__ = [
    "DeltaGraph",
    "ClusterLabels",
    "build_delta_graph",
    "ave_len",
    "cluster_order_parameter",
    "extract_clusters",
    "labels_from_array",
    "match_labels",
    "distinct_locations",
]


@dataclass
class DeltaGraph:
    """Undirected delta-neighbour graph; edge ``k`` joins ``src[k] < dst[k]``."""

    vertex_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.src, self.dst, self.weight)]

    def __len__(self) -> int:
        return len(self.weight)


@dataclass
class ClusterLabels:
    labels: np.ndarray
    centers: np.ndarray

    @property
    def k(self) -> int:
        return len(self.centers)

    @property
    def sizes(self) -> np.ndarray:
        """Members per cluster; negative (noise) labels are not counted."""
        lab = np.asarray(self.labels)
        return np.bincount(lab[lab >= 0], minlength=self.k)

    @property
    def noise_count(self) -> int:
        return int(np.count_nonzero(np.asarray(self.labels) < 0))


def _coords(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.coords
    return np.asarray(state, dtype=np.float64)


def build_delta_graph(state, delta: float, neighbors: NeighborLists | None = None) -> DeltaGraph:
    if not delta > 0:
        raise InvalidInputError(f"delta must be > 0, got {delta}")
    x = _coords(state)
    nb = neighbors if neighbors is not None else neighbor_lists(x, delta)
    rows = nb.row_ids()
    upper = nb.indices > rows
    return DeltaGraph(x.shape[0], rows[upper], nb.indices[upper], nb.distances[upper])


def ave_len(graph: DeltaGraph) -> float:
    """Mean edge weight; 0.0 for an edgeless graph."""
    if len(graph) == 0:
        return 0.0
    return float(np.mean(graph.weight))


def cluster_order_parameter(state, delta: float, neighbors: NeighborLists | None = None) -> float:
    """``(1/n) sum_i sum_{Y in delta(X_i)} exp(-dis(X_i, Y))``, unnormalised."""
    if not delta > 0:
        raise InvalidInputError(f"delta must be > 0, got {delta}")
    x = _coords(state)
    n = x.shape[0]
    if n == 0:
        return 0.0
    nb = neighbors if neighbors is not None else neighbor_lists(x, delta)
    return float(np.sum(np.exp(-nb.distances)) / n)


def distinct_locations(state) -> int:
    x = _coords(state)
    if x.shape[0] == 0:
        return 0
    return int(np.unique(x, axis=0).shape[0])


def labels_from_array(labels, coords: np.ndarray | None = None) -> ClusterLabels:
    """Relabel ``labels`` to 0..K-1 in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    out = rank[inverse.ravel()]
    k = len(first)
    if coords is None:
        centers = np.zeros((k, 0))
    else:
        coords = np.asarray(coords, dtype=np.float64)
        sizes = np.bincount(out, minlength=k).astype(np.float64)
        centers = np.stack(
            [np.bincount(out, weights=coords[:, j], minlength=k) / sizes
             for j in range(coords.shape[1])], axis=1)
    return ClusterLabels(out, centers)


def extract_clusters(state, epsilon: float) -> ClusterLabels:
    """Connected components of the graph joining points closer than ``epsilon``.

    Exact duplicates are collapsed first, then candidate pairs are found by a
    sweep over the first coordinate.
    """
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    x = _coords(state)
    n = x.shape[0]
    if n == 0:
        return ClusterLabels(np.zeros(0, dtype=np.int64), np.zeros((0, x.shape[1])))
    uniq, inverse = np.unique(x, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    u = uniq.shape[0]
    # np.unique sorts rows lexicographically, so column 0 is already ascending.
    xs = uniq[:, 0]
    hi = np.searchsorted(xs, xs + epsilon, side="left")
    counts = hi - np.arange(u) - 1
    counts = np.maximum(counts, 0)
    src = np.repeat(np.arange(u), counts)
    offsets = np.arange(len(src)) - np.repeat(np.cumsum(counts) - counts, counts)
    dst = src + 1 + offsets
    if len(src):
        d = np.sqrt(sum((uniq[src, k] - uniq[dst, k]) ** 2 for k in range(x.shape[1])))
        close = d < epsilon
        src, dst = src[close], dst[close]
    graph = coo_matrix((np.ones(len(src)), (src, dst)), shape=(u, u))
    _, comp = connected_components(graph, directed=False)
    return labels_from_array(comp[inverse], x)


def match_labels(a, b) -> bool:
    """True iff the two labelings describe the same set partition."""
    la = np.asarray(a.labels if isinstance(a, ClusterLabels) else a)
    lb = np.asarray(b.labels if isinstance(b, ClusterLabels) else b)
    if la.shape != lb.shape:
        raise InvalidInputError("label vectors have different lengths")
    if la.size == 0:
        return True
    pairs = np.unique(np.stack([la, lb], axis=1), axis=0)
    return len(pairs) == len(np.unique(la)) == len(np.unique(lb))
