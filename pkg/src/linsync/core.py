"""Point state, delta-neighbourhoods and the per-step synchronisation rules.

Every update rule is synchronous: new positions are computed from the
step-``t`` coordinates only, then returned as a fresh :class:`StateVector`.
Neighbour sums are accumulated in ascending point-index order so that two
code paths that discover the same neighbour sets (naive scan, grid scan)
produce bit-identical positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "PointState",
    "StateVector",
    "ModelParams",
    "NeighborLists",
    "euclidean_dis",
    "pair_distances",
    "delta_neighbors",
    "neighbor_lists",
    "neighbor_lists_from_pairs",
    "lv_update",
    "ek_update",
    "ov_update",
    "weighted_core_update",
    "closed_sums",
    "closed_mean",
]

# Upper bound on distance-matrix elements held by one block of the naive scan.
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class PointState:
    coords: np.ndarray
    index: int

    @property
    def dim(self) -> int:
        return int(self.coords.shape[0])


@dataclass
class StateVector:
    """Positions of all ``n`` points at step ``step``; ``coords`` has shape (n, d)."""

    coords: np.ndarray
    step: int = 0

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        if coords.ndim != 2:
            raise InvalidInputError(f"coords must be 2-D, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise InvalidInputError("coords contain non-finite values")
        self.coords = coords

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def point(self, i: int) -> PointState:
        return PointState(self.coords[i].copy(), int(i))

    @property
    def points(self) -> list[PointState]:
        return [self.point(i) for i in range(self.n)]

    def advanced(self, coords: np.ndarray) -> "StateVector":
        """Return the successor state holding ``coords`` at ``step + 1``."""
        return StateVector(coords, self.step + 1)

    def copy(self) -> "StateVector":
        return StateVector(self.coords.copy(), self.step)


@dataclass(frozen=True)
class ModelParams:
    delta: float
    v_dt: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidInputError(f"delta must be > 0, got {self.delta}")
        if not self.v_dt > 0:
            raise InvalidInputError(f"v_dt must be > 0, got {self.v_dt}")


@dataclass
class NeighborLists:
    """Open delta-neighbourhoods of every point in CSR layout.

    Row ``i`` lists ``indices[indptr[i]:indptr[i+1]]`` in ascending order and
    never contains ``i`` itself. ``evaluations`` counts the point-pair
    distance computations spent building the lists.
    """

    indptr: np.ndarray
    indices: np.ndarray
    distances: np.ndarray
    evaluations: int = 0
    _row_ids: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def row_ids(self) -> np.ndarray:
        if self._row_ids is None:
            self._row_ids = np.repeat(np.arange(self.n), self.degree)
        return self._row_ids

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2


def _as_vector(p) -> np.ndarray:
    if isinstance(p, PointState):
        return p.coords
    return np.asarray(p, dtype=np.float64).ravel()


def pair_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distances between rows of ``a`` (p, d) and rows of ``b`` (q, d).

    Squared differences are accumulated one dimension at a time so the value
    for a given pair never depends on the shape of the batch it came from.
    """
    sq = np.zeros((a.shape[0], b.shape[0]))
    for k in range(a.shape[1]):
        diff = a[:, k, None] - b[None, :, k]
        sq += diff * diff
    return np.sqrt(sq)


def euclidean_dis(a, b) -> float:
    va, vb = _as_vector(a), _as_vector(b)
    if va.shape != vb.shape:
        raise InvalidInputError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    return float(pair_distances(va[None, :], vb[None, :])[0, 0])


def delta_neighbors(state: StateVector, i: int, delta: float) -> set[int]:
    """Indices ``j != i`` with ``dis(X_j, X_i) <= delta``."""
    if not 0 <= i < state.n:
        raise IndexError(f"point index {i} out of range [0, {state.n})")
    d = pair_distances(state.coords[i:i + 1], state.coords)[0]
    hits = np.flatnonzero(d <= delta)
    return {int(j) for j in hits if j != i}


def neighbor_lists_from_pairs(n: int, rows, cols, dists, evaluations: int) -> NeighborLists:
    """Assemble CSR neighbour lists from unordered (row, col, dist) triplets."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    dists = np.asarray(dists, dtype=np.float64)
    order = np.lexsort((cols, rows))
    rows, cols, dists = rows[order], cols[order], dists[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return NeighborLists(indptr, cols, dists, int(evaluations), rows)


def neighbor_lists(coords: np.ndarray, delta: float) -> NeighborLists:
    """All-pairs delta-neighbour scan. Costs n(n-1) distance evaluations."""
    n = coords.shape[0]
    chunk = max(1, _CHUNK_ELEMENTS // max(n, 1))
    rows, cols, dists = [], [], []
    for start in range(0, n, chunk):
        block = pair_distances(coords[start:start + chunk], coords)
        r, c = np.nonzero(block <= delta)
        r = r + start
        keep = r != c
        rows.append(r[keep])
        cols.append(c[keep])
        dists.append(block[r[keep] - start, c[keep]])
    if n == 0:
        return NeighborLists(np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64),
                             np.zeros(0), 0)
    return neighbor_lists_from_pairs(
        n, np.concatenate(rows), np.concatenate(cols), np.concatenate(dists), n * (n - 1)
    )


def closed_sums(coords: np.ndarray, nb: NeighborLists, weights: np.ndarray | None = None):
    """Per-point sums over the closed neighbourhood, ascending index order.

    Returns (numerator (n, d), denominator (n,)). With ``weights`` each term
    is ``w_j * x_j`` and the denominator is ``sum w_j``; otherwise it is the
    closed-neighbourhood size.
    """
    n, d = coords.shape
    self_ids = np.arange(n)
    rows = np.concatenate([nb.row_ids(), self_ids])
    cols = np.concatenate([nb.indices, self_ids])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    num = np.empty_like(coords)
    if weights is None:
        for k in range(d):
            num[:, k] = np.bincount(rows, weights=coords[cols, k], minlength=n)
        den = (nb.degree + 1).astype(np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64)[cols]
        for k in range(d):
            num[:, k] = np.bincount(rows, weights=w * coords[cols, k], minlength=n)
        den = np.bincount(rows, weights=w, minlength=n)
    return num, den


def closed_mean(coords: np.ndarray, nb: NeighborLists, weights: np.ndarray | None = None) -> np.ndarray:
    """Closed-ball mean from :func:`closed_sums`, exact at coincident balls.

    ``k * x / k`` can round away from ``x``; a point whose whole closed ball
    sits at its own location keeps its coordinates bit for bit.
    """
    num, den = closed_sums(coords, nb, weights)
    out = num / den[:, None]
    rows, cols = nb.row_ids(), nb.indices
    differs = np.any(coords[cols] != coords[rows], axis=1)
    moving = np.bincount(rows, weights=differs, minlength=coords.shape[0]) > 0
    out[~moving] = coords[~moving]
    return out


def _resolve(state: StateVector, delta: float, neighbors: NeighborLists | None) -> NeighborLists:
    if neighbors is None:
        return neighbor_lists(state.coords, delta)
    if neighbors.n != state.n:
        raise InvalidInputError("neighbour lists do not match the state size")
    return neighbors


def lv_update(state: StateVector, params: ModelParams,
              neighbors: NeighborLists | None = None) -> StateVector:
    """Linearised Vicsek step: each point moves to the mean of its closed delta-ball."""
    nb = _resolve(state, params.delta, neighbors)
    return state.advanced(closed_mean(state.coords, nb))


def ek_update(state: StateVector, params: ModelParams,
              neighbors: NeighborLists | None = None) -> StateVector:
    """Extensive Kuramoto step, per dimension ``x += mean(sin(y - x))``.

    Points without neighbours stay where they are.
    """
    nb = _resolve(state, params.delta, neighbors)
    x = state.coords
    n, d = x.shape
    rows, cols = nb.row_ids(), nb.indices
    deg = nb.degree
    new = x.copy()
    has = deg > 0
    for k in range(d):
        s = np.bincount(rows, weights=np.sin(x[cols, k] - x[rows, k]), minlength=n)
        new[has, k] = x[has, k] + s[has] / deg[has]
    return state.advanced(new)


def ov_update(state: StateVector, params: ModelParams,
              neighbors: NeighborLists | None = None,
              flags: list[str] | None = None) -> StateVector:
    """Original Vicsek step: move ``v_dt`` along the unit vector of ``X + sum(Y)``.

    A zero direction vector leaves the point in place; when ``flags`` is
    given, one message per such point is appended to it.
    """
    nb = _resolve(state, params.delta, neighbors)
    direction, _ = closed_sums(state.coords, nb)
    norm = np.sqrt(np.sum(direction * direction, axis=1))
    new = state.coords.copy()
    ok = norm > 0
    new[ok] += params.v_dt * direction[ok] / norm[ok, None]
    if flags is not None:
        for i in np.flatnonzero(~ok):
            flags.append(f"zero-direction step={state.step} point={int(i)}")
    return state.advanced(new)


def weighted_core_update(locations: np.ndarray, counts: Sequence[int], delta: float,
                         neighbors: NeighborLists | None = None) -> np.ndarray:
    """Count-weighted averaging of core locations over closed delta-balls.

    With all counts equal to one this is bit-for-bit :func:`lv_update`.
    """
    locations = np.asarray(locations, dtype=np.float64)
    counts = np.asarray(counts)
    if np.any(counts < 1):
        raise InvalidInputError("every core count must be >= 1")
    nb = neighbors if neighbors is not None else neighbor_lists(locations, delta)
    return closed_mean(locations, nb, counts)
