"""Shrinking synchronisation clustering over weighted cores.

Every point starts as an active core of weight one. Each iteration moves the
active cores by count-weighted averaging over their delta-balls, then lets
each surviving core absorb the still-unabsorbed actives lying closer than
``epsilon``. Absorbed cores leave the active set, so later iterations work on
ever fewer cores.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import NeighborLists, closed_mean, neighbor_lists, pair_distances
from .errors import IndexCorruptionError, InvalidInputError
from .esync import as_state
from .metrics import ClusterLabels

__all__ = [
    "Core",
    "CoreKind",
    "SSyncReport",
    "ssync_run",
    "find_root",
    "compress_paths",
    "classify_core",
    "active_counts",
]


@dataclass
class Core:
    core_id: int
    location: np.ndarray
    parent_core_id: int
    containing_points: int
    active: bool = True


class CoreKind(str, enum.Enum):
    ISOLATE = "isolate"
    CLUSTER_ROOT = "cluster-root"
    ABSORBED = "absorbed"


@dataclass
class SSyncReport:
    """Final core forest plus the per-iteration bookkeeping.

    ``active_counts[0]`` is the initial core count; entry ``t`` is the count
    after iteration ``t``. ``root_mass`` tracks the summed weight of active
    cores at the same instants.
    """

    locations: np.ndarray
    parents: np.ndarray
    counts: np.ndarray
    active: np.ndarray
    active_counts: list[int]
    root_mass: list[int]
    iterations: int
    converged: bool
    distance_evals: int = 0
    per_iter_evals: list[int] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.parents)

    @property
    def cores(self) -> list[Core]:
        return [Core(i, self.locations[i].copy(), int(self.parents[i]), int(self.counts[i]),
                     bool(self.active[i])) for i in range(self.n)]

    @property
    def roots(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.parents == np.arange(self.n))]

    def labels(self) -> ClusterLabels:
        """Partition of the original cores by final root, numbered by first appearance."""
        root_of = compress_paths(self.parents.copy())
        _, first, inverse = np.unique(root_of, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        order = np.argsort(first, kind="stable")
        rank[order] = np.arange(len(first))
        roots_in_order = root_of[first[order]]
        return ClusterLabels(rank[inverse.ravel()], self.locations[roots_in_order].copy())


def find_root(parents, core_id: int) -> int:
    """Follow parent pointers to the root, compressing the path in place."""
    n = len(parents)
    path = []
    node = int(core_id)
    while int(parents[node]) != node:
        path.append(node)
        node = int(parents[node])
        if len(path) > n:
            raise IndexCorruptionError(f"cycle in parent pointers reached from core {core_id}")
    for p in path:
        parents[p] = node
    return node


def compress_paths(parents: np.ndarray) -> np.ndarray:
    """Point every core directly at its root (vectorised pointer jumping)."""
    parents = np.asarray(parents)
    rounds = max(1, int(np.ceil(np.log2(max(len(parents), 2)))) + 1)
    for _ in range(rounds + 1):
        nxt = parents[parents]
        if np.array_equal(nxt, parents):
            return parents
        parents[:] = nxt
    raise IndexCorruptionError("parent pointers contain a cycle")


def classify_core(core: Core) -> CoreKind:
    if core.parent_core_id != core.core_id:
        return CoreKind.ABSORBED
    if core.containing_points == 1:
        return CoreKind.ISOLATE
    return CoreKind.CLUSTER_ROOT


def active_counts(report: SSyncReport) -> list[int]:
    return list(report.active_counts)


def _absorb_close(x: np.ndarray, ids: np.ndarray, epsilon: float,
                  parents: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, int]:
    """One absorption pass over active cores in ascending id order.

    ``x`` holds the renewed locations of the cores ``ids``. Returns a mask of
    cores absorbed in this pass and the number of distance evaluations.
    Candidates are narrowed by a sweep over the first coordinate.
    """
    m = len(ids)
    order = np.lexsort((np.arange(m), x[:, 0]))
    xs = x[order, 0]
    lo = np.searchsorted(xs, xs - epsilon, side="right")
    hi = np.searchsorted(xs, xs + epsilon, side="left")
    where = np.empty(m, dtype=np.int64)
    where[order] = np.arange(m)
    absorbed = np.zeros(m, dtype=bool)
    evals = 0
    crowded = np.flatnonzero(hi[where] - lo[where] > 1)
    for p in crowded:
        if absorbed[p]:
            continue
        s = where[p]
        window = order[lo[s]:hi[s]]
        cand = window[(window != p) & ~absorbed[window]]
        if cand.size == 0:
            continue
        evals += cand.size
        d = pair_distances(x[p:p + 1], x[cand])[0]
        hit = cand[d < epsilon]
        if hit.size:
            absorbed[hit] = True
            parents[ids[hit]] = ids[p]
            counts[ids[p]] += counts[ids[hit]].sum()
    return absorbed, evals


def ssync_run(data, delta: float, epsilon: float, max_iters: int = 50, *,
              counts=None, finder=None) -> SSyncReport:
    """Run SSynC on ``data`` (one core per row).

    ``counts`` gives initial core weights (default all ones), which is how
    the multi-level driver feeds in collected root cores. ``finder`` may
    replace the all-pairs delta-neighbour scan; it receives the active
    locations and returns :class:`NeighborLists` over them.

    The loop stops once an iteration leaves the active count unchanged and
    the active cores have no delta-neighbours left, i.e. at a fixed point of
    the weighted update, or after ``max_iters`` iterations.
    """
    if not delta > 0:
        raise InvalidInputError(f"delta must be > 0, got {delta}")
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    if max_iters < 1:
        raise InvalidInputError("max_iters must be >= 1")
    loc = as_state(data).coords.copy()
    n = loc.shape[0]
    if n < 1:
        raise InvalidInputError("need at least one point")
    cnt = np.ones(n, dtype=np.int64) if counts is None else np.array(counts, dtype=np.int64)
    if cnt.shape != (n,) or np.any(cnt < 1):
        raise InvalidInputError("counts must be one integer >= 1 per core")
    if finder is None:
        def finder(coords) -> NeighborLists:
            return neighbor_lists(coords, delta)

    parents = np.arange(n)
    act = np.arange(n)
    active_series = [n]
    mass = [int(cnt.sum())]
    per_iter_evals: list[int] = []
    converged = False
    t = 0
    while t < max_iters:
        x = loc[act]
        nb = finder(x)
        renewed = closed_mean(x, nb, cnt[act])
        loc[act] = renewed
        absorbed, merge_evals = _absorb_close(renewed, act, epsilon, parents, cnt)
        act = act[~absorbed]
        t += 1
        per_iter_evals.append(nb.evaluations + merge_evals)
        active_series.append(len(act))
        mass.append(int(cnt[act].sum()))
        if active_series[-1] == active_series[-2] and len(nb.indices) == 0:
            converged = True
            break

    compress_paths(parents)
    active = np.zeros(n, dtype=bool)
    active[act] = True
    return SSyncReport(
        locations=loc,
        parents=parents,
        counts=cnt,
        active=active,
        active_counts=active_series,
        root_mass=mass,
        iterations=t,
        converged=converged,
        distance_evals=int(sum(per_iter_evals)),
        per_iter_evals=per_iter_evals,
    )
