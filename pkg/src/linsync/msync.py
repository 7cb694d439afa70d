"""Multi-level synchronisation clustering.

The data are split at random into ``m`` subsections, each is clustered with
SSynC on its own, the root cores of all subsections are pooled, and the pool
is clustered once more with inherited weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .esync import as_state
from .metrics import ClusterLabels
from .ssync import SSyncReport, ssync_run

__all__ = [
    "PartitionPlan",
    "CollectedCores",
    "MSyncReport",
    "partition_random",
    "collect_root_cores",
    "msync_run",
]


@dataclass(frozen=True)
class PartitionPlan:
    m: int
    assignment: np.ndarray
    seed: int | None

    def subsections(self) -> list[np.ndarray]:
        """Point indices of each subsection, ascending."""
        return [np.flatnonzero(self.assignment == s) for s in range(self.m)]


def partition_random(n: int, m: int, seed: int | None = None) -> PartitionPlan:
    """Shuffle the points and deal them into ``m`` near-equal subsections."""
    if not 1 <= m <= n:
        raise InvalidInputError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    for s, block in enumerate(np.array_split(perm, m)):
        assignment[block] = s
    return PartitionPlan(m, assignment, seed)


@dataclass
class CollectedCores:
    """Root cores pooled from several SSynC runs.

    ``source_ids`` are the original point indices of the roots, and
    ``owner`` maps every original point to its row in this pool.
    """

    locations: np.ndarray
    counts: np.ndarray
    source_ids: np.ndarray
    owner: np.ndarray

    def __len__(self) -> int:
        return len(self.counts)


def collect_root_cores(reports: list[SSyncReport],
                       point_ids: list[np.ndarray] | None = None) -> CollectedCores:
    """Pool the root cores of ``reports``, ordered by original point index.

    ``point_ids[s]`` lists the original indices of the points given to
    report ``s``; by default the reports are taken to cover consecutive
    index ranges.
    """
    if point_ids is None:
        point_ids, start = [], 0
        for rep in reports:
            point_ids.append(np.arange(start, start + rep.n))
            start += rep.n
    total = sum(len(ids) for ids in point_ids)
    src, locs, cnts = [], [], []
    local_root_source = []
    for rep, ids in zip(reports, point_ids):
        roots = np.asarray(rep.roots, dtype=np.int64)
        src.append(ids[roots])
        locs.append(rep.locations[roots])
        cnts.append(rep.counts[roots])
        local_root_source.append(ids[rep.parents])
    source_ids = np.concatenate(src) if src else np.zeros(0, dtype=np.int64)
    order = np.argsort(source_ids, kind="stable")
    source_ids = source_ids[order]
    locations = np.concatenate(locs)[order]
    counts = np.concatenate(cnts)[order]
    row_of_source = {int(s): k for k, s in enumerate(source_ids)}
    owner = np.empty(total, dtype=np.int64)
    for ids, root_src in zip(point_ids, local_root_source):
        owner[ids] = [row_of_source[int(s)] for s in root_src]
    return CollectedCores(locations, counts, source_ids, owner)


@dataclass
class MSyncReport:
    """Outcome of a multi-level run.

    ``report`` is the SSynC report over the collected core set (for ``m=1``
    it is the single-level report itself). ``labels`` partitions the original
    points by final root.
    """

    report: SSyncReport
    plan: PartitionPlan
    subsection_reports: list[SSyncReport]
    collected: CollectedCores | None
    labels: ClusterLabels

    @property
    def subsection_root_counts(self) -> list[int]:
        return [len(r.roots) for r in self.subsection_reports]

    @property
    def active_counts(self) -> list[int]:
        return self.report.active_counts

    @property
    def roots(self) -> list[int]:
        return self.report.roots

    @property
    def distance_evals(self) -> int:
        level1 = sum(r.distance_evals for r in self.subsection_reports)
        if self.collected is None:
            return level1
        return level1 + self.report.distance_evals


def msync_run(data, delta: float, m: int, epsilon: float, seed: int | None = None,
              max_iters: int = 50) -> MSyncReport:
    coords = as_state(data).coords
    n = coords.shape[0]
    plan = partition_random(n, m, seed)
    parts = plan.subsections()
    # Subsections are processed one after another.
    sub_reports = [ssync_run(coords[ids], delta, epsilon, max_iters) for ids in parts]
    if m == 1:
        only = sub_reports[0]
        return MSyncReport(only, plan, sub_reports, None, only.labels())

    pool = collect_root_cores(sub_reports, parts)
    top = ssync_run(pool.locations, delta, epsilon, max_iters, counts=pool.counts)
    top_labels = top.labels()
    point_labels = top_labels.labels[pool.owner]
    # Renumber by first appearance over the original points.
    _, first, inverse = np.unique(point_labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    order = np.argsort(first, kind="stable")
    rank[order] = np.arange(len(first))
    centers = top_labels.centers[point_labels[first[order]]]
    labels = ClusterLabels(rank[inverse.ravel()], centers)
    return MSyncReport(top, plan, sub_reports, pool, labels)
