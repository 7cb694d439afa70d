"""Grid-cell spatial index for delta-neighbour queries, and IESynC on top of it.

Cells are half-open boxes ``[low, low + r)`` per dimension. Only occupied
cells are materialised; each keeps its member indices in a sorted set so
insertion and removal stay logarithmic while iteration is ascending.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sortedcontainers import SortedSet

from .core import ModelParams, NeighborLists, neighbor_lists_from_pairs, pair_distances
from .errors import GridCapExceeded, IndexCorruptionError, InvalidInputError
from .esync import LINEAR_VICSEK, RunOptions, RunReport, as_state, run_dynamics

__all__ = [
    "DEFAULT_CELL_CAP",
    "GridSpec",
    "GridCell",
    "Grid",
    "GridQuery",
    "build_grid",
    "grid_delta_neighbors",
    "relocate",
    "iesync_run",
]

DEFAULT_CELL_CAP = 2_000_000

# Relative slack on cell-pruning tests; only ever admits extra cells.
_PRUNE_SLACK = 1e-9


@dataclass(frozen=True)
class GridSpec:
    origin: np.ndarray
    cell_lengths: np.ndarray
    counts: np.ndarray
    cap: int = DEFAULT_CELL_CAP

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        object.__setattr__(self, "cell_lengths", np.asarray(self.cell_lengths, dtype=np.float64))
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))
        if not (self.origin.shape == self.cell_lengths.shape == self.counts.shape):
            raise InvalidInputError("origin, cell_lengths and counts must have the same length")
        if np.any(self.cell_lengths <= 0):
            raise InvalidInputError("every cell length must be > 0")
        if np.any(self.counts < 1):
            raise InvalidInputError("every per-dimension cell count must be >= 1")

    @classmethod
    def covering(cls, coords: np.ndarray, cell_lengths, cap: int = DEFAULT_CELL_CAP) -> "GridSpec":
        """Smallest grid anchored at the bounding-box minimum that covers ``coords``."""
        coords = np.asarray(coords, dtype=np.float64)
        d = coords.shape[1]
        r = np.broadcast_to(np.asarray(cell_lengths, dtype=np.float64), (d,)).copy()
        lo = coords.min(axis=0)
        hi = coords.max(axis=0)
        counts = np.floor((hi - lo) / r).astype(np.int64) + 1
        return cls(lo, r, counts, cap)

    @property
    def dim(self) -> int:
        return len(self.origin)

    @property
    def total_cells(self) -> int:
        return math.prod(int(c) for c in self.counts)

    def coordinates(self, coords: np.ndarray) -> np.ndarray:
        return np.floor((np.atleast_2d(coords) - self.origin) / self.cell_lengths).astype(np.int64)

    def coordinate_of(self, point) -> tuple[int, ...]:
        return tuple(int(c) for c in self.coordinates(np.asarray(point, dtype=np.float64))[0])

    def label_of(self, coordinate) -> int:
        label = 0
        for c, size in zip(coordinate, self.counts):
            label = label * int(size) + int(c)
        return label

    def center_of(self, coordinate) -> np.ndarray:
        return self.origin + (np.asarray(coordinate) + 0.5) * self.cell_lengths

    def range_of(self, coordinate) -> np.ndarray:
        low = self.origin + np.asarray(coordinate) * self.cell_lengths
        return np.stack([low, low + self.cell_lengths], axis=1)


@dataclass
class GridCell:
    label: int
    coordinate: tuple[int, ...]
    center: np.ndarray
    range: np.ndarray
    members: SortedSet = field(default_factory=SortedSet)

    @property
    def point_count(self) -> int:
        return len(self.members)


class GridQuery(NamedTuple):
    neighbors: set[int]
    cells_scanned: int
    evaluations: int


class Grid:
    """Occupied cells keyed by integer coordinate, plus each point's position."""

    def __init__(self, spec: GridSpec, positions: np.ndarray):
        self.spec = spec
        self.positions = np.array(positions, dtype=np.float64)
        self.cells: dict[tuple[int, ...], GridCell] = {}
        self._offsets: dict[float, list[tuple[int, ...]]] = {}
        for i, coord in enumerate(map(tuple, spec.coordinates(self.positions).tolist())):
            self._insert(i, coord)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def _insert(self, i: int, coord: tuple[int, ...]) -> None:
        cell = self.cells.get(coord)
        if cell is None:
            cell = GridCell(self.spec.label_of(coord), coord, self.spec.center_of(coord),
                            self.spec.range_of(coord))
            self.cells[coord] = cell
        cell.members.add(i)

    def _remove(self, i: int, coord: tuple[int, ...]) -> None:
        cell = self.cells.get(coord)
        if cell is None or i not in cell.members:
            raise IndexCorruptionError(f"point {i} is not a member of cell {coord}")
        cell.members.remove(i)
        if not cell.members:
            del self.cells[coord]

    def cell_of(self, i: int) -> GridCell:
        return self.cells[self.spec.coordinate_of(self.positions[i])]

    def total_points(self) -> int:
        return sum(c.point_count for c in self.cells.values())

    def offsets(self, delta: float) -> list[tuple[int, ...]]:
        """Cell offsets whose box can hold a point within ``delta`` of some point of the home cell."""
        if delta not in self._offsets:
            r = self.spec.cell_lengths
            reach = [int(math.ceil(delta / rk)) for rk in r]
            limit = delta * delta * (1 + _PRUNE_SLACK)
            keep = []
            for off in itertools.product(*(range(-k, k + 1) for k in reach)):
                gap = (np.maximum(np.abs(off) - 1, 0) * r)
                if float(np.dot(gap, gap)) <= limit:
                    keep.append(off)
            self._offsets[delta] = keep
        return self._offsets[delta]

    def query(self, i: int, delta: float) -> GridQuery:
        """Delta-neighbours of point ``i``, scanning only cells whose box lies within ``delta``."""
        p = self.positions[i]
        home = self.spec.coordinate_of(p)
        r = self.spec.cell_lengths
        reach = [int(math.ceil(delta / rk)) for rk in r]
        limit = delta * delta * (1 + _PRUNE_SLACK)
        found: set[int] = set()
        scanned = evals = 0
        for off in itertools.product(*(range(-k, k + 1) for k in reach)):
            coord = tuple(h + o for h, o in zip(home, off))
            low = self.spec.origin + np.asarray(coord) * r
            gap = np.maximum(np.maximum(low - p, p - (low + r)), 0.0)
            if float(np.dot(gap, gap)) > limit:
                continue
            scanned += 1
            cell = self.cells.get(coord)
            if cell is None:
                continue
            cand = np.fromiter((j for j in cell.members if j != i), dtype=np.int64)
            if cand.size == 0:
                continue
            evals += cand.size
            d = pair_distances(p[None, :], self.positions[cand])[0]
            found.update(int(j) for j in cand[d <= delta])
        return GridQuery(found, scanned, evals)

    def _candidate_cells(self, delta: float) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
        occupied = list(self.cells)
        offs = self.offsets(delta)
        if len(offs) <= len(occupied):
            return {c: [t for t in (tuple(a + b for a, b in zip(c, o)) for o in offs)
                        if t in self.cells] for c in occupied}
        # Fewer occupied cells than offsets: test occupied pairs directly.
        coords = np.array(occupied, dtype=np.int64)
        r = self.spec.cell_lengths
        limit = delta * delta * (1 + _PRUNE_SLACK)
        out = {}
        for c, row in zip(occupied, coords):
            gap = np.maximum(np.abs(coords - row) - 1, 0) * r
            ok = np.flatnonzero(np.einsum("ij,ij->i", gap, gap) <= limit)
            out[c] = [occupied[k] for k in ok]
        return out

    def neighbor_lists(self, delta: float) -> NeighborLists:
        """Delta-neighbour lists for every point, one cell block at a time."""
        rows, cols, dists = [], [], []
        evals = 0
        for coord, near in self._candidate_cells(delta).items():
            members = np.fromiter(self.cells[coord].members, dtype=np.int64)
            cand = np.sort(np.concatenate(
                [np.fromiter(self.cells[c].members, dtype=np.int64) for c in near]))
            block = pair_distances(self.positions[members], self.positions[cand])
            evals += members.size * cand.size - members.size
            r, c = np.nonzero(block <= delta)
            gi, gj = members[r], cand[c]
            keep = gi != gj
            rows.append(gi[keep])
            cols.append(gj[keep])
            dists.append(block[r[keep], c[keep]])
        if not rows:
            return neighbor_lists_from_pairs(self.n, [], [], [], 0)
        return neighbor_lists_from_pairs(self.n, np.concatenate(rows), np.concatenate(cols),
                                         np.concatenate(dists), evals)

    def relocate(self, i: int, old_pos, new_pos) -> bool:
        """Move point ``i``; returns True when its cell changed."""
        old = self.spec.coordinate_of(old_pos)
        cell = self.cells.get(old)
        if cell is None or i not in cell.members:
            raise IndexCorruptionError(f"point {i} not found in cell {old}")
        new = self.spec.coordinate_of(new_pos)
        self.positions[i] = new_pos
        if new == old:
            return False
        self._remove(i, old)
        self._insert(i, new)
        return True

    def move_all(self, new_positions: np.ndarray) -> int:
        """Relocate every point whose cell changed; returns how many moved cells."""
        old_cells = self.spec.coordinates(self.positions)
        new_cells = self.spec.coordinates(new_positions)
        moved = np.flatnonzero(np.any(old_cells != new_cells, axis=1))
        for i in moved:
            self._remove(int(i), tuple(old_cells[i].tolist()))
            self._insert(int(i), tuple(new_cells[i].tolist()))
        self.positions = np.array(new_positions, dtype=np.float64)
        return len(moved)


def build_grid(state, spec: GridSpec) -> Grid:
    """Assign every point to its cell; raises GridCapExceeded above ``spec.cap`` cells."""
    if spec.total_cells > spec.cap:
        raise GridCapExceeded(f"grid has {spec.total_cells} cells, cap is {spec.cap}")
    coords = as_state(state).coords
    if coords.shape[1] != spec.dim:
        raise InvalidInputError("grid dimension does not match the data")
    return Grid(spec, coords)


def grid_delta_neighbors(grid: Grid, state, i: int, delta: float) -> set[int]:
    """Same set as :func:`linsync.core.delta_neighbors`, found through the grid."""
    coords = as_state(state).coords
    if not np.array_equal(grid.positions[i], coords[i]):
        raise IndexCorruptionError(f"grid position of point {i} is stale")
    return grid.query(i, delta).neighbors


def relocate(grid: Grid, i: int, old_pos, new_pos) -> Grid:
    grid.relocate(i, np.asarray(old_pos, dtype=np.float64), np.asarray(new_pos, dtype=np.float64))
    return grid


def iesync_run(data, params: ModelParams, opts: RunOptions | None = None,
               spec: GridSpec | None = None, cell_lengths=None) -> RunReport:
    """ESynC with grid-accelerated neighbour search (linear Vicsek model only).

    Give either a full ``spec`` or ``cell_lengths`` (scalar or per dimension)
    for a grid covering the data. Falls back to the all-pairs scan when the
    grid would exceed its cell cap.
    """
    opts = opts or RunOptions()
    if opts.model != LINEAR_VICSEK:
        raise InvalidInputError("iesync_run supports the linear-vicsek model only")
    state = as_state(data)
    if spec is None:
        if cell_lengths is None:
            cell_lengths = params.delta
        spec = GridSpec.covering(state.coords, cell_lengths)
    try:
        grid = build_grid(state, spec)
    except GridCapExceeded as exc:
        report = run_dynamics(state, params, opts)
        report.degeneracy_flags.append(f"grid-fallback: {exc}")
        return report

    first = True

    def finder(coords: np.ndarray) -> NeighborLists:
        nonlocal first
        if not first:
            grid.move_all(coords)
        first = False
        return grid.neighbor_lists(params.delta)

    return run_dynamics(state, params, opts, finder)
