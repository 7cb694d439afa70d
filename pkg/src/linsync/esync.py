"""The ESynC iteration loop and delta sweeps.

``esync_run`` applies one of the three update rules synchronously until the
mean delta-edge length of the new state drops to ``conv_tol`` or the
iteration cap is reached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .core import (
    ModelParams,
    NeighborLists,
    StateVector,
    ek_update,
    lv_update,
    neighbor_lists,
    ov_update,
)
from .errors import InvalidInputError
from .metrics import (
    ClusterLabels,
    ave_len,
    build_delta_graph,
    cluster_order_parameter,
    distinct_locations,
    extract_clusters,
)

LINEAR_VICSEK = "linear-vicsek"
EXTENSIVE_KURAMOTO = "extensive-kuramoto"
ORIGINAL_VICSEK = "original-vicsek"
MODELS = (LINEAR_VICSEK, EXTENSIVE_KURAMOTO, ORIGINAL_VICSEK)
MODEL_ALIASES = {"lv": LINEAR_VICSEK, "ek": EXTENSIVE_KURAMOTO, "ov": ORIGINAL_VICSEK}

NeighborFinder = Callable[[np.ndarray], NeighborLists]


def canonical_model(name: str) -> str:
    model = MODEL_ALIASES.get(name, name)
    if model not in MODELS:
        raise InvalidInputError(f"unknown model {name!r}; expected one of {MODELS}")
    return model


@dataclass
class RunOptions:
    model: str = LINEAR_VICSEK
    max_iters: int = 50
    conv_tol: float = 1e-6
    record_snapshots: bool = False
    epsilon_cluster: float = 1e-5

    def __post_init__(self):
        self.model = canonical_model(self.model)
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if not self.conv_tol > 0:
            raise InvalidInputError("conv_tol must be > 0")
        if not self.epsilon_cluster > 0:
            raise InvalidInputError("epsilon_cluster must be > 0")


@dataclass
class IterationStats:
    step: int
    ave_len: float
    r_c: float
    distinct_locations: int
    distance_evals: int


@dataclass
class RunReport:
    final_state: StateVector
    iterations: int
    per_iter: list[IterationStats]
    labels: ClusterLabels
    converged: bool
    degeneracy_flags: list[str] = field(default_factory=list)
    distance_evals: int = 0
    snapshots: list[np.ndarray] = field(default_factory=list)

    @property
    def cluster_count(self) -> int:
        return self.labels.k


def as_state(data) -> StateVector:
    if isinstance(data, StateVector):
        return data
    return StateVector(np.asarray(data, dtype=np.float64), 0)


def run_dynamics(data, params: ModelParams, opts: RunOptions,
                 finder: NeighborFinder | None = None) -> RunReport:
    """Shared loop behind :func:`esync_run` and the grid-backed variant.

    ``finder`` maps a coordinate array to its delta-neighbour lists; the
    default is the all-pairs scan.
    """
    state = as_state(data)
    if state.n < 1:
        raise InvalidInputError("need at least one point")
    delta = params.delta
    if finder is None:
        def finder(coords):
            return neighbor_lists(coords, delta)

    flags: list[str] = []
    if opts.model == LINEAR_VICSEK:
        step = lv_update
    elif opts.model == EXTENSIVE_KURAMOTO:
        step = ek_update
    else:
        def step(s, p, nb):
            return ov_update(s, p, nb, flags)

    nb = finder(state.coords)
    total_evals = nb.evaluations
    per_iter: list[IterationStats] = []
    snapshots = [state.coords.copy()] if opts.record_snapshots else []
    converged = False
    while state.step < opts.max_iters:
        state = step(state, params, nb)
        nb = finder(state.coords)
        total_evals += nb.evaluations
        length = ave_len(build_delta_graph(state, delta, nb))
        per_iter.append(IterationStats(
            step=state.step,
            ave_len=length,
            r_c=cluster_order_parameter(state, delta, nb),
            distinct_locations=distinct_locations(state),
            distance_evals=nb.evaluations,
        ))
        if opts.record_snapshots:
            snapshots.append(state.coords.copy())
        if length <= opts.conv_tol:
            converged = True
            break
    return RunReport(
        final_state=state,
        iterations=state.step,
        per_iter=per_iter,
        labels=extract_clusters(state, opts.epsilon_cluster),
        converged=converged,
        degeneracy_flags=flags,
        distance_evals=total_evals,
        snapshots=snapshots,
    )


def esync_run(data, params: ModelParams, opts: RunOptions | None = None) -> RunReport:
    """Run ESynC (or the Kuramoto / original Vicsek dynamics) to convergence or the cap."""
    return run_dynamics(data, params, opts or RunOptions())


class SweepPoint(NamedTuple):
    delta: float
    clusters: int
    iterations: int


def delta_sweep(data, deltas: Iterable[float], opts: RunOptions | None = None,
                runner: Callable[..., RunReport] | None = None) -> list[SweepPoint]:
    """One run per delta; returns the cluster count curve."""
    opts = opts or RunOptions()
    runner = runner or esync_run
    out = []
    for d in deltas:
        report = runner(data, ModelParams(float(d)), opts)
        out.append(SweepPoint(float(d), report.cluster_count, report.iterations))
    return out
