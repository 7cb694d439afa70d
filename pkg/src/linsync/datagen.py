"""Synthetic blob data sets and delta estimates from minimum spanning trees."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .core import StateVector, pair_distances
from .errors import InfeasibleSpecError, InvalidInputError
from .esync import as_state
from .metrics import ClusterLabels, labels_from_array

__all__ = [
    "GenSpec",
    "LabeledDataSet",
    "PRESETS",
    "preset",
    "generate_dataset",
    "mst_edge_weights",
    "DeltaBounds",
    "delta_bounds",
    "property1_interval",
]


@dataclass(frozen=True)
class GenSpec:
    num_clusters: int
    with_noise: bool
    semidiameter: float
    dim: int
    n: int = 400
    region: tuple[float, float] = (0.0, 600.0)
    noise_fraction: float = 0.1
    min_center_gap: float | None = None
    seed: int | None = 0
    profile: str = "gaussian"
    sigma_fraction: float = 0.125

    def __post_init__(self):
        if self.num_clusters < 1:
            raise InvalidInputError("num_clusters must be >= 1")
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")
        if self.dim < 1:
            raise InvalidInputError("dim must be >= 1")
        if not self.semidiameter > 0:
            raise InvalidInputError("semidiameter must be > 0")
        lo, hi = self.region
        if not hi - lo > 2 * self.semidiameter:
            raise InvalidInputError("region side must exceed twice the semidiameter")
        if not 0 <= self.noise_fraction < 1:
            raise InvalidInputError("noise_fraction must lie in [0, 1)")
        if self.profile not in ("gaussian", "uniform"):
            raise InvalidInputError("profile must be 'gaussian' or 'uniform'")
        if not 0 < self.sigma_fraction <= 1:
            raise InvalidInputError("sigma_fraction must lie in (0, 1]")

    @property
    def center_gap(self) -> float:
        if self.min_center_gap is not None:
            return self.min_center_gap
        return 2 * self.semidiameter + 40

    @property
    def noise_points(self) -> int:
        return int(np.floor(self.noise_fraction * self.n)) if self.with_noise else 0


# (clusters, noise, semidiameter, dimension) per preset.
_TABLE = {
    "ds1": (5, True, 40, 2),
    "ds2": (5, False, 50, 2),
    "ds3": (9, True, 30, 2),
    "ds4": (9, False, 40, 2),
    "ds5": (12, False, 30, 2),
    "ds6": (12, False, 30, 4),
    "ds7": (12, False, 30, 6),
    "ds8": (12, False, 30, 8),
    "ds9": (12, False, 30, 10),
    "ds10": (12, False, 30, 12),
    "ds11": (12, False, 30, 14),
    "ds12": (12, False, 30, 16),
}

PRESETS: dict[str, GenSpec] = {
    name: GenSpec(num_clusters=nc, with_noise=noise, semidiameter=cs, dim=d)
    for name, (nc, noise, cs, d) in _TABLE.items()
}


def preset(name: str, **overrides) -> GenSpec:
    key = name.lower()
    if key not in PRESETS:
        raise InvalidInputError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    return replace(PRESETS[key], **overrides)


@dataclass
class LabeledDataSet:
    points: StateVector
    truth: np.ndarray
    spec: GenSpec
    centers: np.ndarray

    @property
    def truth_labels(self) -> ClusterLabels:
        """Ground truth with every noise point as its own singleton cluster."""
        t = self.truth.copy()
        noise = np.flatnonzero(t < 0)
        t[noise] = t.max(initial=-1) + 1 + np.arange(len(noise))
        return labels_from_array(t, self.points.coords)


def _place_centers(spec: GenSpec, rng: np.random.Generator,
                   attempts: int = 2000, restarts: int = 200) -> np.ndarray:
    lo, hi = spec.region
    a, b = lo + spec.semidiameter, hi - spec.semidiameter
    gap = spec.center_gap
    for _ in range(restarts):
        centers = []
        for _ in range(spec.num_clusters):
            for _ in range(attempts):
                c = rng.uniform(a, b, spec.dim)
                if all(np.linalg.norm(c - o) >= gap for o in centers):
                    centers.append(c)
                    break
            else:
                break
        if len(centers) == spec.num_clusters:
            return np.array(centers)
    raise InfeasibleSpecError(
        f"could not place {spec.num_clusters} centres {gap} apart in {spec.region}^{spec.dim}")


def _uniform_ball(rng: np.random.Generator, count: int, dim: int, radius: float,
                  sigma_fraction: float = 0.0) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (radius * rng.random(count) ** (1.0 / dim))[:, None]


def _truncated_gaussian(rng: np.random.Generator, count: int, dim: int, radius: float,
                        sigma_fraction: float = 0.125) -> np.ndarray:
    # Rejection keeps every point inside the ball of the given radius.
    sigma = radius * sigma_fraction
    out = np.empty((0, dim))
    while len(out) < count:
        g = rng.standard_normal((count, dim)) * sigma
        out = np.concatenate([out, g[np.linalg.norm(g, axis=1) <= radius]])
    return out[:count]


_PROFILES = {"gaussian": _truncated_gaussian, "uniform": _uniform_ball}


def generate_dataset(spec: GenSpec) -> LabeledDataSet:
    """Blobs around well-separated centres plus optional uniform noise.

    With the default ``gaussian`` profile each blob is isotropic normal with
    standard deviation ``sigma_fraction * semidiameter``, truncated to the
    semidiameter ball; ``uniform`` fills the ball evenly instead.
    Rows are shuffled; ``truth`` holds the blob index per row, -1 for noise.
    """
    rng = np.random.default_rng(spec.seed)
    centers = _place_centers(spec, rng)
    k = spec.num_clusters
    n_noise = spec.noise_points
    n_clustered = spec.n - n_noise
    sizes = np.full(k, n_clustered // k)
    sizes[: n_clustered % k] += 1
    draw = _PROFILES[spec.profile]
    blocks, truth = [], []
    for label, (c, size) in enumerate(zip(centers, sizes)):
        blocks.append(c + draw(rng, int(size), spec.dim, spec.semidiameter, spec.sigma_fraction))
        truth.append(np.full(int(size), label))
    if n_noise:
        lo, hi = spec.region
        blocks.append(rng.uniform(lo, hi, (n_noise, spec.dim)))
        truth.append(np.full(n_noise, -1))
    pts = np.concatenate(blocks)
    lab = np.concatenate(truth)
    perm = rng.permutation(spec.n)
    return LabeledDataSet(StateVector(pts[perm]), lab[perm], spec, centers)


def mst_edge_weights(data) -> np.ndarray:
    """Ascending edge weights of a Euclidean minimum spanning tree (dense Prim)."""
    x = as_state(data).coords
    n = x.shape[0]
    if n < 2:
        raise InvalidInputError("an MST needs at least two points")
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    in_tree[0] = True
    best = pair_distances(x[:1], x)[0]
    best[0] = np.inf
    weights = np.empty(n - 1)
    for k in range(n - 1):
        j = int(np.argmin(np.where(in_tree, np.inf, best)))
        weights[k] = best[j]
        in_tree[j] = True
        best = np.minimum(best, pair_distances(x[j:j + 1], x)[0])
    return np.sort(weights)


def _max_pairwise(x: np.ndarray) -> float:
    out = 0.0
    step = max(1, 2_000_000 // max(len(x), 1))
    for s in range(0, len(x), step):
        out = max(out, float(pair_distances(x[s:s + step], x).max()))
    return out


class DeltaBounds(NamedTuple):
    delta_min: float
    e_max_mst: float
    max_pairwise: float
    degenerate: bool


def delta_bounds(data) -> DeltaBounds:
    """Delta range from the MST: [min edge, diameter] with the upper band from the max MST edge.

    ``degenerate`` is set when duplicate points make the lower bound zero.
    """
    x = as_state(data).coords
    w = mst_edge_weights(x)
    dmin = float(w[0])
    return DeltaBounds(dmin, float(w[-1]), _max_pairwise(x), dmin == 0.0)


def _min_cross_distance(a: np.ndarray, b: np.ndarray) -> float:
    out = np.inf
    step = max(1, 2_000_000 // max(len(b), 1))
    for s in range(0, len(a), step):
        out = min(out, float(pair_distances(a[s:s + step], b).min()))
    return out


def property1_interval(data: LabeledDataSet) -> tuple[float, float] | None:
    """Open interval of delta that separates the ground-truth clusters, or None.

    Lower end: the longest MST edge inside any cluster. Upper end: the
    smallest distance between points of different clusters (+inf with a
    single cluster). Noise points are ignored.
    """
    x = data.points.coords
    t = data.truth
    labels = [lab for lab in np.unique(t) if lab >= 0]
    groups = [x[t == lab] for lab in labels]
    lo = max((float(mst_edge_weights(g)[-1]) if len(g) > 1 else 0.0) for g in groups)
    hi = np.inf
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            hi = min(hi, _min_cross_distance(groups[i], groups[j]))
    if lo >= hi:
        return None
    return lo, float(hi)
