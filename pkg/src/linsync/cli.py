"""Command line: ``linsync gen | run | sweep | bench | compare``."""

from __future__ import annotations

import argparse
import csv
import itertools
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as sio
from .baselines import DbscanParams, dbscan, kmeans
from .core import ModelParams
from .datagen import GenSpec, generate_dataset, preset
from .errors import InfeasibleSpecError, InvalidInputError, SyncError
from .esync import LINEAR_VICSEK, RunOptions, canonical_model, esync_run
from .grid import iesync_run
from .metrics import ClusterLabels, match_labels
from .msync import msync_run
from .ssync import ssync_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4

ALGOS = ("esync", "iesync", "ssync", "msync", "dbscan", "kmeans")
SYNC_ALGOS = ("esync", "iesync", "ssync", "msync")


def sync_threads(env=None) -> int:
    """Parallelism cap from ``SYNC_THREADS``; 0 (the default) means sequential.

    The engines run sequentially whatever the value, so it is validated and
    recorded but not otherwise used.
    """
    raw = (env if env is not None else os.environ).get("SYNC_THREADS", "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInputError(f"SYNC_THREADS must be a non-negative integer, got {raw!r}") from None
    if value < 0:
        raise InvalidInputError(f"SYNC_THREADS must be a non-negative integer, got {raw!r}")
    return value


def _parse_grid_r(text: str | None):
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidInputError(f"bad --grid-r {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise InvalidInputError("--grid-r values must be > 0")
    return vals[0] if len(vals) == 1 else vals


@dataclass
class RunConfig:
    algo: str
    model: str = "lv"
    delta: float | None = None
    epsilon: float = 1e-5
    grid_r: float | list[float] | None = None
    m: int | None = None
    k: int | None = None
    min_pts: int = 4
    max_iters: int = 50
    seed: int | None = 0
    snapshots: bool = False

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise InvalidInputError(f"unknown algo {self.algo!r}")
        self.model = canonical_model(self.model)
        if self.algo in SYNC_ALGOS + ("dbscan",):
            if self.delta is None or not self.delta > 0:
                raise InvalidInputError(f"--delta > 0 is required for {self.algo}")
        if not self.epsilon > 0:
            raise InvalidInputError("--epsilon must be > 0")
        if self.max_iters < 1:
            raise InvalidInputError("--max-iters must be >= 1")
        if self.algo == "iesync":
            if self.grid_r is None:
                raise InvalidInputError("iesync needs --grid-r")
            if self.model != LINEAR_VICSEK:
                raise InvalidInputError("iesync supports --model lv only")
        if self.algo in ("ssync", "msync") and self.model != LINEAR_VICSEK:
            raise InvalidInputError(f"{self.algo} uses the weighted linear rule; --model must be lv")
        if self.algo == "msync" and (self.m is None or self.m < 1):
            raise InvalidInputError("msync needs --m >= 1")
        if self.algo == "kmeans" and (self.k is None or self.k < 1):
            raise InvalidInputError("kmeans needs --k >= 1")
        if self.snapshots and self.algo not in ("esync", "iesync"):
            raise InvalidInputError("--snapshots is available for esync and iesync only")

    def params(self) -> dict:
        out = {"delta": self.delta, "epsilon": self.epsilon, "m": self.m,
               "grid_r": self.grid_r, "seed": self.seed}
        if self.algo == "dbscan":
            out["min_pts"] = self.min_pts
        if self.algo == "kmeans":
            out["k"] = self.k
        return out


def execute(cfg: RunConfig, coords: np.ndarray) -> tuple[sio.RunDocument, list[np.ndarray]]:
    """Run one configured algorithm; returns the report and any snapshots."""
    algo = cfg.algo
    flags: list[str] = []
    snaps: list[np.ndarray] = []
    model = cfg.model if algo in SYNC_ALGOS else None
    if algo in ("esync", "iesync"):
        opts = RunOptions(cfg.model, cfg.max_iters, record_snapshots=cfg.snapshots,
                          epsilon_cluster=cfg.epsilon)
        params = ModelParams(cfg.delta)
        if algo == "esync":
            rep = esync_run(coords, params, opts)
        else:
            rep = iesync_run(coords, params, opts, cell_lengths=cfg.grid_r)
        per_iter = [sio.IterEntry(s.step, s.ave_len, s.r_c, s.distinct_locations)
                    for s in rep.per_iter]
        flags += rep.degeneracy_flags
        iterations, converged, evals = rep.iterations, rep.converged, rep.distance_evals
        labels = rep.labels
        snaps = rep.snapshots
    elif algo in ("ssync", "msync"):
        if algo == "ssync":
            top = ssync_run(coords, cfg.delta, cfg.epsilon, cfg.max_iters)
            labels, evals = top.labels(), top.distance_evals
        else:
            mrep = msync_run(coords, cfg.delta, cfg.m, cfg.epsilon, seed=cfg.seed,
                             max_iters=cfg.max_iters)
            top, labels, evals = mrep.report, mrep.labels, mrep.distance_evals
            flags.append("subsection-roots: " + ",".join(map(str, mrep.subsection_root_counts)))
        per_iter = [sio.IterEntry(t, None, None, int(a))
                    for t, a in enumerate(top.active_counts[1:], start=1)]
        iterations, converged = top.iterations, top.converged
    elif algo == "dbscan":
        labels = dbscan(coords, DbscanParams(cfg.delta, cfg.min_pts))
        per_iter, iterations, converged = [], 0, True
        n = len(coords)
        evals = n * (n - 1)
        flags.append(f"noise: {labels.noise_count}")
    else:
        km = kmeans(coords, cfg.k, seed=cfg.seed, max_iters=cfg.max_iters)
        labels = km
        per_iter, iterations = [], km.iterations
        converged = km.iterations < cfg.max_iters or len(km.costs) < 2 or km.costs[-1] == km.costs[-2]
        evals = len(coords) * cfg.k * len(km.costs)
        flags.append(f"cost: {km.cost!r}")
    doc = sio.RunDocument(
        algo=algo,
        model=model,
        params=cfg.params(),
        iterations=int(iterations),
        converged=bool(converged),
        clusters=sio.cluster_entries(labels),
        per_iter=per_iter,
        counters={"distance_evals": int(evals)},
        flags=flags,
        labels=[int(v) for v in labels.labels],
    )
    return doc, snaps


def _config_from(args, algo: str | None = None) -> RunConfig:
    return RunConfig(
        algo=algo or args.algo,
        model=args.model,
        delta=getattr(args, "delta", None),
        epsilon=args.epsilon,
        grid_r=_parse_grid_r(args.grid_r),
        m=args.m,
        k=getattr(args, "k", None),
        min_pts=getattr(args, "min_pts", 4),
        max_iters=args.max_iters,
        seed=args.seed,
        snapshots=bool(getattr(args, "snapshots", None)),
    )


def parse_deltas(text: str) -> list[float]:
    """``"1:99"`` or ``"1:99:2"`` (inclusive range) or ``"10,18,25"``."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1.0
            if not step > 0:
                raise ValueError
            count = int(np.floor((hi - lo) / step + 1e-9)) + 1
            vals = [lo + i * step for i in range(max(count, 0))]
        else:
            vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InvalidInputError(f"bad delta list {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise InvalidInputError("deltas must be > 0")
    return vals


# ---- subcommands ---------------------------------------------------------

def cmd_gen(args) -> int:
    overrides = {k: v for k, v in (("noise_fraction", args.noise_fraction),
                                   ("profile", args.profile),
                                   ("sigma_fraction", args.sigma_fraction)) if v is not None}
    if args.preset:
        spec = preset(args.preset, n=args.n, seed=args.seed, **overrides)
    else:
        if args.nc is None or args.cs is None or args.d is None:
            raise InvalidInputError("gen needs --preset or all of --nc, --cs, --d")
        spec = GenSpec(args.nc, args.noise, args.cs, args.d, n=args.n, seed=args.seed, **overrides)
    ds = generate_dataset(spec)
    out = Path(args.out)
    sio.write_points(out, ds.points.coords)
    truth = Path(args.truth) if args.truth else out.with_suffix(".truth.csv")
    sio.write_truth(truth, ds.truth)
    print(f"wrote {len(ds.truth)} points to {out}, labels to {truth}")
    return EXIT_OK


def cmd_run(args) -> int:
    threads = sync_threads()
    cfg = _config_from(args)
    coords = sio.read_points(args.input)
    doc, snaps = execute(cfg, coords)
    doc.flags.append(f"threads: {threads} (engines run sequentially)")
    text = doc.to_json()
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    if args.snapshots:
        sio.write_snapshots(args.snapshots, snaps)
    return EXIT_OK


def cmd_sweep(args) -> int:
    sync_threads()
    coords = sio.read_points(args.input)
    rows = []
    for d in parse_deltas(args.deltas):
        args.delta = d
        doc, _ = execute(_config_from(args), coords)
        rows.append((d, doc.cluster_count, doc.iterations))
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["delta", "clusters", "iterations"])
        w.writerows([(repr(d), c, i) for d, c, i in rows])
    finally:
        if args.output:
            out.close()
    return EXIT_OK


def cmd_bench(args) -> int:
    sync_threads()
    coords = sio.read_points(args.input)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    rows = []
    for algo, d in itertools.product(algos, parse_deltas(args.deltas)):
        args.delta = d
        cfg = _config_from(args, algo)
        t0 = time.perf_counter()
        doc, _ = execute(cfg, coords)
        wall = time.perf_counter() - t0
        active = [len(coords)] + [e.active for e in doc.per_iter]
        final_ave = doc.per_iter[-1].ave_len if doc.per_iter else None
        rows.append([algo, cfg.model if algo in SYNC_ALGOS else "", repr(d), doc.iterations,
                     doc.cluster_count, doc.counters["distance_evals"], doc.converged,
                     "" if final_ave is None else repr(final_ave),
                     ";".join(map(str, active)), f"{wall:.4f}"])
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["algo", "model", "delta", "iterations", "clusters", "distance_evals",
                    "converged", "final_ave_len", "active_counts", "wall_time"])
        w.writerows(rows)
    finally:
        if args.output:
            out.close()
    return EXIT_OK


def cmd_compare(args) -> int:
    sync_threads()
    coords = sio.read_points(args.input)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    results: dict[str, np.ndarray] = {}
    for algo in algos:
        doc, _ = execute(_config_from(args, algo), coords)
        results[algo] = np.array(doc.labels)
        print(f"{algo}: {doc.cluster_count} clusters")
    if args.truth:
        truth = sio.read_truth(args.truth)
        if len(truth) != len(coords):
            raise InvalidInputError("truth file length differs from the point count")
        t = truth.copy()
        noise = np.flatnonzero(t < 0)
        t[noise] = t.max(initial=-1) + 1 + np.arange(len(noise))
        results["truth"] = t
    for a, b in itertools.combinations(results, 2):
        la, lb = results[a], results[b]
        keep = (la >= 0) & (lb >= 0)
        same = match_labels(ClusterLabels(la[keep], np.zeros((0, 0))),
                            ClusterLabels(lb[keep], np.zeros((0, 0))))
        print(f"{a} vs {b}: {'same partition' if same else 'different'}"
              f"{'' if keep.all() else f' (on {int(keep.sum())} non-noise points)'}")
    return EXIT_OK


# ---- argument parsing ----------------------------------------------------

def _add_algo_flags(p, with_delta: bool = True):
    p.add_argument("--model", default="lv", help="lv, ek or ov (default lv)")
    if with_delta:
        p.add_argument("--delta", type=float)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--grid-r", dest="grid_r", help="cell length, scalar or comma list per dimension")
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int, help="cluster count for kmeans")
    p.add_argument("--min-pts", dest="min_pts", type=int, default=4)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linsync", description="Synchronisation clustering tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic data set")
    g.add_argument("--preset")
    g.add_argument("--nc", type=int)
    g.add_argument("--cs", type=float)
    g.add_argument("--d", type=int)
    g.add_argument("--noise", action="store_true")
    g.add_argument("--n", type=int, default=400)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise-fraction", dest="noise_fraction", type=float)
    g.add_argument("--profile", choices=("gaussian", "uniform"))
    g.add_argument("--sigma-fraction", dest="sigma_fraction", type=float)
    g.add_argument("--out", required=True)
    g.add_argument("--truth")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="cluster one input file")
    r.add_argument("--algo", required=True, choices=ALGOS)
    _add_algo_flags(r)
    r.add_argument("--input", required=True)
    r.add_argument("--output")
    r.add_argument("--snapshots", help="directory for step_NNN.csv files")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="cluster count over a range of delta")
    s.add_argument("--algo", default="esync", choices=SYNC_ALGOS + ("dbscan",))
    _add_algo_flags(s, with_delta=False)
    s.add_argument("--deltas", required=True, help="lo:hi[:step] or a comma list")
    s.add_argument("--input", required=True)
    s.add_argument("--output")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bench", help="work counters for several algorithms")
    b.add_argument("--algos", default="esync,ssync", help="comma list; add iesync together with --grid-r")
    _add_algo_flags(b, with_delta=False)
    b.add_argument("--deltas", required=True)
    b.add_argument("--input", required=True)
    b.add_argument("--output")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("compare", help="pairwise partition agreement")
    c.add_argument("--algos", default="esync,ssync,dbscan")
    _add_algo_flags(c)
    c.add_argument("--input", required=True)
    c.add_argument("--truth")
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except sio.DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
