"""CSV point files, snapshot dumps and the JSON run report."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, SyncError
from .metrics import ClusterLabels

__all__ = [
    "DataFormatError",
    "read_points",
    "write_points",
    "read_truth",
    "write_truth",
    "write_snapshots",
    "ClusterEntry",
    "IterEntry",
    "RunDocument",
    "cluster_entries",
]


class DataFormatError(InvalidInputError):
    """A CSV row could not be parsed; ``line`` is 1-based."""

    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = str(path)
        self.line = line


def _parse_row(cells: list[str]) -> list[float] | None:
    try:
        return [float(c) for c in cells]
    except ValueError:
        return None


def read_points(path) -> np.ndarray:
    """Load an ``n x d`` point array.

    A first line that does not parse as numbers is taken as a header. Blank
    lines are skipped. Every data row must have the same field count.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in cells]
            if not cells or all(c == "" for c in cells):
                continue
            values = _parse_row(cells)
            if values is None:
                if lineno == 1:
                    continue
                raise DataFormatError(path, lineno, f"non-numeric field in {cells!r}")
            if not all(np.isfinite(values)):
                raise DataFormatError(path, lineno, "non-finite coordinate")
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise DataFormatError(path, lineno, f"expected {width} fields, got {len(values)}")
            rows.append(values)
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_points(path, coords: np.ndarray, header: list[str] | None = None) -> None:
    coords = np.asarray(coords, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        # repr keeps every bit, so a reload reproduces the array exactly.
        w.writerows([[repr(float(v)) for v in row] for row in coords])


def read_truth(path) -> np.ndarray:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise DataFormatError(path, lineno, f"not an integer label: {s!r}") from None
    return np.array(out, dtype=np.int64)


def write_truth(path, labels) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)


def write_snapshots(directory, snapshots: list[np.ndarray]) -> list[Path]:
    """Write ``step_000.csv``, ``step_001.csv``, ... into ``directory``."""
    d = Path(directory)
    os.makedirs(d, exist_ok=True)
    paths = []
    for t, coords in enumerate(snapshots):
        p = d / f"step_{t:03}.csv"
        write_points(p, coords)
        paths.append(p)
    return paths


@dataclass
class ClusterEntry:
    label: int
    size: int
    center: list[float]


@dataclass
class IterEntry:
    t: int
    ave_len: float | None
    r_c: float | None
    active: int


@dataclass
class RunDocument:
    algo: str
    model: str | None
    params: dict
    iterations: int
    converged: bool
    clusters: list[ClusterEntry]
    per_iter: list[IterEntry]
    counters: dict
    flags: list[str] = field(default_factory=list)
    labels: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RunDocument":
        try:
            body = dict(d)
            body["clusters"] = [ClusterEntry(**c) for c in d["clusters"]]
            body["per_iter"] = [IterEntry(**e) for e in d["per_iter"]]
            return cls(**body)
        except (KeyError, TypeError) as exc:
            raise SyncError(f"malformed report document: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "RunDocument":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "RunDocument":
        return cls.from_json(Path(path).read_text())

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)


def cluster_entries(labels: ClusterLabels) -> list[ClusterEntry]:
    sizes = labels.sizes
    return [ClusterEntry(k, int(sizes[k]), [float(v) for v in labels.centers[k]])
            for k in range(labels.k)]
