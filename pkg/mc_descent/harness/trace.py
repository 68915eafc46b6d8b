"""
Per-evaluation run traces and their CSV form.

A `TraceRecorder` is attached to an `Objective` as a listener, so every
ground-truth call lands in the trace exactly once, in evaluation order. The
CSV header is `eval_index, x_0 .. x_{d-1}, y, best_y, node`; floats are
written with `repr` so reading a file back gives identical values.
"""

import csv
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from mc_descent.errors import TraceIOError

if TYPE_CHECKING:
    from mc_descent.mctd.domain import Sample


@dataclass(frozen=True, eq=False)
class TraceRecord:
    index: int
    x: np.ndarray
    y: float
    best_y: float
    node: str


@dataclass(eq=False)
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)
    seed: int = 0
    fingerprint: str = ""
    wall_time: float = 0.0
    benchmark: str = ""
    algorithm: str = ""
    # Node optimized in each MCTD iteration; empty for the baselines and for traces read from CSV.
    selections: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def dim(self) -> int:
        return int(self.records[0].x.size) if self.records else 0

    @property
    def best_y(self) -> float:
        if not self.records:
            raise ValueError("empty trace has no best value")
        return self.records[-1].best_y

    @property
    def earliest_step(self) -> int:
        """First evaluation index at which the running best equals the final best."""
        final = self.best_y
        return next(r.index for r in self.records if r.best_y == final)

    def running_best(self) -> np.ndarray:
        return np.array([r.best_y for r in self.records], dtype=float)

    def points(self) -> np.ndarray:
        return np.array([r.x for r in self.records], dtype=float)

    def values(self) -> np.ndarray:
        return np.array([r.y for r in self.records], dtype=float)


class TraceRecorder:
    """
    Objective listener that turns samples into trace records.

    `tag` is either a fixed label ("random", "nelder-mead", ...) or a callable
    evaluated per sample, which lets the tree report the node that is
    currently spending budget.
    """

    def __init__(self, tag: str | Callable[[], str] = "") -> None:
        self.tag = tag
        self.records: list[TraceRecord] = []

    def __call__(self, sample: "Sample") -> None:
        best = sample.y if not self.records else min(self.records[-1].best_y, sample.y)
        label = self.tag() if callable(self.tag) else self.tag
        self.records.append(TraceRecord(sample.index, np.array(sample.x, dtype=float), sample.y, best, label))

    def trace(self, **meta) -> RunTrace:
        return RunTrace(records=list(self.records), **meta)


def trace_header(dim: int) -> list[str]:
    return ["eval_index", *(f"x_{i}" for i in range(dim)), "y", "best_y", "node"]


def write_trace(trace: RunTrace, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(trace_header(trace.dim))
            for r in trace.records:
                writer.writerow([r.index, *(repr(float(v)) for v in r.x), repr(r.y), repr(r.best_y), r.node])
    except OSError as e:
        raise TraceIOError(f"Cannot write trace {path}: {e}") from e
    return path


def read_trace(path: Path, **meta) -> RunTrace:
    """Parse a trace CSV written by `write_trace` (or an external tool using the same schema)."""
    try:
        with path.open(newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise TraceIOError(f"Cannot read trace {path}: {e}") from e
    if not rows:
        raise TraceIOError(f"Trace {path} is empty")

    header = rows[0]
    dim = len(header) - 4
    if dim < 1 or header != trace_header(dim):
        raise TraceIOError(f"Trace {path} has an unexpected header: {header}")
    records = []
    try:
        for row in rows[1:]:
            records.append(
                TraceRecord(
                    index=int(row[0]),
                    x=np.array([float(v) for v in row[1 : 1 + dim]]),
                    y=float(row[1 + dim]),
                    best_y=float(row[2 + dim]),
                    node=row[3 + dim],
                )
            )
    except (ValueError, IndexError) as e:
        raise TraceIOError(f"Malformed row in {path}: {e}") from e
    return RunTrace(records=records, **meta)


__all__ = ["TraceRecord", "RunTrace", "TraceRecorder", "trace_header", "write_trace", "read_trace"]
