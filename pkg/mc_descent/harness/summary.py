"""
Aggregation of run traces into "best found value / earliest step" tables and
mean +- std convergence curves.
"""

import csv
import json
import re
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from mc_descent.errors import AggregationError, TraceIOError
from mc_descent.harness.experiment import read_manifest
from mc_descent.harness.trace import RunTrace, read_trace

SUMMARY_NAME = "summary.json"
CURVE_NAME = "curve.csv"
_SEED_PATTERN = re.compile(r"seed(\d+)")


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    benchmark: str
    seeds: int
    best_y: float
    earliest_step: int
    mean_best: float
    std_best: float

    @property
    def cell(self) -> str:
        return format_cell(self.best_y, self.earliest_step)


@dataclass(frozen=True, eq=False)
class Curve:
    algorithm: str
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True, eq=False)
class SummaryTable:
    rows: list[SummaryRow]
    curves: dict[str, Curve]


def format_cell(best_y: float, earliest_step: int) -> str:
    return f"{best_y:.2f}/{earliest_step}"


def padded_running_best(traces: Sequence[RunTrace]) -> np.ndarray:
    """Running-best curves as rows, each padded to the longest with its last value."""
    length = max(len(t) for t in traces)
    rows = []
    for t in traces:
        best = t.running_best()
        rows.append(np.concatenate([best, np.full(length - best.size, best[-1])]))
    return np.vstack(rows)


def _summarize_group(algorithm: str, benchmark: str, traces: list[RunTrace]) -> tuple[SummaryRow, Curve]:
    finals = np.array([t.best_y for t in traces])
    best = float(finals.min())
    earliest = min(t.earliest_step for t in traces if t.best_y == best)
    curves = padded_running_best(traces)
    row = SummaryRow(
        algorithm=algorithm,
        benchmark=benchmark,
        seeds=len(traces),
        best_y=best,
        earliest_step=earliest,
        mean_best=float(finals.mean()),
        std_best=float(finals.std()),
    )
    return row, Curve(algorithm, curves.mean(axis=0), curves.std(axis=0))


def summarize(traces: Iterable[RunTrace]) -> SummaryTable:
    """
    Summarize traces of one benchmark, grouped by algorithm.

    Raises:
        AggregationError: no traces, an empty trace, or traces from different benchmarks.
    """
    traces = list(traces)
    if not traces:
        raise AggregationError("nothing to summarize")
    if any(len(t) == 0 for t in traces):
        raise AggregationError("cannot summarize an empty trace")
    benchmarks = {t.benchmark for t in traces}
    if len(benchmarks) != 1:
        raise AggregationError(f"traces come from different benchmarks: {sorted(benchmarks)}")
    benchmark = benchmarks.pop()

    groups: dict[str, list[RunTrace]] = defaultdict(list)
    for t in traces:
        groups[t.algorithm].append(t)
    rows, curves = [], {}
    for algorithm in sorted(groups):
        row, curve = _summarize_group(algorithm, benchmark, groups[algorithm])
        rows.append(row)
        curves[algorithm] = curve
    return SummaryTable(rows=rows, curves=curves)


def load_run_directory(directory: Path) -> list[RunTrace]:
    """
    Read every trace CSV in `directory`. Algorithm and benchmark come from the
    manifest; directories without one (external traces in the same schema) are
    labelled by their own name and their parent's name.
    """
    if not directory.is_dir():
        raise TraceIOError(f"Not a run directory: {directory}")
    manifest = read_manifest(directory)
    if manifest is not None:
        algorithm, benchmark = manifest["algorithm"], manifest["benchmark"]
    else:
        algorithm, benchmark = directory.name, directory.resolve().parent.name
    traces = []
    for path in sorted(directory.glob("*.csv")):
        if path.name.startswith("curve"):
            continue
        match = _SEED_PATTERN.search(path.stem)
        seed = int(match.group(1)) if match else 0
        traces.append(read_trace(path, seed=seed, algorithm=algorithm, benchmark=benchmark))
    if not traces:
        raise TraceIOError(f"No trace files in {directory}")
    return traces


def write_curve(curve: Curve, path: Path) -> Path:
    try:
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["eval_index", "mean", "std"])
            for i, (m, s) in enumerate(zip(curve.mean, curve.std), start=1):
                writer.writerow([i, repr(float(m)), repr(float(s))])
    except OSError as e:
        raise TraceIOError(f"Cannot write curve {path}: {e}") from e
    return path


def summarize_directory(directory: Path) -> SummaryTable:
    """Summarize one run directory and write `summary.json` and `curve.csv` next to its traces."""
    table = summarize(load_run_directory(directory))
    payload = {"rows": [asdict(r) | {"cell": r.cell} for r in table.rows]}
    try:
        (directory / SUMMARY_NAME).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise TraceIOError(f"Cannot write summary in {directory}: {e}") from e
    if len(table.curves) == 1:
        write_curve(next(iter(table.curves.values())), directory / CURVE_NAME)
    else:
        for algorithm, curve in table.curves.items():
            write_curve(curve, directory / f"curve_{algorithm}.csv")
    return table


def compare(directories: Iterable[Path]) -> dict[str, dict[str, SummaryRow]]:
    """Rows keyed by benchmark, then by algorithm, across several run directories."""
    by_benchmark: dict[str, list[RunTrace]] = defaultdict(list)
    for directory in directories:
        for t in load_run_directory(directory):
            by_benchmark[t.benchmark].append(t)
    if not by_benchmark:
        raise AggregationError("no run directories given")
    return {
        benchmark: {row.algorithm: row for row in summarize(traces).rows}
        for benchmark, traces in sorted(by_benchmark.items())
    }


def best_algorithm(rows: dict[str, SummaryRow]) -> str:
    """Algorithm with the lowest best value; ties go to the earlier step."""
    return min(rows.values(), key=lambda r: (r.best_y, r.earliest_step)).algorithm


__all__ = [
    "SUMMARY_NAME",
    "CURVE_NAME",
    "SummaryRow",
    "Curve",
    "SummaryTable",
    "format_cell",
    "padded_running_best",
    "summarize",
    "load_run_directory",
    "write_curve",
    "summarize_directory",
    "compare",
    "best_algorithm",
]
