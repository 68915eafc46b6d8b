"""
Multi-seed experiment runner.

One `RunConfig` names a benchmark, an algorithm and a list of seeds. Every
seed gets its own objective, RNG stream and (for MCTD) tree, so seeds are
independent and may run in a process pool. Each finished seed is written to
`trace_seed{seed}.csv`; `manifest.json` is written once all seeds are done.
"""

import json
import logging
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mc_descent import __version__
from mc_descent.config import RunConfig
from mc_descent.errors import ConfigError, TraceIOError
from mc_descent.harness.baselines import nelder_mead_run, random_search_run, turbo_baseline_run
from mc_descent.harness.trace import RunTrace, write_trace
from mc_descent.mctd.benchmarks import TABULAR_CHOICES, make_benchmark, unique_cells
from mc_descent.mctd.tree import mctd_run

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class ExperimentResult:
    output_dir: Path
    manifest_path: Path
    traces: list[RunTrace] = field(default_factory=list)
    trace_paths: list[Path] = field(default_factory=list)


def trace_filename(seed: int) -> str:
    return f"trace_seed{seed}.csv"


def run_seed(config: RunConfig, seed: int) -> RunTrace:
    """Run the configured algorithm once, from a fresh objective and `default_rng(seed)`."""
    obj = make_benchmark(config.benchmark, config.dim)
    rng = np.random.default_rng(seed)
    mctd = config.mctd
    match config.algorithm:
        case "mctd":
            trace = mctd_run(obj, mctd.uct, mctd, config.max_evals, rng)
        case "random":
            trace = random_search_run(obj, config.max_evals, rng)
        case "nelder-mead":
            trace = nelder_mead_run(obj, config.max_evals, rng)
        case "turbo":
            trace = turbo_baseline_run(obj, config.max_evals, rng, mctd.trust_region, mctd.gp)
        case other:
            raise ConfigError(f"Unknown algorithm '{other}'")
    trace.seed = seed
    trace.fingerprint = config.fingerprint()
    trace.benchmark = obj.name
    return trace


def _run_entry(config: RunConfig, trace: RunTrace, path: Path) -> dict:
    entry = {
        "seed": trace.seed,
        "trace": path.name,
        "evaluations": len(trace),
        "best_y": trace.best_y,
        "earliest_step": trace.earliest_step,
        "wall_time": trace.wall_time,
    }
    if trace.selections:
        entry["iterations"] = len(trace.selections)
        entry["selections"] = trace.selections
    if config.benchmark == "quantized-tabular":
        obj = make_benchmark(config.benchmark, config.dim)
        entry["unique_cells"] = unique_cells(trace.points(), obj.box, TABULAR_CHOICES)
    return entry


def build_manifest(config: RunConfig, traces: list[RunTrace], paths: list[Path]) -> dict:
    return {
        "fingerprint": config.fingerprint(),
        "version": __version__,
        "algorithm": config.algorithm,
        "benchmark": traces[0].benchmark if traces else f"{config.benchmark}-{config.dim}d",
        "dim": config.dim,
        "max_evals": config.max_evals,
        "seeds": list(config.seeds),
        "config": config.model_dump(mode="json"),
        "runs": [_run_entry(config, t, p) for t, p in zip(traces, paths)],
    }


def write_manifest(manifest: dict, output_dir: Path) -> Path:
    path = output_dir / MANIFEST_NAME
    try:
        path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise TraceIOError(f"Cannot write manifest {path}: {e}") from e
    return path


def read_manifest(directory: Path) -> dict | None:
    path = directory / MANIFEST_NAME
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise TraceIOError(f"Cannot read manifest {path}: {e}") from e


def run_experiment(config: RunConfig, on_trace: Callable[[RunTrace], None] | None = None) -> ExperimentResult:
    """
    Run every seed of `config`, persist the traces and the manifest.

    Args:
        config: A validated run configuration.
        on_trace: Called with each finished trace, in seed order (progress reporting).
    """
    output_dir = config.resolved_output_dir()
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise TraceIOError(f"Cannot create output directory {output_dir}: {e}") from e
    logger.info(
        "running %s on %s-%dd, %d seed(s), %d evaluations each -> %s",
        config.algorithm, config.benchmark, config.dim, len(config.seeds), config.max_evals, output_dir,
    )

    result = ExperimentResult(output_dir=output_dir, manifest_path=output_dir / MANIFEST_NAME)

    def finish(trace: RunTrace) -> None:
        path = write_trace(trace, output_dir / trace_filename(trace.seed))
        result.traces.append(trace)
        result.trace_paths.append(path)
        logger.info("seed %d: best %.6g at step %d (%.1fs)", trace.seed, trace.best_y, trace.earliest_step,
                    trace.wall_time)
        if on_trace is not None:
            on_trace(trace)

    if config.workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(config.seeds))) as pool:
            for trace in pool.map(run_seed, [config] * len(config.seeds), config.seeds):
                finish(trace)
    else:
        for seed in config.seeds:
            finish(run_seed(config, seed))

    write_manifest(build_manifest(config, result.traces, result.trace_paths), output_dir)
    return result


__all__ = [
    "MANIFEST_NAME",
    "ExperimentResult",
    "trace_filename",
    "run_seed",
    "build_manifest",
    "write_manifest",
    "read_manifest",
    "run_experiment",
]
