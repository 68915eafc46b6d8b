"""
Reference optimizers the tree search is compared against.

All three attach a `TraceRecorder` to the objective, cap it at `max_evals`
and stop early once a known optimum is found, so their traces line up with
the MCTD trace record for record.
"""

import logging
import time
from collections.abc import Callable

import numpy as np

from mc_descent.config import GpConfig, TrustRegionConfig
from mc_descent.errors import BudgetExhaustedError, ContractViolationError
from mc_descent.harness.trace import RunTrace, TraceRecorder
from mc_descent.mctd.domain import Objective, Sample, evaluate, latin_hypercube, sample_uniform
from mc_descent.mctd.local_bo import bo_step, init_tr

logger = logging.getLogger(__name__)

NM_REFLECTION = 1.0
NM_EXPANSION = 2.0
NM_CONTRACTION_OUTSIDE = 0.5
NM_CONTRACTION_INSIDE = 0.5
NM_SHRINK = 0.5
NM_INITIAL_STEP = 0.05


def _run_with_trace(obj: Objective, max_evals: int, tag: str | Callable[[], str], body: Callable[[], None]) -> RunTrace:
    if max_evals < 1:
        raise ContractViolationError("max_evals must be positive")
    obj.max_evals = obj.eval_count + max_evals
    recorder = TraceRecorder(tag)
    obj.listeners.append(recorder)
    started = time.perf_counter()
    try:
        body()
    except BudgetExhaustedError:
        pass
    finally:
        obj.listeners.remove(recorder)
    return recorder.trace(wall_time=time.perf_counter() - started, benchmark=obj.name)


def _evaluate_all(obj: Objective, points: np.ndarray) -> list[Sample]:
    """Evaluate `points` in order, stopping once the known optimum is hit."""
    samples = []
    for x in points:
        samples.append(evaluate(obj, x))
        if obj.optimum_reached:
            break
    return samples


def random_search_run(obj: Objective, max_evals: int, rng: np.random.Generator) -> RunTrace:
    def body() -> None:
        while not obj.exhausted and not obj.optimum_reached:
            evaluate(obj, sample_uniform(obj.box, rng))

    trace = _run_with_trace(obj, max_evals, "random", body)
    trace.algorithm = "random"
    return trace


def initial_simplex(obj: Objective, rng: np.random.Generator) -> np.ndarray:
    """A random vertex plus one vertex per axis, offset by 5% of the width (inward at the upper bound)."""
    box = obj.box
    x0 = sample_uniform(box, rng)
    vertices = [x0]
    for i in range(box.dim):
        step = NM_INITIAL_STEP * box.widths[i]
        v = x0.copy()
        v[i] = x0[i] + step if x0[i] + step <= box.upper[i] else x0[i] - step
        vertices.append(v)
    return np.array(vertices)


def shrink_simplex(vertices: np.ndarray, sigma: float = NM_SHRINK) -> np.ndarray:
    """Pull every vertex towards the first (best) one by `sigma`."""
    pivot = vertices[0]
    return pivot + sigma * (vertices - pivot)


def nelder_mead_run(obj: Objective, max_evals: int, rng: np.random.Generator) -> RunTrace:
    """
    Bounded Nelder-Mead: reflection 1.0, expansion 2.0, outside and inside
    contraction 0.5, shrink 0.5. Trial points are clipped into the box by
    `evaluate`, so the simplex stays feasible.
    """
    if max_evals < obj.box.dim + 2:
        raise ContractViolationError("nelder-mead needs max_evals >= dim + 2")

    def body() -> None:
        simplex = _evaluate_all(obj, initial_simplex(obj, rng))
        while not obj.exhausted and not obj.optimum_reached:
            simplex.sort(key=lambda s: s.y)
            best, second_worst, worst = simplex[0], simplex[-2], simplex[-1]
            centroid = np.mean([s.x for s in simplex[:-1]], axis=0)

            reflected = evaluate(obj, centroid + NM_REFLECTION * (centroid - worst.x))
            if best.y <= reflected.y < second_worst.y:
                simplex[-1] = reflected
                continue
            if reflected.y < best.y:
                expanded = evaluate(obj, centroid + NM_EXPANSION * (reflected.x - centroid))
                simplex[-1] = expanded if expanded.y < reflected.y else reflected
                continue
            if reflected.y < worst.y:
                contracted = evaluate(obj, centroid + NM_CONTRACTION_OUTSIDE * (reflected.x - centroid))
                if contracted.y <= reflected.y:
                    simplex[-1] = contracted
                    continue
            else:
                contracted = evaluate(obj, centroid + NM_CONTRACTION_INSIDE * (worst.x - centroid))
                if contracted.y < worst.y:
                    simplex[-1] = contracted
                    continue

            shrunk = shrink_simplex(np.array([s.x for s in simplex]))
            simplex = [best] + _evaluate_all(obj, shrunk[1:])

    trace = _run_with_trace(obj, max_evals, "nelder-mead", body)
    trace.algorithm = "nelder-mead"
    return trace


def turbo_baseline_run(
    obj: Objective,
    max_evals: int,
    rng: np.random.Generator,
    config: TrustRegionConfig | None = None,
    gp_config: GpConfig | None = None,
) -> RunTrace:
    """
    Standalone TuRBO-1: a Latin-hypercube design of `init_points` points,
    then trust-region BO batches. When the region shrinks below `length_min`
    the run restarts from a fresh design and a fresh region.
    """
    config = config or TrustRegionConfig()
    if max_evals < config.init_points:
        raise ContractViolationError(f"turbo needs max_evals >= {config.init_points}")
    phase = {"tag": "turbo-init"}

    def body() -> None:
        restarts = 0
        while not obj.exhausted and not obj.optimum_reached:
            phase["tag"] = "turbo-init"
            n_init = min(config.init_points, obj.remaining)
            samples = _evaluate_all(obj, latin_hypercube(obj.box, n_init, rng))
            tr = init_tr(config)
            phase["tag"] = "turbo"
            while not obj.exhausted and not obj.optimum_reached:
                new, tr = bo_step(samples, tr, obj, rng, config.batch_size, config, gp_config, clamp=False)
                if not new:
                    return
                if tr.length < config.length_min:
                    restarts += 1
                    logger.info("trust region collapsed after %d evaluations, restart %d", obj.eval_count, restarts)
                    break

    trace = _run_with_trace(obj, max_evals, lambda: phase["tag"], body)
    trace.algorithm = "turbo"
    return trace


__all__ = [
    "random_search_run",
    "initial_simplex",
    "shrink_simplex",
    "nelder_mead_run",
    "turbo_baseline_run",
]
