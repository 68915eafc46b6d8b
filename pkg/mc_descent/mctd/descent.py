"""
Stochastic three-point (STP) local descent.

Three step variants share one driver, `descend`:

1. `stp_basic_step`: compare f(x), f(x + dx), f(x - dx). Used when the node
   has no GP oracle yet.
2. `stp_oracle_step`: walk along dx on the surrogate while it keeps
   improving, then spend one ground-truth call at the end of the walk.
3. `stp_fine_step`: bracketing line search along dx on the surrogate, then
   one ground-truth call. Used once the node's best value drops below the
   switch threshold.

Every step returns a `DescentOutcome` whose best never worsens.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from mc_descent.config import DescentConfig
from mc_descent.errors import BudgetExhaustedError, ContractViolationError
from mc_descent.mctd.domain import DomainBox, Objective, Sample, evaluate, latin_hypercube
from mc_descent.mctd.gp import GpModel, correlation_lengths, expected_improvement_batch, predict_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DescentOutcome:
    new_best: Sample
    ground_truth_calls: int
    improved: bool
    new_samples: tuple[Sample, ...] = ()


def _better(a: Sample, b: Sample) -> Sample:
    return b if b.y < a.y else a


def step_size(visits: int, level: int, alpha0: float, corr_scalar: float, box: DomainBox) -> np.ndarray:
    """Per-dimension step, shrinking with the square root of visits * (level + 1)."""
    if visits < 1:
        raise ContractViolationError("step_size needs visits >= 1")
    return alpha0 * box.widths * corr_scalar / math.sqrt(visits * (level + 1))


def rescale_by_lengths(dx: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Stretch dx along the correlation lengths while keeping its norm."""
    scaled = dx * lengths
    scaled_norm = np.linalg.norm(scaled)
    if scaled_norm == 0.0:
        return dx
    return scaled * (np.linalg.norm(dx) / scaled_norm)


def propose_direction(
    model: GpModel | None,
    x_best: Sample,
    alpha: np.ndarray,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Pick the next STP direction.

    Without a model: a direction drawn uniformly on the sphere, scaled to the
    half-diagonal of the alpha-box (norm ||alpha|| / 2).
    With a model: n Latin-hypercube offsets in the alpha-box centred at
    x_best, each stretched by the model's correlation lengths (box units),
    keeping the one with the highest expected improvement (lowest mean when
    every EI is zero).
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ContractViolationError("step sizes must be positive")
    if model is None:
        direction = rng.standard_normal(alpha.size)
        return direction * (0.5 * np.linalg.norm(alpha) / np.linalg.norm(direction))

    offsets = latin_hypercube(DomainBox(-0.5 * alpha, 0.5 * alpha), n, rng)
    lengths = correlation_lengths(model)
    offsets = np.array([rescale_by_lengths(dx, lengths) for dx in offsets])
    candidates = model.box.clip(x_best.x + offsets)
    ei = expected_improvement_batch(model, candidates, x_best.y)
    if np.max(ei) > 0.0:
        return offsets[int(np.argmax(ei))]
    mean, _ = predict_batch(model, candidates)
    return offsets[int(np.argmin(mean))]


def stp_basic_step(obj: Objective, x: Sample, dx: np.ndarray, budget: int = 2) -> DescentOutcome:
    """
    Evaluate x + dx and x - dx and keep the best of the three points.

    With a budget of 1 only the + side is evaluated; if the objective runs
    out of budget mid-step the outcome covers the calls made so far.
    """
    if not np.any(dx):
        raise ContractViolationError("stp_basic_step needs a nonzero direction")
    best = x
    new_samples: list[Sample] = []
    for sign in (1.0, -1.0):
        if len(new_samples) >= budget:
            break
        try:
            sample = evaluate(obj, x.x + sign * dx)
        except BudgetExhaustedError:
            break
        new_samples.append(sample)
        best = _better(best, sample)
    return DescentOutcome(best, len(new_samples), best.y < x.y, tuple(new_samples))


def _single_call(obj: Objective, x_best: Sample, point: np.ndarray) -> DescentOutcome:
    try:
        sample = evaluate(obj, point)
    except BudgetExhaustedError:
        return DescentOutcome(x_best, 0, False)
    best = _better(x_best, sample)
    return DescentOutcome(best, 1, best.y < x_best.y, (sample,))


def stp_oracle_step(
    obj: Objective,
    model: GpModel,
    x_best: Sample,
    dx: np.ndarray,
    max_walk: int = 10,
) -> DescentOutcome:
    """
    Walk k = 0, 1, 2, ... while the surrogate keeps decreasing along dx, then
    spend one ground-truth call at x_best + k * dx (k >= 1).
    """
    ks = np.arange(max_walk + 1, dtype=float)
    means, _ = predict_batch(model, obj.box.clip(x_best.x + np.outer(ks, dx)))
    k = 0
    while k < max_walk and means[k + 1] < means[k]:
        k += 1
    k = max(k, 1)
    return _single_call(obj, x_best, x_best.x + k * dx)


def fine_line_search(model: GpModel, x: np.ndarray, dx: np.ndarray, fine_budget: int) -> tuple[float, float, float]:
    """
    Bracketing search for the surrogate minimum along x + k * dx.

    Starts from the multipliers (lo, k0, hi) = (-1, 0, 1). Each round keeps
    the argmin as k0; a winning midpoint halves both half-widths, a winning
    endpoint becomes the new midpoint with the near side at half the old
    half-width and the far side at the full old half-width (best at +1 next
    tests 0.5 and 2). Each round costs two new surrogate evaluations.
    Returns the final (lo, k0, hi).
    """
    cache: dict[float, float] = {}

    def g(k: float) -> float:
        if k not in cache:
            mean, _ = predict_batch(model, model.box.clip(x + k * dx).reshape(1, -1))
            cache[k] = float(mean[0])
        return cache[k]

    def argmin(lo: float, mid: float, hi: float) -> float:
        # Ties keep the current midpoint.
        return min((mid, lo, hi), key=g)

    lo, mid, hi = -1.0, 0.0, 1.0
    k0 = argmin(lo, mid, hi)
    spent = 3
    while spent + 2 <= fine_budget:
        if k0 == mid:
            lo, hi = mid - (mid - lo) / 2, mid + (hi - mid) / 2
        elif k0 == hi:
            width = hi - mid
            lo, mid, hi = hi - width / 2, hi, hi + width
        else:
            width = mid - lo
            lo, mid, hi = lo - width, lo, lo + width / 2
        spent += 2
        k0 = argmin(lo, mid, hi)
    return lo, k0, hi


def stp_fine_step(
    obj: Objective,
    model: GpModel,
    x_best: Sample,
    dx: np.ndarray,
    fine_budget: int = 16,
) -> DescentOutcome:
    """
    Line-search dx on the surrogate with `fine_budget` surrogate evaluations,
    then make exactly one ground-truth call at x_best + k0 * dx.
    """
    lo, k0, hi = fine_line_search(model, x_best.x, dx, fine_budget)
    if k0 == 0.0:
        # x_best itself is already known; test the better bracket end instead.
        means, _ = predict_batch(model, obj.box.clip(x_best.x + np.outer([lo, hi], dx)))
        k0 = lo if means[0] < means[1] else hi
    return _single_call(obj, x_best, x_best.x + k0 * dx)


def descend(
    samples: list[Sample],
    best: Sample,
    visits: int,
    level: int,
    obj: Objective,
    config: DescentConfig,
    budget: int,
    rng: np.random.Generator,
    model: GpModel | None = None,
    corr_scalar: float = 1.0,
) -> DescentOutcome:
    """
    Run STP steps from `best` until `budget` ground-truth calls are spent.

    The oracle path is taken iff `model` is given; below the switch threshold
    the fine-grained step replaces the oracle step. New samples are appended
    to `samples` in evaluation order.
    """
    if budget < 1:
        raise ContractViolationError("descend needs budget >= 1")
    alpha = step_size(visits, level, config.alpha0, corr_scalar, obj.box)
    current = best
    calls = 0
    new_samples: list[Sample] = []
    while calls < budget and not obj.exhausted and not obj.optimum_reached:
        dx = propose_direction(model, current, alpha, config.n_directions, rng)
        if not np.any(dx):
            break
        if model is None:
            outcome = stp_basic_step(obj, current, dx, budget - calls)
        elif config.switch_threshold is not None and current.y < config.switch_threshold:
            outcome = stp_fine_step(obj, model, current, dx, config.fine_budget)
        else:
            outcome = stp_oracle_step(obj, model, current, dx, config.max_walk)
        if outcome.ground_truth_calls == 0:
            break
        calls += outcome.ground_truth_calls
        new_samples.extend(outcome.new_samples)
        samples.extend(outcome.new_samples)
        current = outcome.new_best
    logger.debug("descent: %d calls, best %.6g -> %.6g", calls, best.y, current.y)
    return DescentOutcome(current, calls, current.y < best.y, tuple(new_samples))


__all__ = [
    "DescentOutcome",
    "step_size",
    "rescale_by_lengths",
    "propose_direction",
    "stp_basic_step",
    "stp_oracle_step",
    "fine_line_search",
    "stp_fine_step",
    "descend",
]
