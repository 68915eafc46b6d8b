"""
Trust-region Bayesian optimization on one node's sample set.

A single hyper-rectangular trust region (TuRBO-1 style) is centred at the
node's best point. Its side length doubles after `success_tolerance`
improving batches and halves after `fail_tolerance` non-improving ones. Inside
the tree the length is clamped to `length_min` and the region is never
restarted; the standalone baseline passes `clamp=False` and restarts itself
when the length collapses.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from mc_descent.config import GpConfig, TrustRegionConfig
from mc_descent.errors import BudgetExhaustedError, ContractViolationError, IllConditionedError, InsufficientDataError
from mc_descent.mctd.domain import DomainBox, Objective, Sample, evaluate, latin_hypercube
from mc_descent.mctd.gp import GpModel, fit_gp, thompson_select

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrustRegion:
    length: float
    success_streak: int = 0
    failure_streak: int = 0
    # Set from the node best on first use.
    center: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class LocalBoOutcome:
    new_samples: tuple[Sample, ...]
    trust_region: TrustRegion
    ground_truth_calls: int
    improved: bool


def init_tr(config: TrustRegionConfig | None = None) -> TrustRegion:
    config = config or TrustRegionConfig()
    return TrustRegion(length=config.length_init)


def update_tr(
    tr: TrustRegion,
    improved: bool,
    config: TrustRegionConfig | None = None,
    dim: int = 1,
    clamp: bool = True,
) -> TrustRegion:
    """
    Count one batch as a success or a failure and resize the region when a
    streak reaches its tolerance. The resized streak starts over from zero.
    """
    config = config or TrustRegionConfig()
    if improved:
        successes, failures = tr.success_streak + 1, 0
    else:
        successes, failures = 0, tr.failure_streak + 1

    length = tr.length
    if successes >= config.success_tolerance:
        length = min(2.0 * length, config.length_max)
        successes = 0
    elif failures >= config.fail_tolerance_for(dim):
        length = length / 2.0
        failures = 0
    if clamp:
        length = max(length, config.length_min)
    return replace(tr, length=length, success_streak=successes, failure_streak=failures)


def trust_region_box(length: float, center: np.ndarray, box: DomainBox, model: GpModel | None = None) -> DomainBox:
    """
    Box of side `length * width_i * w_i` around `center`, clipped to `box`.
    The weights are lengthscale_i / mean(lengthscales) with a model, 1 without.
    """
    if model is None:
        weights = np.ones(box.dim)
    else:
        lengthscales = model.params.lengthscales
        weights = lengthscales / np.mean(lengthscales)
    half = 0.5 * length * box.widths * weights
    return DomainBox(box.clip(center - half), box.clip(center + half))


def _fit_or_none(samples: list[Sample], box: DomainBox, rng: np.random.Generator, gp_config: GpConfig) -> GpModel | None:
    if len(samples) < 2:
        return None
    try:
        return fit_gp(samples[-gp_config.train_cap:], box, rng, gp_config)
    except (IllConditionedError, InsufficientDataError) as e:
        logger.debug("trust-region GP fit failed, sampling uniformly: %s", e)
        return None


def bo_step(
    samples: list[Sample],
    tr: TrustRegion,
    obj: Objective,
    rng: np.random.Generator,
    batch: int,
    config: TrustRegionConfig | None = None,
    gp_config: GpConfig | None = None,
    clamp: bool = True,
) -> tuple[list[Sample], TrustRegion]:
    """
    One batch of trust-region BO.

    Fits a GP on the most recent samples, draws Latin-hypercube candidates in
    the trust region around the best sample and picks `batch` of them by
    Thompson sampling. Without a usable GP the batch is drawn uniformly in the
    region instead. New samples are appended to `samples`; the region is
    updated once for the whole batch.
    """
    config = config or TrustRegionConfig()
    gp_config = gp_config or GpConfig()
    if batch < 1:
        raise ContractViolationError("bo_step needs batch >= 1")
    if obj.remaining is not None:
        batch = min(batch, obj.remaining)
    if batch == 0:
        return [], tr

    box = obj.box
    best = min(samples, key=lambda s: s.y) if samples else None
    center = best.x if best is not None else 0.5 * (box.lower + box.upper)
    model = _fit_or_none(samples, box, rng, gp_config)
    region = trust_region_box(tr.length, center, box, model)

    if model is not None:
        candidates = latin_hypercube(region, max(config.candidates_for(box.dim), batch), rng)
        points = candidates[thompson_select(model, candidates, rng, batch)]
    else:
        points = rng.uniform(region.lower, region.upper, size=(batch, box.dim))

    new_samples: list[Sample] = []
    for point in points:
        try:
            new_samples.append(evaluate(obj, point))
        except BudgetExhaustedError:
            break
        if obj.optimum_reached:
            break
    samples.extend(new_samples)

    improved = best is None or any(s.y < best.y for s in new_samples)
    updated = update_tr(replace(tr, center=center), improved, config, box.dim, clamp)
    if updated.length != tr.length:
        logger.debug("trust region length %.4g -> %.4g", tr.length, updated.length)
    return new_samples, updated


def local_bo_run(
    samples: list[Sample],
    tr: TrustRegion,
    obj: Objective,
    budget: int,
    rng: np.random.Generator,
    config: TrustRegionConfig | None = None,
    gp_config: GpConfig | None = None,
) -> LocalBoOutcome:
    """Repeat `bo_step` with batch = min(batch_size, budget left) until `budget` calls are spent."""
    config = config or TrustRegionConfig()
    if budget < 1:
        raise ContractViolationError("local_bo_run needs budget >= 1")
    start_best = min((s.y for s in samples), default=np.inf)
    new_samples: list[Sample] = []
    while len(new_samples) < budget and not obj.exhausted and not obj.optimum_reached:
        batch = min(config.batch_size, budget - len(new_samples))
        step_samples, tr = bo_step(samples, tr, obj, rng, batch, config, gp_config)
        if not step_samples:
            break
        new_samples.extend(step_samples)
    improved = any(s.y < start_best for s in new_samples)
    return LocalBoOutcome(tuple(new_samples), tr, len(new_samples), improved)


__all__ = [
    "TrustRegion",
    "LocalBoOutcome",
    "init_tr",
    "update_tr",
    "trust_region_box",
    "bo_step",
    "local_bo_run",
]
