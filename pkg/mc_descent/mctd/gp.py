"""
Gaussian-process regression used as the local oracle of every tree node.

Inputs are mapped to the unit cube of the node's domain and targets are
standardized before fitting. The kernel is Matern 5/2 with one lengthscale per
dimension (ARD). Hyperparameters maximize the log marginal likelihood with a
bounded, derivative-free Powell search in log space from several starts.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, eigh, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist
from scipy.stats import norm

from mc_descent.config import GpConfig
from mc_descent.errors import ContractViolationError, IllConditionedError, InsufficientDataError
from mc_descent.mctd.domain import DomainBox, Sample

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
SQRT5 = math.sqrt(5.0)
EI_SIGMA_FLOOR = 1e-12
# Returned by the fitting objective when a factorization fails.
_FAILED_FIT = 1e10


@dataclass(frozen=True, eq=False)
class KernelParams:
    """Kernel hyperparameters; lengthscales are in unit-cube units."""
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def to_log_vector(self) -> np.ndarray:
        return np.log(np.concatenate([self.lengthscales, [self.signal_variance, self.noise_variance]]))

    @classmethod
    def from_log_vector(cls, v: np.ndarray) -> "KernelParams":
        values = np.exp(np.asarray(v, dtype=float))
        return cls(lengthscales=values[:-2], signal_variance=float(values[-2]), noise_variance=float(values[-1]))


@dataclass(frozen=True, eq=False)
class GpModel:
    """A fitted GP. Immutable after construction."""
    train_x: np.ndarray
    train_y: np.ndarray
    params: KernelParams
    chol: np.ndarray
    alpha: np.ndarray
    y_mean: float
    y_std: float
    box: DomainBox
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def n(self) -> int:
        return int(self.train_y.size)


def matern52(xa: np.ndarray, xb: np.ndarray, lengthscales: np.ndarray, signal_variance: float) -> np.ndarray:
    r = cdist(xa / lengthscales, xb / lengthscales)
    s5r = SQRT5 * r
    return signal_variance * (1.0 + s5r + (5.0 / 3.0) * r**2) * np.exp(-s5r)


def _factorize(cov: np.ndarray, config: GpConfig) -> tuple[np.ndarray, float]:
    """Cholesky factor of `cov`, escalating diagonal jitter on failure."""
    try:
        return cholesky(cov, lower=True), 0.0
    except LinAlgError:
        pass
    jitter = config.jitter_init
    eye = np.eye(cov.shape[0])
    while jitter <= config.jitter_max * (1 + 1e-9):
        try:
            return cholesky(cov + jitter * eye, lower=True), jitter
        except LinAlgError:
            jitter *= 10.0
    raise IllConditionedError(f"covariance not positive definite with jitter up to {config.jitter_max}")


def build_model(
    train_x: np.ndarray,
    train_y: np.ndarray,
    params: KernelParams,
    box: DomainBox,
    y_mean: float = 0.0,
    y_std: float = 1.0,
    config: GpConfig | None = None,
) -> GpModel:
    """
    Condition a GP with fixed hyperparameters on unit-cube inputs and
    standardized targets.
    """
    config = config or GpConfig()
    k = matern52(train_x, train_x, params.lengthscales, params.signal_variance)
    k[np.diag_indices_from(k)] += params.noise_variance
    chol, jitter = _factorize(k, config)
    alpha = cho_solve((chol, True), train_y)
    return GpModel(
        train_x=train_x,
        train_y=train_y,
        params=params,
        chol=chol,
        alpha=alpha,
        y_mean=y_mean,
        y_std=y_std,
        box=box,
        jitter=jitter,
    )


def log_marginal_likelihood(model: GpModel) -> float:
    """Log evidence of the standardized targets under the model."""
    return float(
        -0.5 * model.train_y @ model.alpha
        - np.sum(np.log(np.diag(model.chol)))
        - 0.5 * model.n * LOG_2PI
    )


def standardize(y: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(np.mean(y))
    std = float(np.std(y))
    if std < 1e-12:
        std = 1.0
    return (y - mean) / std, mean, std


def _log_bounds(dim: int, config: GpConfig) -> np.ndarray:
    rows = [config.lengthscale_bounds] * dim + [config.signal_variance_bounds, config.noise_variance_bounds]
    return np.log(np.asarray(rows, dtype=float))


def _default_start(dim: int, bounds: np.ndarray) -> np.ndarray:
    start = np.log(np.concatenate([np.full(dim, 0.5), [1.0, 1e-4]]))
    return np.clip(start, bounds[:, 0], bounds[:, 1])


def fit_gp(
    samples: Sequence[Sample],
    box: DomainBox,
    rng: np.random.Generator,
    config: GpConfig | None = None,
    extra_starts: Sequence[KernelParams] = (),
) -> GpModel:
    """
    Fit a GP to `samples` by maximizing the log marginal likelihood.

    The first start is a fixed default, the remaining `n_restarts - 1` are
    drawn uniformly in log space; `extra_starts` are tried as well. The best
    of all start points and optimized points wins, so the returned MLL is at
    least the MLL at every start.
    """
    config = config or GpConfig()
    if len(samples) < 2:
        raise InsufficientDataError(f"need at least 2 samples to fit a GP, got {len(samples)}")
    x = box.to_unit(np.array([s.x for s in samples]))
    y, y_mean, y_std = standardize(np.array([s.y for s in samples], dtype=float))
    dim = box.dim
    bounds = _log_bounds(dim, config)

    def neg_mll(v: np.ndarray) -> float:
        try:
            model = build_model(x, y, KernelParams.from_log_vector(v), box, config=config)
        except IllConditionedError:
            return _FAILED_FIT
        value = -log_marginal_likelihood(model)
        return value if math.isfinite(value) else _FAILED_FIT

    starts = [_default_start(dim, bounds)]
    starts += [np.clip(p.to_log_vector(), bounds[:, 0], bounds[:, 1]) for p in extra_starts]
    for _ in range(config.n_restarts - 1):
        starts.append(rng.uniform(bounds[:, 0], bounds[:, 1]))

    best_v, best_f = starts[0], neg_mll(starts[0])
    for v0 in starts:
        f0 = neg_mll(v0)
        if f0 < best_f:
            best_v, best_f = v0, f0
        result = minimize(
            neg_mll,
            v0,
            method="Powell",
            bounds=bounds,
            options={"maxfev": config.max_mll_evals, "xtol": 1e-4, "ftol": 1e-9},
        )
        v1 = np.clip(result.x, bounds[:, 0], bounds[:, 1])
        f1 = neg_mll(v1)
        if f1 < best_f:
            best_v, best_f = v1, f1

    if best_f >= _FAILED_FIT:
        raise IllConditionedError("no hyperparameter setting produced a factorizable covariance")
    params = KernelParams.from_log_vector(best_v)
    logger.debug("GP fit on %d samples: mll=%.4f, signal=%.3g, noise=%.3g", len(samples), -best_f,
                 params.signal_variance, params.noise_variance)
    return build_model(x, y, params, box, y_mean, y_std, config)


def predict_batch(model: GpModel, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and latent variance at the rows of `xs`, in original units."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != model.dim:
        raise ContractViolationError(f"query dimension {xs.shape[1]} does not match model dimension {model.dim}")
    u = model.box.to_unit(xs)
    ks = matern52(u, model.train_x, model.params.lengthscales, model.params.signal_variance)
    mean = ks @ model.alpha
    v = solve_triangular(model.chol, ks.T, lower=True)
    var = np.maximum(model.params.signal_variance - np.sum(v**2, axis=0), 0.0)
    return model.y_mean + model.y_std * mean, model.y_std**2 * var


def predict(model: GpModel, x: np.ndarray) -> tuple[float, float]:
    mean, var = predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))
    return float(mean[0]), float(var[0])


def posterior_covariance(model: GpModel, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Joint posterior mean and covariance over the rows of `xs`, in original units."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    u = model.box.to_unit(xs)
    ks = matern52(u, model.train_x, model.params.lengthscales, model.params.signal_variance)
    kss = matern52(u, u, model.params.lengthscales, model.params.signal_variance)
    v = solve_triangular(model.chol, ks.T, lower=True)
    cov = kss - v.T @ v
    return model.y_mean + model.y_std * (ks @ model.alpha), model.y_std**2 * cov


def ei_from_moments(mu: np.ndarray | float, sigma: np.ndarray | float, best_y: float) -> np.ndarray:
    """Expected improvement below `best_y` for a normal with moments (mu, sigma)."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    gain = best_y - mu
    degenerate = sigma <= EI_SIGMA_FLOOR
    safe_sigma = np.where(degenerate, 1.0, sigma)
    z = gain / safe_sigma
    ei = gain * norm.cdf(z) + safe_sigma * norm.pdf(z)
    return np.where(degenerate, np.maximum(gain, 0.0), np.maximum(ei, 0.0))


def expected_improvement_batch(model: GpModel, xs: np.ndarray, best_y: float) -> np.ndarray:
    mean, var = predict_batch(model, xs)
    return ei_from_moments(mean, np.sqrt(var), best_y)


def expected_improvement(model: GpModel, x: np.ndarray, best_y: float) -> float:
    mean, var = predict(model, x)
    return float(ei_from_moments(mean, math.sqrt(var), best_y))


def _sqrt_psd(cov: np.ndarray) -> np.ndarray:
    scale = max(float(np.mean(np.diag(cov))), 1e-12)
    eye = np.eye(cov.shape[0])
    jitter = 1e-10 * scale
    for _ in range(6):
        try:
            return cholesky(cov + jitter * eye, lower=True)
        except LinAlgError:
            jitter *= 10.0
    w, vecs = eigh(cov)
    return vecs * np.sqrt(np.maximum(w, 0.0))


def thompson_select(model: GpModel, candidates: np.ndarray, rng: np.random.Generator, batch: int = 1) -> np.ndarray:
    """
    Draw one joint posterior sample over `candidates` and return the indices
    of the `batch` smallest sampled values.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if batch > candidates.shape[0]:
        raise ContractViolationError(f"batch {batch} exceeds {candidates.shape[0]} candidates")
    mean, cov = posterior_covariance(model, candidates)
    draw = mean + _sqrt_psd(cov) @ rng.standard_normal(candidates.shape[0])
    return np.argsort(draw, kind="stable")[:batch]


def correlation_lengths(model: GpModel) -> np.ndarray:
    """ARD lengthscales in the units of the original box."""
    return model.params.lengthscales * model.box.widths


def correlation_scalar(model: GpModel, low: float = 0.1, high: float = 2.0) -> float:
    """Geometric mean of the unit-cube lengthscales, clamped to [low, high]."""
    return float(np.clip(math.exp(float(np.mean(np.log(model.params.lengthscales)))), low, high))


__all__ = [
    "KernelParams",
    "GpModel",
    "matern52",
    "build_model",
    "log_marginal_likelihood",
    "standardize",
    "fit_gp",
    "predict",
    "predict_batch",
    "posterior_covariance",
    "ei_from_moments",
    "expected_improvement",
    "expected_improvement_batch",
    "thompson_select",
    "correlation_lengths",
    "correlation_scalar",
]
