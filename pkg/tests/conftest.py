import numpy as np
import pytest

from mc_descent.config import GpConfig, MctdConfig, TreeConfig, TrustRegionConfig
from mc_descent.mctd.domain import DomainBox, Objective


def sphere(x: np.ndarray) -> float:
    return float(np.sum(np.asarray(x) ** 2))


def make_sphere(dim: int = 2, low: float = -1.0, high: float = 1.0, max_evals: int | None = None) -> Objective:
    return Objective(name=f"sphere-{dim}d", eval_fn=sphere, box=DomainBox.cube(low, high, dim), max_evals=max_evals)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def fast_gp() -> GpConfig:
    """Single-start GP fit with a short MLL search; enough for unit tests."""
    return GpConfig(n_restarts=1, max_mll_evals=40, train_cap=60)


@pytest.fixture
def fast_tr() -> TrustRegionConfig:
    return TrustRegionConfig(candidates_per_dim=20, max_candidates=100, init_points=10)


@pytest.fixture
def fast_mctd(fast_gp: GpConfig, fast_tr: TrustRegionConfig) -> MctdConfig:
    return MctdConfig(gp=fast_gp, trust_region=fast_tr, tree=TreeConfig(iteration_budget=10, oracle_threshold=8))
