"""
Validated configuration for the optimizer engine and the experiment harness.

Every model forbids unknown keys, so a typo in a TOML file fails loudly
instead of silently running with a default. Defaults follow the published
TuRBO-1 conventions and the benchmark presets mirror the per-function
hyperparameter rows used for Ackley, Michalewicz and the tabular search space.
"""

import hashlib
import json
import math
import os
import tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mc_descent.errors import ConfigError

BenchmarkName = Literal["ackley", "michalewicz", "quantized-tabular"]
AlgorithmName = Literal["mctd", "random", "nelder-mead", "turbo"]

OUT_DIR_ENV = "MCTD_OUT_DIR"


class UctParams(BaseModel):
    """Weights of the node score, the exploration pseudo-child and the leaf test."""
    model_config = ConfigDict(extra='forbid')

    c_d: float = Field(10.0, ge=0)
    c_p: float = Field(0.5, ge=0)
    c_p_prime: float = Field(0.1, ge=0)
    c_d_dprime: float = Field(50.0, ge=0)
    c_p_dprime: float = Field(0.1, ge=0)
    # Per-call improvement windows; 30 covers one default iteration budget.
    j: int = Field(30, ge=1)
    j_dprime: int = Field(30, ge=1)


class DescentConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    alpha0: float = Field(0.2, gt=0, le=1)
    # None disables the fine-grained line search.
    switch_threshold: float | None = None
    n_directions: int = Field(64, ge=1)
    fine_budget: int = Field(16, ge=3)
    max_walk: int = Field(10, ge=1)
    corr_scalar_min: float = Field(0.1, gt=0)
    corr_scalar_max: float = Field(2.0, gt=0)

    @model_validator(mode='after')
    def _check_corr_bounds(self) -> "DescentConfig":
        if self.corr_scalar_min > self.corr_scalar_max:
            raise ValueError("corr_scalar_min must not exceed corr_scalar_max")
        return self


class TrustRegionConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    length_init: float = Field(0.8, gt=0)
    length_min: float = Field(2.0**-7, gt=0)
    length_max: float = Field(1.6, gt=0)
    success_tolerance: int = Field(3, ge=1)
    # None means max(4, ceil(dim / batch_size)).
    failure_tolerance: int | None = Field(None, ge=1)
    batch_size: int = Field(5, ge=1)
    candidates_per_dim: int = Field(100, ge=1)
    max_candidates: int = Field(2000, ge=1)
    init_points: int = Field(20, ge=2)

    @model_validator(mode='after')
    def _check_lengths(self) -> "TrustRegionConfig":
        if not self.length_min <= self.length_init <= self.length_max:
            raise ValueError("trust region lengths must satisfy min <= init <= max")
        return self

    def fail_tolerance_for(self, dim: int) -> int:
        if self.failure_tolerance is not None:
            return self.failure_tolerance
        return max(4, math.ceil(dim / self.batch_size))

    def candidates_for(self, dim: int) -> int:
        return min(self.candidates_per_dim * dim, self.max_candidates)


class GpConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    lengthscale_bounds: tuple[float, float] = (0.005, 2.0)
    signal_variance_bounds: tuple[float, float] = (0.05, 20.0)
    noise_variance_bounds: tuple[float, float] = (1e-6, 1e-2)
    n_restarts: int = Field(4, ge=1)
    max_mll_evals: int = Field(200, ge=1)
    jitter_init: float = Field(1e-6, gt=0)
    jitter_max: float = Field(1e-2, gt=0)
    train_cap: int = Field(300, ge=2)

    @model_validator(mode='after')
    def _check_bounds(self) -> "GpConfig":
        for name in ("lengthscale_bounds", "signal_variance_bounds", "noise_variance_bounds"):
            low, high = getattr(self, name)
            if not 0 < low < high:
                raise ValueError(f"{name} must satisfy 0 < low < high")
        if self.jitter_init > self.jitter_max:
            raise ValueError("jitter_init must not exceed jitter_max")
        return self


class TreeConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    # Sample count from which a node trains its GP oracle; None means min(2*dim, 40).
    oracle_threshold: int | None = Field(None, ge=2)
    iteration_budget: int = Field(30, ge=1)
    budget_ratio: tuple[int, int] = (1, 2)
    expand_min_fraction: float = Field(0.1, gt=0, le=1)
    expand_max_fraction: float = Field(0.5, gt=0, le=1)
    expand_floor_fraction: float = Field(0.01, gt=0, le=1)
    anchor_retries: int = Field(10, ge=1)

    @model_validator(mode='after')
    def _check_ratio(self) -> "TreeConfig":
        descent, bo = self.budget_ratio
        if descent < 0 or bo < 0 or descent + bo == 0:
            raise ValueError("budget_ratio needs non-negative parts with a positive sum")
        if self.expand_min_fraction > self.expand_max_fraction:
            raise ValueError("expand_min_fraction must not exceed expand_max_fraction")
        return self

    def oracle_threshold_for(self, dim: int) -> int:
        if self.oracle_threshold is not None:
            return self.oracle_threshold
        return min(2 * dim, 40)

    def split(self, budget: int) -> tuple[int, int]:
        """Split an iteration budget into (descent calls, BO calls)."""
        descent, bo = self.budget_ratio
        descent_calls = int(round(budget * descent / (descent + bo)))
        return descent_calls, budget - descent_calls


class MctdConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    uct: UctParams = UctParams()
    descent: DescentConfig = DescentConfig()
    trust_region: TrustRegionConfig = TrustRegionConfig()
    gp: GpConfig = GpConfig()
    tree: TreeConfig = TreeConfig()


class RunConfig(BaseModel):
    """One experiment: a benchmark, an algorithm and the seeds to run it with."""
    model_config = ConfigDict(extra='forbid')

    benchmark: BenchmarkName = "ackley"
    dim: int = Field(10, ge=1)
    algorithm: AlgorithmName = "mctd"
    max_evals: int = Field(500, ge=1)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1)
    workers: int = Field(1, ge=1)
    output_dir: Path | None = None
    preset: bool = True
    mctd: MctdConfig = MctdConfig()

    @model_validator(mode='after')
    def _check_budget(self) -> "RunConfig":
        match self.algorithm:
            case "nelder-mead" if self.max_evals < self.dim + 2:
                raise ValueError("nelder-mead needs max_evals >= dim + 2")
            case "turbo" if self.max_evals < self.mctd.trust_region.init_points:
                raise ValueError("turbo needs max_evals >= init_points")
            case "mctd" if self.max_evals < self.mctd.tree.iteration_budget:
                raise ValueError("mctd needs max_evals >= iteration_budget")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be unique")
        return self

    def resolved_output_dir(self) -> Path:
        if self.output_dir is not None:
            return self.output_dir
        root = Path(os.environ.get(OUT_DIR_ENV, "runs"))
        return root / f"{self.benchmark}-{self.dim}d" / self.algorithm

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode='json'), sort_keys=True, separators=(",", ":"))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def benchmark_preset(benchmark: str, dim: int) -> dict[str, Any]:
    """Per-benchmark MCTD hyperparameters, as a partial `MctdConfig` dict."""
    match benchmark:
        case "ackley" if dim >= 100:
            return {
                "tree": {"budget_ratio": [1, 1]},
                "descent": {"alpha0": 0.2, "switch_threshold": 4.0},
                "uct": {"c_d": 20.0, "c_p": 0.5, "c_p_prime": 0.1, "c_d_dprime": 5.0, "c_p_dprime": 0.1},
            }
        case "ackley":
            return {
                "tree": {"budget_ratio": [1, 1]},
                "descent": {"alpha0": 0.2, "switch_threshold": 10.0},
                "uct": {"c_d": 10.0, "c_p": 0.5, "c_p_prime": 0.1, "c_d_dprime": 50.0, "c_p_dprime": 0.1},
            }
        case "michalewicz":
            # The threshold was tuned at 100 dimensions; the optimum scales with dim.
            return {
                "tree": {"budget_ratio": [1, 2]},
                "descent": {"alpha0": 0.02, "switch_threshold": -30.0 * dim / 100.0},
                "uct": {"c_d": 50.0, "c_p": 1.0, "c_p_prime": 0.2, "c_d_dprime": 1.0, "c_p_dprime": 10.0},
            }
        case "quantized-tabular":
            return {
                "tree": {"budget_ratio": [1, 4]},
                # Table values are error rates in percent; refine below 5%.
                "descent": {"alpha0": 0.5, "switch_threshold": 5.0},
                "uct": {"c_d": 50.0, "c_p": 1.0, "c_p_prime": 1.0, "c_d_dprime": 100.0, "c_p_dprime": 10.0},
            }
        case _:
            return {}


def deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Return `base` updated recursively with `override` (override wins)."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def read_config_file(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        match path.suffix.lower():
            case ".toml":
                return tomllib.loads(path.read_text(encoding="utf-8"))
            case ".json":
                return json.loads(path.read_text(encoding="utf-8"))
            case _:
                raise ConfigError(f"Unsupported config format '{path.suffix}' (use .toml or .json)")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot parse {path}: {e}") from e


def build_run_config(data: dict[str, Any]) -> RunConfig:
    """Validate a raw config dict, layering the benchmark preset underneath it."""
    if data.get("preset", True):
        benchmark = data.get("benchmark", RunConfig.model_fields["benchmark"].default)
        dim = data.get("dim", RunConfig.model_fields["dim"].default)
        preset = benchmark_preset(str(benchmark), int(dim))
        data = deep_merge(data, {"mctd": deep_merge(preset, data.get("mctd", {}))})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def load_run_config(path: Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """
    Load a run configuration from a TOML/JSON file and apply CLI overrides.

    Args:
        path: Optional config file; `.toml` or `.json`.
        overrides: Top-level fields to override; `None` values are ignored.
    """
    data = read_config_file(path) if path is not None else {}
    if overrides:
        data = deep_merge(data, {k: v for k, v in overrides.items() if v is not None})
    return build_run_config(data)


__all__ = [
    "BenchmarkName",
    "AlgorithmName",
    "OUT_DIR_ENV",
    "UctParams",
    "DescentConfig",
    "TrustRegionConfig",
    "GpConfig",
    "TreeConfig",
    "MctdConfig",
    "RunConfig",
    "benchmark_preset",
    "deep_merge",
    "read_config_file",
    "build_run_config",
    "load_run_config",
]
