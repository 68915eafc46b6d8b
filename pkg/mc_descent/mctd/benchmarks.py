"""
Synthetic benchmark functions and the name-keyed registry used by the harness.

- Ackley: many shallow local minima around a single global one at the origin.
- Michalewicz: steep valleys and ridges; minimum near -dim for large dim.
- Quantized tabular: a lookup table over discrete layer choices per cell
  position, reached through real-valued inputs snapped to the nearest choice.
"""

import math
from collections.abc import Callable

import numpy as np

from mc_descent.errors import ConfigError
from mc_descent.mctd.domain import DomainBox, Objective, quantize_wrap, snap_to_grid

ACKLEY_A = 20.0
ACKLEY_B = 0.2
ACKLEY_C = 2.0 * math.pi
MICHALEWICZ_M = 10

TABULAR_CHOICES = 5
TABULAR_SEED = 201
# Largest table the tabular benchmark will materialize (5**8 cells).
TABULAR_MAX_CELLS = 5**8


def ackley(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    radial = math.exp(-ACKLEY_B * math.sqrt(float(np.mean(x**2))))
    periodic = math.exp(float(np.mean(np.cos(ACKLEY_C * x))))
    # Written as a(1 - radial) + (e - periodic) so the origin gives exactly 0.
    return ACKLEY_A * (1.0 - radial) + (math.e - periodic)


def michalewicz(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.size + 1)
    return -float(np.sum(np.sin(x) * np.sin(i * x**2 / math.pi) ** (2 * MICHALEWICZ_M)))


def ackley_objective(dim: int) -> Objective:
    return Objective(name=f"ackley-{dim}d", eval_fn=ackley, box=DomainBox.cube(-5.0, 10.0, dim), known_optimum=0.0)


def michalewicz_objective(dim: int) -> Objective:
    return Objective(name=f"michalewicz-{dim}d", eval_fn=michalewicz, box=DomainBox.cube(0.0, math.pi, dim))


def tabular_table(dim: int, choices: int = TABULAR_CHOICES, seed: int = TABULAR_SEED) -> np.ndarray:
    """
    Build a deterministic error-rate table (percent) indexed by one layer
    choice per cell position. Values combine per-position effects, interactions
    between neighbouring positions and a small per-architecture residual.
    """
    if choices**dim > TABULAR_MAX_CELLS:
        raise ConfigError(f"quantized-tabular supports at most {TABULAR_MAX_CELLS} cells, got {choices}**{dim}")
    rng = np.random.default_rng(seed)
    position_effect = rng.normal(0.0, 2.0, size=(dim, choices))
    neighbour_effect = rng.normal(0.0, 0.7, size=(max(dim - 1, 0), choices, choices))
    residual = rng.normal(0.0, 0.3, size=(choices,) * dim)

    table = 15.0 + residual
    for i in range(dim):
        shape = [1] * dim
        shape[i] = choices
        table = table + position_effect[i].reshape(shape)
    for i in range(dim - 1):
        shape = [1] * dim
        shape[i] = choices
        shape[i + 1] = choices
        table = table + neighbour_effect[i].reshape(shape)
    return np.maximum(table, 0.5)


def tabular_objective(dim: int = 6, choices: int = TABULAR_CHOICES, seed: int = TABULAR_SEED) -> Objective:
    """Tabular search space over [0.5, choices + 0.5]^dim; inputs snap to choices 1..choices."""
    table = tabular_table(dim, choices, seed)

    def lookup(x: np.ndarray) -> float:
        idx = np.clip(np.rint(x).astype(int) - 1, 0, choices - 1)
        return float(table[tuple(idx)])

    inner = Objective(
        name=f"quantized-tabular-{dim}d",
        eval_fn=lookup,
        box=DomainBox.cube(0.5, choices + 0.5, dim),
        known_optimum=float(table.min()),
    )
    return quantize_wrap(inner, choices)


def unique_cells(points: np.ndarray, box: DomainBox, levels: int = TABULAR_CHOICES) -> int:
    """Number of distinct grid cells among `points` (distinct architectures examined)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return 0
    snapped = np.array([snap_to_grid(box, levels, p) for p in pts])
    return int(np.unique(snapped, axis=0).shape[0])


BENCHMARKS: dict[str, Callable[[int], Objective]] = {
    "ackley": ackley_objective,
    "michalewicz": michalewicz_objective,
    "quantized-tabular": tabular_objective,
}


def make_benchmark(name: str, dim: int) -> Objective:
    """Look up a benchmark by name and instantiate it at `dim` dimensions."""
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise ConfigError(f"Unknown benchmark '{name}'; choose one of {sorted(BENCHMARKS)}") from None
    if dim < 1:
        raise ConfigError("benchmark dimension must be positive")
    return factory(dim)


__all__ = [
    "ackley",
    "michalewicz",
    "ackley_objective",
    "michalewicz_objective",
    "tabular_table",
    "tabular_objective",
    "unique_cells",
    "BENCHMARKS",
    "make_benchmark",
]
