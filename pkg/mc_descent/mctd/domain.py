"""
Objective functions, the compact search box and ground-truth accounting.

Every ground-truth call in the toolkit goes through `evaluate`, which clips
the point into the box, bumps the objective's counter and notifies the
listeners (the trace recorder is one). Nothing else calls `eval_fn` directly.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from mc_descent.errors import BudgetExhaustedError, ContractViolationError

OPTIMUM_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class DomainBox:
    """Axis-aligned box with per-dimension bounds."""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape or lower.size == 0:
            raise ContractViolationError("lower and upper bounds must be non-empty and of equal length")
        if not np.all(lower < upper):
            raise ContractViolationError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, low: float, high: float, dim: int) -> "DomainBox":
        return cls(np.full(dim, low, dtype=float), np.full(dim, high, dtype=float))

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.widths

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.widths

    def __str__(self) -> str:
        return f"DomainBox(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Sample:
    """One evaluated point; `index` is the 1-based evaluation ordinal."""
    x: np.ndarray
    y: float
    index: int


@dataclass(eq=False)
class Objective:
    """A black-box function over a box, with evaluation accounting."""
    name: str
    eval_fn: Callable[[np.ndarray], float]
    box: DomainBox
    known_optimum: float | None = None
    # Hard cap; evaluate() raises BudgetExhaustedError past it.
    max_evals: int | None = None
    eval_count: int = 0
    best: Sample | None = None
    listeners: list[Callable[[Sample], None]] = field(default_factory=list)

    @property
    def remaining(self) -> int | None:
        if self.max_evals is None:
            return None
        return max(self.max_evals - self.eval_count, 0)

    @property
    def exhausted(self) -> bool:
        return self.max_evals is not None and self.eval_count >= self.max_evals

    @property
    def optimum_reached(self) -> bool:
        if self.known_optimum is None or self.best is None:
            return False
        return abs(self.best.y - self.known_optimum) <= OPTIMUM_TOLERANCE


def evaluate(obj: Objective, x: np.ndarray | Sequence[float]) -> Sample:
    """Evaluate the objective at `x` clipped into the box; exactly one counted call."""
    point = np.asarray(x, dtype=float)
    if point.shape != (obj.box.dim,):
        raise ContractViolationError(
            f"point of shape {point.shape} does not match domain dimension {obj.box.dim}"
        )
    if obj.exhausted:
        raise BudgetExhaustedError(f"{obj.name}: evaluation budget of {obj.max_evals} exhausted")
    clipped = obj.box.clip(point)
    y = float(obj.eval_fn(clipped))
    obj.eval_count += 1
    sample = Sample(x=clipped, y=y, index=obj.eval_count)
    if obj.best is None or y < obj.best.y:
        obj.best = sample
    for listener in obj.listeners:
        listener(sample)
    return sample


def _as_levels(levels: int | Sequence[int], dim: int) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(levels, dtype=int), (dim,)).copy()
    if np.any(arr < 2):
        raise ContractViolationError("every dimension needs at least 2 grid levels")
    return arr


def snap_to_grid(box: DomainBox, levels: int | Sequence[int], x: np.ndarray) -> np.ndarray:
    """
    Snap each coordinate to the centre of its grid cell.

    Dimension i is cut into `levels[i]` equal cells; the grid points are the
    cell centres, so [0.5, 5.5] with 5 levels has grid points 1, 2, 3, 4, 5.
    """
    n_levels = _as_levels(levels, box.dim)
    cell_width = box.widths / n_levels
    cell = np.floor((np.asarray(x, dtype=float) - box.lower) / cell_width)
    cell = np.clip(cell, 0, n_levels - 1)
    return box.lower + (cell + 0.5) * cell_width


def quantize_wrap(obj: Objective, levels: int | Sequence[int]) -> Objective:
    """Wrap `obj` so inputs in the same grid cell evaluate identically."""
    n_levels = _as_levels(levels, obj.box.dim)
    inner = obj.eval_fn

    def snapped(x: np.ndarray) -> float:
        return inner(snap_to_grid(obj.box, n_levels, x))

    return Objective(
        name=obj.name,
        eval_fn=snapped,
        box=obj.box,
        known_optimum=obj.known_optimum,
    )


def sample_uniform(box: DomainBox, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(box.lower, box.upper)


def latin_hypercube(box: DomainBox, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw `n` points so that, per dimension, each of the n equal-width strata
    holds exactly one point. Returns an (n, dim) array.
    """
    if n < 1:
        raise ContractViolationError("latin_hypercube needs n >= 1")
    strata = np.column_stack([rng.permutation(n) for _ in range(box.dim)])
    unit = (strata + rng.random((n, box.dim))) / n
    return box.from_unit(unit)


__all__ = [
    "OPTIMUM_TOLERANCE",
    "DomainBox",
    "Sample",
    "Objective",
    "evaluate",
    "snap_to_grid",
    "quantize_wrap",
    "sample_uniform",
    "latin_hypercube",
]
