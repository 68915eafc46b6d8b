import math

import numpy as np
import pytest

from mc_descent.errors import ConfigError
from mc_descent.mctd.benchmarks import (
    ackley,
    make_benchmark,
    michalewicz,
    tabular_objective,
    tabular_table,
    unique_cells,
)
from mc_descent.mctd.domain import evaluate


def ackley_fsum(x) -> float:
    """Independent high-precision evaluation of the standard Ackley form."""
    n = len(x)
    squares = math.fsum(v * v for v in x) / n
    cosines = math.fsum(math.cos(2 * math.pi * v) for v in x) / n
    return -20.0 * math.exp(-0.2 * math.sqrt(squares)) - math.exp(cosines) + 20.0 + math.e


class TestAckley:
    """Ackley function values."""

    def test_origin_is_exactly_zero(self):
        """Test origin is exactly zero."""
        assert ackley(np.zeros(10)) == 0.0

    def test_unit_vector_value(self):
        """x = (1, 0, ..., 0) in 10-d matches the closed form."""
        x = np.zeros(10)
        x[0] = 1.0
        expected = -20.0 * math.exp(-0.2 * math.sqrt(0.1)) - math.exp((9 + 1) / 10) + 20.0 + math.e
        assert ackley(x) == pytest.approx(expected, abs=1e-12)

    def test_matches_high_precision_oracle(self, rng):
        """Test matches high precision oracle."""
        for _ in range(20):
            x = rng.uniform(-5.0, 10.0, size=7)
            assert ackley(x) == pytest.approx(ackley_fsum(list(x)), abs=1e-10)

    def test_positive_away_from_origin(self, rng):
        """Test that every non-zero point has a strictly positive value."""
        for _ in range(1000):
            x = rng.uniform(-5.0, 10.0, size=int(rng.integers(1, 21)))
            assert np.any(x != 0.0)
            assert ackley(x) > 0.0

    def test_symmetric_under_negation(self):
        """Test ackley((1, 1)) == ackley((-1, -1))."""
        assert ackley(np.array([1.0, 1.0])) == pytest.approx(ackley(np.array([-1.0, -1.0])), abs=1e-15)

    def test_registry_box(self):
        """Test registry box."""
        obj = make_benchmark("ackley", 5)
        np.testing.assert_allclose(obj.box.lower, -5.0)
        np.testing.assert_allclose(obj.box.upper, 10.0)
        assert obj.known_optimum == 0.0


class TestMichalewicz:
    """Michalewicz function values."""

    def test_two_dimensional_optimum(self):
        """The 2-d minimum is about -1.8013 at (2.20, 1.57)."""
        assert michalewicz(np.array([2.20290552, 1.57079633])) == pytest.approx(-1.8013, abs=1e-4)

    def test_non_positive(self, rng):
        """Test non positive."""
        for _ in range(20):
            assert michalewicz(rng.uniform(0.0, math.pi, size=5)) <= 0.0

    def test_registry_box(self):
        """Test registry box."""
        obj = make_benchmark("michalewicz", 3)
        np.testing.assert_allclose(obj.box.upper, math.pi)
        assert obj.known_optimum is None


class TestTabular:
    """Quantized tabular search space."""

    def test_table_shape_and_floor(self):
        """Test table shape and floor."""
        table = tabular_table(6)
        assert table.shape == (5,) * 6
        assert table.min() >= 0.5

    def test_deterministic(self):
        """Test deterministic."""
        np.testing.assert_array_equal(tabular_table(4), tabular_table(4))

    def test_snapping(self):
        """f([1.1]^6) == f([1]^6)."""
        obj = tabular_objective(6)
        assert evaluate(obj, np.full(6, 1.1)).y == evaluate(obj, np.full(6, 1.0)).y

    def test_known_optimum_is_table_min(self):
        """Test known optimum is table min."""
        table = tabular_table(6)
        obj = tabular_objective(6)
        assert obj.known_optimum == float(table.min())
        best_cell = np.array(np.unravel_index(np.argmin(table), table.shape)) + 1.0
        evaluate(obj, best_cell)
        assert obj.optimum_reached

    def test_too_large(self):
        """Test too large."""
        with pytest.raises(ConfigError):
            tabular_table(9)

    def test_unique_cells(self):
        """Test unique cells."""
        obj = tabular_objective(2)
        points = np.array([[1.1, 1.0], [0.9, 1.2], [2.0, 1.0], [5.4, 5.4]])
        assert unique_cells(points, obj.box) == 3


class TestRegistry:
    """Benchmark lookup by name."""

    def test_unknown_name(self):
        """Test unknown name."""
        with pytest.raises(ConfigError):
            make_benchmark("rosenbrock", 2)

    def test_bad_dimension(self):
        """Test bad dimension."""
        with pytest.raises(ConfigError):
            make_benchmark("ackley", 0)

    def test_fresh_objective_each_call(self):
        """Test fresh objective each call."""
        a = make_benchmark("ackley", 2)
        evaluate(a, np.zeros(2))
        assert make_benchmark("ackley", 2).eval_count == 0
