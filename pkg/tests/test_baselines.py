import numpy as np
import pytest

from mc_descent.config import TrustRegionConfig
from mc_descent.errors import ContractViolationError
from mc_descent.harness.baselines import (
    initial_simplex,
    nelder_mead_run,
    random_search_run,
    shrink_simplex,
    turbo_baseline_run,
)
from mc_descent.mctd.benchmarks import make_benchmark
from mc_descent.mctd.domain import DomainBox, Objective


def offset_quadratic(x: np.ndarray) -> float:
    return float((x[0] - 0.3) ** 2 + (x[1] + 0.2) ** 2)


class TestRandomSearch:
    def test_budget_and_monotone_best(self, rng):
        """Test budget and monotone best."""
        obj = make_benchmark("ackley", 3)
        trace = random_search_run(obj, 10, rng)
        assert len(trace) == 10
        assert np.all(np.diff(trace.running_best()) <= 0)
        assert {r.node for r in trace.records} == {"random"}
        assert trace.algorithm == "random"

    def test_deterministic(self):
        """Test deterministic."""
        a = random_search_run(make_benchmark("michalewicz", 2), 20, np.random.default_rng(3))
        b = random_search_run(make_benchmark("michalewicz", 2), 20, np.random.default_rng(3))
        np.testing.assert_array_equal(a.points(), b.points())

    def test_stops_at_known_optimum(self, rng):
        """25 cells and 500 draws: the best cell is found and the run ends early."""
        obj = make_benchmark("quantized-tabular", 2)
        trace = random_search_run(obj, 500, rng)
        assert len(trace) < 500
        assert trace.best_y == obj.known_optimum


class TestNelderMead:
    """Bounded simplex search."""

    def test_quadratic_converges(self):
        """Test quadratic converges."""
        for seed in range(3):
            obj = Objective(name="quad", eval_fn=offset_quadratic, box=DomainBox.cube(-1.0, 1.0, 2))
            trace = nelder_mead_run(obj, 200, np.random.default_rng(seed))
            assert trace.best_y <= 1e-6

    def test_exact_budget(self, rng):
        """Test exact budget."""
        obj = make_benchmark("ackley", 3)
        trace = nelder_mead_run(obj, 50, rng)
        assert len(trace) == 50
        assert obj.eval_count == 50

    def test_budget_too_small(self, rng):
        """Test budget too small."""
        with pytest.raises(ContractViolationError):
            nelder_mead_run(make_benchmark("ackley", 3), 4, rng)

    def test_shrink_halves_diameter(self):
        """Test shrink halves diameter."""
        vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
        shrunk = shrink_simplex(vertices)
        np.testing.assert_array_equal(shrunk[0], vertices[0])
        diameter = max(np.linalg.norm(a - b) for a in vertices for b in vertices)
        shrunk_diameter = max(np.linalg.norm(a - b) for a in shrunk for b in shrunk)
        assert shrunk_diameter == pytest.approx(diameter / 2)

    def test_initial_simplex_in_box(self):
        """Test initial simplex in box."""
        obj = make_benchmark("ackley", 4)
        for seed in range(50):
            vertices = initial_simplex(obj, np.random.default_rng(seed))
            assert vertices.shape == (5, 4)
            assert all(obj.box.contains(v) for v in vertices)
            assert np.linalg.matrix_rank(vertices[1:] - vertices[0]) == 4


class TestTurbo:
    """Standalone trust-region BO with restarts."""

    def test_initial_design_then_bo(self, rng, fast_tr, fast_gp):
        """Test initial design then bo."""
        obj = make_benchmark("ackley", 2)
        trace = turbo_baseline_run(obj, 40, rng, fast_tr, fast_gp)
        assert len(trace) == 40
        assert [r.node for r in trace.records[:10]] == ["turbo-init"] * 10
        assert trace.records[10].node == "turbo"
        assert trace.algorithm == "turbo"

    def test_restarts_after_collapse(self, rng, fast_gp):
        """With one failure allowed, the first non-improving batch drops below length_min."""
        config = TrustRegionConfig(
            length_init=0.8, length_min=0.5, failure_tolerance=1, success_tolerance=10,
            init_points=10, candidates_per_dim=20, max_candidates=100,
        )
        obj = make_benchmark("ackley", 2)
        trace = turbo_baseline_run(obj, 80, rng, config, fast_gp)
        assert len(trace) == 80
        assert sum(r.node == "turbo-init" for r in trace.records) > 10

    def test_budget_below_design(self, rng, fast_tr):
        """Test budget below design."""
        with pytest.raises(ContractViolationError):
            turbo_baseline_run(make_benchmark("ackley", 2), 5, rng, fast_tr)
