import json

import numpy as np
import pytest

from mc_descent.errors import AggregationError, TraceIOError
from mc_descent.harness.summary import (
    CURVE_NAME,
    SUMMARY_NAME,
    best_algorithm,
    compare,
    format_cell,
    load_run_directory,
    padded_running_best,
    summarize,
    summarize_directory,
)
from mc_descent.harness.trace import RunTrace, TraceRecord, write_trace


def make_trace(values: list[float], algorithm: str = "mctd", benchmark: str = "ackley-2d", seed: int = 0) -> RunTrace:
    records, best = [], np.inf
    for i, y in enumerate(values, start=1):
        best = min(best, y)
        records.append(TraceRecord(i, np.array([float(i), 0.0]), y, best, "n0"))
    return RunTrace(records=records, seed=seed, benchmark=benchmark, algorithm=algorithm)


class TestFormatting:
    def test_cell(self):
        """Test cell."""
        assert format_cell(0.0712, 2342) == "0.07/2342"
        assert format_cell(-8.456, 17) == "-8.46/17"


class TestSummarize:
    """Best value / earliest step and convergence curves."""

    def test_single_trace(self):
        """Test single trace."""
        row = summarize([make_trace([3.0, 1.0, 2.0, 1.0])]).rows[0]
        assert (row.best_y, row.earliest_step, row.seeds) == (1.0, 2, 1)
        assert row.cell == "1.00/2"

    def test_best_over_seeds(self):
        """Test best over seeds."""
        traces = [make_trace([3.0, 2.0], seed=0), make_trace([4.0, 4.0, 1.5], seed=1), make_trace([1.5], seed=2)]
        row = summarize(traces).rows[0]
        assert row.best_y == 1.5
        assert row.earliest_step == 1
        assert row.mean_best == pytest.approx((2.0 + 1.5 + 1.5) / 3)

    def test_identical_traces_have_zero_spread(self):
        """Test identical traces have zero spread."""
        table = summarize([make_trace([3.0, 1.0], seed=s) for s in range(3)])
        assert table.rows[0].std_best == 0.0
        np.testing.assert_array_equal(table.curves["mctd"].std, [0.0, 0.0])

    def test_order_does_not_matter(self):
        """Test order does not matter."""
        traces = [make_trace([5.0, 2.0], seed=0), make_trace([4.0, 3.0, 0.5], seed=1), make_trace([1.0], seed=2)]
        a = summarize(traces)
        b = summarize(traces[::-1])
        (ra,), (rb,) = a.rows, b.rows
        assert (ra.best_y, ra.earliest_step, ra.seeds) == (rb.best_y, rb.earliest_step, rb.seeds)
        assert ra.mean_best == pytest.approx(rb.mean_best)
        assert ra.std_best == pytest.approx(rb.std_best)
        np.testing.assert_allclose(a.curves["mctd"].mean, b.curves["mctd"].mean)

    def test_grouped_by_algorithm(self):
        """Test grouped by algorithm."""
        table = summarize([make_trace([2.0], "random"), make_trace([1.0], "mctd")])
        assert [r.algorithm for r in table.rows] == ["mctd", "random"]
        assert set(table.curves) == {"mctd", "random"}

    def test_padding_with_last_value(self):
        """Test padding with last value."""
        curves = padded_running_best([make_trace([3.0, 1.0, 2.0]), make_trace([2.0])])
        np.testing.assert_array_equal(curves, [[3.0, 1.0, 1.0], [2.0, 2.0, 2.0]])

    def test_mixed_benchmarks(self):
        """Test mixed benchmarks."""
        with pytest.raises(AggregationError):
            summarize([make_trace([1.0], benchmark="ackley-2d"), make_trace([1.0], benchmark="ackley-3d")])

    def test_empty_inputs(self):
        """Test empty inputs."""
        with pytest.raises(AggregationError):
            summarize([])
        with pytest.raises(AggregationError):
            summarize([RunTrace(benchmark="ackley-2d")])


class TestDirectories:
    """Reading run directories and writing summaries."""

    def _write_runs(self, directory, algorithm_values: dict[int, list[float]]) -> None:
        for seed, values in algorithm_values.items():
            write_trace(make_trace(values, seed=seed), directory / f"trace_seed{seed}.csv")

    def test_external_directory_labels(self, tmp_path):
        """Test external directory labels."""
        directory = tmp_path / "ackley-2d" / "external"
        self._write_runs(directory, {0: [2.0, 1.0], 3: [4.0]})
        traces = load_run_directory(directory)
        assert [t.seed for t in traces] == [0, 3]
        assert {t.algorithm for t in traces} == {"external"}
        assert {t.benchmark for t in traces} == {"ackley-2d"}

    def test_summarize_directory_writes_files(self, tmp_path):
        """Test summarize directory writes files."""
        directory = tmp_path / "ackley-2d" / "mctd"
        self._write_runs(directory, {0: [2.0, 1.0], 1: [3.0, 0.5, 0.7]})
        table = summarize_directory(directory)
        assert table.rows[0].cell == "0.50/2"
        payload = json.loads((directory / SUMMARY_NAME).read_text(encoding="utf-8"))
        assert payload["rows"][0]["cell"] == "0.50/2"
        assert (directory / CURVE_NAME).read_text(encoding="utf-8").splitlines()[0] == "eval_index,mean,std"
        # The curve file is not mistaken for a trace on a second pass.
        assert summarize_directory(directory).rows == table.rows

    def test_missing_directory(self, tmp_path):
        """Test missing directory."""
        with pytest.raises(TraceIOError):
            load_run_directory(tmp_path / "nothing")

    def test_directory_without_traces(self, tmp_path):
        """Test directory without traces."""
        with pytest.raises(TraceIOError):
            load_run_directory(tmp_path)

    def test_compare_two_algorithms(self, tmp_path):
        """Test compare two algorithms."""
        self._write_runs(tmp_path / "ackley-2d" / "mctd", {0: [2.0, 0.1]})
        self._write_runs(tmp_path / "ackley-2d" / "random", {0: [1.0, 0.9, 0.5]})
        results = compare([tmp_path / "ackley-2d" / "mctd", tmp_path / "ackley-2d" / "random"])
        rows = results["ackley-2d"]
        assert rows["mctd"].cell == "0.10/2"
        assert rows["random"].cell == "0.50/3"
        assert best_algorithm(rows) == "mctd"

    def test_compare_nothing(self):
        """Test compare nothing."""
        with pytest.raises(AggregationError):
            compare([])


class TestBestAlgorithm:
    def test_ties_go_to_earlier_step(self):
        """Test ties go to earlier step."""
        table = summarize([make_trace([1.0, 0.0], "late"), make_trace([0.0], "early")])
        assert best_algorithm({r.algorithm: r for r in table.rows}) == "early"
