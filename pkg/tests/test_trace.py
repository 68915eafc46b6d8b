import numpy as np
import pytest

from mc_descent.errors import TraceIOError
from mc_descent.harness.trace import RunTrace, TraceRecord, TraceRecorder, read_trace, trace_header, write_trace
from mc_descent.mctd.domain import evaluate
from tests.conftest import make_sphere


def recorded_trace(values: list[float]) -> RunTrace:
    recorder = TraceRecorder("t")
    obj = make_sphere(dim=1, low=-10.0, high=10.0)
    obj.listeners.append(recorder)
    for v in values:
        evaluate(obj, np.array([v]))
    return recorder.trace(seed=3, benchmark=obj.name, algorithm="random")


class TestRecorder:
    """Listener bookkeeping."""

    def test_running_best(self):
        """Test running best."""
        trace = recorded_trace([2.0, 1.0, 3.0, 0.5])
        assert [r.y for r in trace.records] == [4.0, 1.0, 9.0, 0.25]
        assert trace.running_best().tolist() == [4.0, 1.0, 1.0, 0.25]
        assert trace.best_y == 0.25
        assert trace.seed == 3

    def test_earliest_step(self):
        """The first index at which the running best equals the final best."""
        assert recorded_trace([2.0, 1.0, 3.0, 1.0]).earliest_step == 2

    def test_callable_tag(self):
        """Test callable tag."""
        labels = iter(["a", "b"])
        recorder = TraceRecorder(lambda: next(labels))
        obj = make_sphere()
        obj.listeners.append(recorder)
        evaluate(obj, np.zeros(2))
        evaluate(obj, np.zeros(2))
        assert [r.node for r in recorder.records] == ["a", "b"]

    def test_empty_trace_has_no_best(self):
        """Test empty trace has no best."""
        with pytest.raises(ValueError):
            RunTrace().best_y


class TestCsv:
    """On-disk trace format."""

    def test_header(self):
        """Test header."""
        assert trace_header(3) == ["eval_index", "x_0", "x_1", "x_2", "y", "best_y", "node"]

    def test_written_values_read_back_exactly(self, tmp_path):
        """Test written values read back exactly."""
        trace = recorded_trace([0.1, -1.0 / 3.0, 7.25])
        path = write_trace(trace, tmp_path / "nested" / "trace_seed3.csv")
        back = read_trace(path)
        np.testing.assert_array_equal(back.points(), trace.points())
        np.testing.assert_array_equal(back.values(), trace.values())
        np.testing.assert_array_equal(back.running_best(), trace.running_best())
        assert [r.node for r in back.records] == ["t", "t", "t"]
        assert path.read_text(encoding="utf-8").splitlines()[0] == "eval_index,x_0,y,best_y,node"

    def test_missing_file(self, tmp_path):
        """Test missing file."""
        with pytest.raises(TraceIOError):
            read_trace(tmp_path / "absent.csv")

    def test_bad_header(self, tmp_path):
        """Test bad header."""
        path = tmp_path / "bad.csv"
        path.write_text("index,x,y\n1,0.0,1.0\n", encoding="utf-8")
        with pytest.raises(TraceIOError):
            read_trace(path)

    def test_malformed_row(self, tmp_path):
        """Test malformed row."""
        path = tmp_path / "bad.csv"
        path.write_text("eval_index,x_0,y,best_y,node\n1,abc,1.0,1.0,n0\n", encoding="utf-8")
        with pytest.raises(TraceIOError):
            read_trace(path)

    def test_empty_file(self, tmp_path):
        """Test empty file."""
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(TraceIOError):
            read_trace(path)

    def test_unwritable_target(self, tmp_path):
        """Test unwritable target."""
        blocker = tmp_path / "file.txt"
        blocker.write_text("x", encoding="utf-8")
        trace = RunTrace(records=[TraceRecord(1, np.zeros(1), 0.0, 0.0, "n0")])
        with pytest.raises(TraceIOError):
            write_trace(trace, blocker / "trace.csv")
