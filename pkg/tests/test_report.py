import numpy as np

from diffbayes.report import learning_curves, render_learning_curve
from diffbayes.sim import MetricsRow


def row(t, pipeline, msd):
    return MetricsRow(t=t, pipeline=pipeline, sq_errors=(msd,), msd=msd, sigma2_hats=(0.1,))


class TestLearningCurves:
    def test_groups_by_pipeline(self):
        rows = [row(1, "a", 2.0), row(2, "a", 1.0), row(1, "b", 4.0)]
        curves = learning_curves(rows)
        assert set(curves) == {"a", "b"}
        ts, msd = curves["a"]
        assert list(ts) == [1, 2]
        assert list(msd) == [2.0, 1.0]

    def test_median_over_duplicate_entries(self):
        rows = [row(1, "a", 1.0), row(1, "a", 3.0), row(1, "a", 100.0)]
        _, msd = learning_curves(rows)["a"]
        assert msd[0] == 3.0

    def test_steps_sorted(self):
        rows = [row(3, "a", 1.0), row(1, "a", 2.0), row(2, "a", 3.0)]
        ts, _ = learning_curves(rows)["a"]
        assert list(ts) == [1, 2, 3]


class TestRender:
    def test_writes_png(self, tmp_path):
        rows = [row(t, p, 1.0 / t) for t in range(1, 6) for p in ("x", "y")]
        out = tmp_path / "curve.png"
        render_learning_curve(rows, out, title="demo")
        data = out.read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(data) > 1000

    def test_empty_rows_still_renders(self, tmp_path):
        out = tmp_path / "empty.png"
        render_learning_curve([], out)
        assert out.exists()
