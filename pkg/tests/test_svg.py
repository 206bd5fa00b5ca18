import numpy as np
from pytest import raises as assert_raises

from sosinfer.svg import line_chart


class TestLineChart:
    def test_structure(self):
        out = line_chart(
            [("a", [0, 1, 2], [1.0, 0.5, 2.0]), ("b", [0, 1, 2], [0.1, 0.2, 0.3])],
            title="demo",
            xlabel="x",
            ylabel="y",
        )
        assert out.startswith("<svg")
        assert out.rstrip().endswith("</svg>")
        assert out.count("<polyline") == 2
        assert ">demo</text>" in out
        assert ">a</text>" in out and ">b</text>" in out
        assert ">x</text>" in out and ">y</text>" in out

    def test_unlabeled_series_has_no_legend(self):
        out = line_chart([("", [0, 1], [0, 1])])
        assert out.count("<polyline") == 1
        # an empty label must not leave an empty legend entry behind
        assert "></text>" not in out

    def test_constant_series_ok(self):
        out = line_chart([("flat", [0.0, 1.0], [2.0, 2.0])])
        assert "<polyline" in out

    def test_single_x_value_ok(self):
        out = line_chart([("pt", [1.0, 1.0], [0.0, 1.0])])
        assert "<polyline" in out

    def test_empty_series_rejected(self):
        assert_raises(ValueError, line_chart, [])
        assert_raises(ValueError, line_chart, [("a", [], [])])

    def test_nonfinite_rejected(self):
        assert_raises(ValueError, line_chart, [("a", [0, 1], [np.nan, 1.0])])
        assert_raises(ValueError, line_chart, [("a", [0, np.inf], [0.0, 1.0])])
