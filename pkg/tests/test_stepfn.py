import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from pytest import raises as assert_raises

from sosinfer.stepfn import StepFunction


class TestStepFunction:
    def test_right_continuous_call(self):
        f = StepFunction(xs=[1.0, 2.0], ys=[0.5, 1.0])
        assert f(0.9) == 0.0
        assert f(1.0) == 0.5  # the jump counts at its location
        assert f(1.5) == 0.5
        assert f(2.0) == 1.0
        assert f(99.0) == 1.0

    def test_left_limit(self):
        f = StepFunction(xs=[1.0, 2.0], ys=[0.5, 1.0])
        assert f.left_limit(1.0) == 0.0
        assert f.left_limit(2.0) == 0.5
        assert f.left_limit(2.5) == 1.0

    def test_vectorised(self):
        f = StepFunction(xs=[1.0, 2.0], ys=[0.5, 1.0], y0=0.25)
        assert_array_equal(f([0.0, 1.0, 3.0]), [0.25, 0.5, 1.0])
        assert_array_equal(f.left_limit([1.0, 2.0]), [0.25, 0.5])

    def test_scalar_in_scalar_out(self):
        f = StepFunction(xs=[1.0], ys=[1.0])
        assert isinstance(f(0.5), float)

    def test_jump_sizes(self):
        f = StepFunction(xs=[1.0, 2.0, 3.0], ys=[0.2, 0.9, 0.4], y0=0.1)
        assert_allclose(f.jump_sizes, [0.1, 0.7, -0.5])

    def test_empty(self):
        f = StepFunction(xs=[], ys=[], y0=0.3)
        assert f(17.0) == 0.3

    def test_validation(self):
        assert_raises(ValueError, StepFunction, xs=[1.0, 1.0], ys=[0.1, 0.2])
        assert_raises(ValueError, StepFunction, xs=[2.0, 1.0], ys=[0.1, 0.2])
        assert_raises(ValueError, StepFunction, xs=[1.0], ys=[0.1, 0.2])
        assert_raises(ValueError, StepFunction, xs=[[1.0]], ys=[[0.1]])

    def test_arrays_coerced(self):
        f = StepFunction(xs=[1], ys=[1])
        assert isinstance(f.xs, np.ndarray)
        assert f.xs.dtype == np.float64
        assert f.y0 == 0.0
