import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from pytest import raises as assert_raises
from scipy import stats

from sosinfer.baseline import (
    ExponentialBaseline,
    UniformBaseline,
    WeibullBaseline,
)
from sosinfer.data import DataMatrix
from sosinfer.errors import DataError
from sosinfer.params import ModelParams
from sosinfer.sampling import (
    exponential_scale,
    replicate_stream,
    sample,
    sample_exponential_batch,
    spacing_statistics,
)


class TestReplicateStream:
    def test_deterministic(self):
        a = replicate_stream(42, 3).standard_normal(8)
        b = replicate_stream(42, 3).standard_normal(8)
        assert_array_equal(a, b)

    def test_indices_are_disjoint_streams(self):
        a = replicate_stream(42, 0).standard_normal(8)
        b = replicate_stream(42, 1).standard_normal(8)
        assert not np.any(a == b)

    def test_independent_of_draw_order(self):
        # stream k never depends on whether stream k-1 was consumed
        _ = replicate_stream(7, 0).standard_normal(1000)
        c = replicate_stream(7, 5).standard_normal(4)
        d = replicate_stream(7, 5).standard_normal(4)
        assert_array_equal(c, d)


class TestSampleExponentialBatch:
    def test_shape_and_monotonicity(self):
        rng = replicate_stream(0, 0)
        w = sample_exponential_batch(np.array([3.0, 2.0, 1.0]), M=5, size=7, rng=rng)
        assert w.shape == (7, 5, 3)
        assert np.all(np.diff(w, axis=2) > 0)

    def test_first_column_rate(self):
        # W^(1) ~ Exp(gamma_1); check the mean to 4 sigma
        rng = replicate_stream(1, 0)
        w = sample_exponential_batch(np.array([4.0, 1.0]), M=1, size=200000, rng=rng)
        first = w[:, 0, 0]
        assert abs(first.mean() - 0.25) < 4 * first.std() / np.sqrt(first.size)


class TestSample:
    def test_valid_matrix(self):
        params = ModelParams(n=3, r=3, M=4)
        d = sample(params, WeibullBaseline(1.5, 1.0), replicate_stream(2, 0))
        assert isinstance(d, DataMatrix)
        assert (d.M, d.r) == (4, 3)

    def test_uniform_support(self):
        params = ModelParams(n=2, r=2, M=50)
        d = sample(params, UniformBaseline(), replicate_stream(3, 0))
        assert d.values.max() < 1.0

    def test_quantile_transform_equality(self):
        # sampling under F on a stream equals F^{-1} of the uniform sample
        # on the same stream, entry for entry
        params = ModelParams(n=3, r=2, M=6, gamma=(3.0, 1.2))
        bl = WeibullBaseline(0.8, 2.0)
        u = sample(params, UniformBaseline(), replicate_stream(11, 4))
        x = sample(params, bl, replicate_stream(11, 4))
        assert_array_equal(x.values, bl.ppf(u.values))


class TestExponentialScale:
    def test_uniform_is_minus_log1p(self):
        d = DataMatrix([[0.1, 0.5], [0.2, 0.9]])
        w = exponential_scale(d, UniformBaseline())
        assert_allclose(w, -np.log1p(-d.values), rtol=1e-14)

    def test_inverse_of_sampler(self):
        params = ModelParams(n=3, r=3, M=5)
        bl = ExponentialBaseline(mu=0.0, sigma=2.0)
        rng = replicate_stream(5, 0)
        w0 = sample_exponential_batch(params.gamma_arr, 5, 1, rng)[0]
        x = bl.ppf(np.minimum(-np.expm1(-w0), np.nextafter(1.0, 0.0)))
        assert_allclose(exponential_scale(DataMatrix(x), bl), w0, rtol=1e-9)

    def test_outside_support(self):
        with assert_raises(DataError, match=r"system 1, column 2"):
            exponential_scale(DataMatrix([[0.5, 1.5]]), UniformBaseline())

    def test_below_location_shift(self):
        # entries below mu have zero cumulative hazard: not increasing
        bl = ExponentialBaseline(mu=50.0, sigma=300.0)
        with assert_raises(DataError, match=r"not increasing"):
            exponential_scale(DataMatrix([[10.0, 20.0]]), bl)


class TestSpacingStatistics:
    def test_shape_check(self):
        d = DataMatrix([[1.0, 2.0]])
        params = ModelParams(n=3, r=3, M=1)
        assert_raises(ValueError, spacing_statistics, d, UniformBaseline(), params)

    def test_hand_values(self):
        # uniform baseline: Lambda = -log(1-x); spacings times (n-j+1)
        d = DataMatrix([[0.5, 0.75]])
        params = ModelParams(n=2, r=2, M=1)
        s = spacing_statistics(d, UniformBaseline(), params)
        lam = -np.log1p(-d.values[0])
        assert_allclose(s[0], [2.0 * lam[0], 1.0 * (lam[1] - lam[0])])

    def test_normalized_spacings_are_iid_exponential(self):
        # alpha_j * S_i^(j) ~ Exp(1) under the model; KS at the 0.5% level
        params = ModelParams(n=4, r=3, M=2000, gamma=(4.0, 4.5, 1.3))
        bl = WeibullBaseline(1.5, 1.0)
        d = sample(params, bl, replicate_stream(17, 0))
        s = spacing_statistics(d, bl, params)
        alpha = np.asarray(params.alpha)
        for j in range(3):
            pv = stats.kstest(alpha[j] * s[:, j], "expon").pvalue
            assert pv > 0.005
