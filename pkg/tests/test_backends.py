"""Agreement between the compiled kernels and the NumPy reference kernels.

Skipped entirely when the extension is not built; the library then runs on
the reference implementation and the remaining test modules cover it.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sosinfer import _pure
from sosinfer.data import DataMatrix, rank_structure
from sosinfer.gof import _sorted_events
from sosinfer.sampling import replicate_stream, sample_exponential_batch
from sosinfer.variance import GL_NODES, GL_WEIGHTS, b_row_sums, build_g_panels

_kernels = pytest.importorskip("sosinfer._kernels")


def _random_batch(gamma, M, B, seed):
    w = sample_exponential_batch(np.asarray(gamma, dtype=np.float64), M, B, replicate_stream(seed, 0))
    ws, stages = _sorted_events(w)
    return ws, stages


def _stage_rows(matrices):
    rows = []
    for m in matrices:
        ranks = rank_structure(DataMatrix(m))
        rows.append(ranks.stage0())
    return np.array(rows, dtype=np.int64)


class TestStageCounts:
    def test_matches_pure(self):
        _, stages = _random_batch([4.0, 2.5, 1.0], 6, 32, 7)
        a = _kernels.stage_counts(stages, 6, 3)
        b = _pure.stage_counts(stages, 6, 3)
        assert_array_equal(a, b)

    def test_read_only_input(self):
        _, stages = _random_batch([3.0, 1.0], 4, 3, 8)
        stages.setflags(write=False)
        assert_array_equal(_kernels.stage_counts(stages, 4, 2), _pure.stage_counts(stages, 4, 2))


class TestFitProfile:
    def test_interior_rows(self):
        _, stages = _random_batch([4.0, 4.2, 3.6], 8, 64, 9)
        counts = _pure.stage_counts(stages, 8, 3)
        out_c = _kernels.fit_profile_fast(counts, stages, 8, 4.0, 1e-10, 100000)
        out_p = _pure.fit_profile_fast(counts, stages, 8, 4.0, 1e-10, 100000)
        gamma_c, ll_c, cl_c, fr_c, _, conv_c, multi_c = out_c
        gamma_p, ll_p, cl_p, fr_p, _, conv_p, multi_p = out_p
        assert_array_equal(cl_c, cl_p)
        assert_array_equal(fr_c, fr_p)
        assert_array_equal(conv_c, conv_p)
        assert_array_equal(multi_c, multi_p)
        ok = ~multi_p
        assert_allclose(gamma_c[ok], gamma_p[ok], rtol=1e-8)
        assert_allclose(ll_c[ok], ll_p[ok], rtol=1e-10, atol=1e-10)

    def test_boundary_rows(self):
        # hand-picked occupancy patterns: an interior row, a row with one
        # degenerate and one divergent singleton, a divergent pair (multi)
        # and a degenerate pair (multi)
        mats = [
            [[1.0, 2.0, 4.0], [3.0, 5.0, 6.0]],
            [[1.0, 2.0, 6.0], [3.0, 4.0, 5.0]],
            [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]],
            [[1.0, 4.0, 5.0], [2.0, 3.0, 6.0]],
        ]
        stages = _stage_rows(mats)
        counts = _pure.stage_counts(stages, 2, 3)
        out_c = _kernels.fit_profile_fast(counts, stages, 2, 2.0, 1e-10, 100000)
        out_p = _pure.fit_profile_fast(counts, stages, 2, 2.0, 1e-10, 100000)
        assert_array_equal(out_c[2], out_p[2])
        assert_array_equal(out_c[3], out_p[3])
        assert_array_equal(out_c[6], out_p[6])
        assert out_p[6].any()  # the batch does exercise the deferred path
        ok = ~out_p[6]
        assert_allclose(out_c[0][ok], out_p[0][ok], rtol=1e-8)
        assert_allclose(out_c[1][ok], out_p[1][ok], rtol=1e-10, atol=1e-10)

    def test_mixed_m2_r2(self):
        # every M=2, r=2 configuration is a boundary case; the two stage
        # patterns are A B B A (degenerate) and A A B B (divergent)
        stages = _stage_rows([[[1.0, 4.0], [2.0, 3.0]], [[1.0, 2.0], [3.0, 4.0]]])
        counts = _pure.stage_counts(stages, 2, 2)
        out_c = _kernels.fit_profile_fast(counts, stages, 2, 2.0, 1e-10, 100000)
        out_p = _pure.fit_profile_fast(counts, stages, 2, 2.0, 1e-10, 100000)
        for c, p in zip(out_c, out_p):
            assert_array_equal(c, p)


class TestProfileLoglik:
    def test_matches_pure(self):
        ws, stages = _random_batch([5.0, 3.3, 2.0, 1.0], 5, 16, 10)
        counts = _pure.stage_counts(stages, 5, 4)
        rng = np.random.default_rng(4)
        gamma = np.exp(rng.uniform(-1, 2, (16, 4)))
        a = _kernels.profile_loglik(gamma, counts, stages)
        b = _pure.profile_loglik(gamma, counts, stages)
        assert_allclose(a, b, rtol=1e-12)

    def test_broadcast_single_gamma(self):
        ws, stages = _random_batch([5.0, 3.3], 5, 8, 11)
        counts = _pure.stage_counts(stages, 5, 2)
        gamma = np.array([[5.0, 2.2]])
        a = _kernels.profile_loglik(gamma, counts, stages)
        b = _pure.profile_loglik(gamma, counts, stages)
        assert a.shape == (8,)
        assert_allclose(a, b, rtol=1e-12)


class TestGEval:
    def test_matches_pure(self):
        gamma = np.array([4.0, 4.2, 3.6, 2.2])
        Bco = b_row_sums(gamma)
        bounds, cum = build_g_panels(gamma, Bco)
        V = np.linspace(_pure.W_LO, _pure.W_HI, 257).reshape(1, -1)
        a = _kernels.g_eval(V, gamma, Bco, bounds, cum, GL_NODES, GL_WEIGHTS)
        b = _pure.g_eval(V, gamma, Bco, bounds, cum, GL_NODES, GL_WEIGHTS)
        assert a.shape == V.shape
        assert_allclose(a, b, rtol=1e-12)

    def test_constants_match(self):
        assert _kernels.W_LO == _pure.W_LO
        assert _kernels.W_HI == _pure.W_HI


class TestGofStats:
    @pytest.mark.parametrize(
        "rho,q,want_kw",
        [(0.5, 1.0, True), (0.0, 1.0, True), (1.0, 0.6, True), (0.25, 0.35, False), (0.0, 0.5, True)],
    )
    def test_matches_pure(self, rho, q, want_kw):
        gamma = np.array([4.0, 4.2, 3.6])
        ws, stages = _random_batch(gamma, 5, 48, 12)
        Bco = b_row_sums(gamma)
        bounds, cum = build_g_panels(gamma, Bco)
        args = (gamma, 5, rho, q, Bco, bounds, cum, GL_NODES, GL_WEIGHTS, want_kw)
        Kc, Kwc, Zc = _kernels.gof_stats(ws, stages, *args)
        Kp, Kwp, Zp = _pure.gof_stats(ws, stages, *args)
        assert_allclose(Kc, Kp, rtol=1e-12)
        assert_allclose(Kwc, Kwp, rtol=1e-10)
        assert_allclose(Zc, Zp, rtol=1e-10, atol=1e-12)
        if not want_kw:
            assert_array_equal(Kwc, np.zeros(48))

    def test_single_stage(self):
        gamma = np.array([3.0])
        ws, stages = _random_batch(gamma, 7, 16, 13)
        Bco = b_row_sums(gamma)
        bounds, cum = build_g_panels(gamma, Bco)
        args = (gamma, 7, 0.5, 1.0, Bco, bounds, cum, GL_NODES, GL_WEIGHTS, True)
        for a, b in zip(_kernels.gof_stats(ws, stages, *args), _pure.gof_stats(ws, stages, *args)):
            assert_allclose(a, b, rtol=1e-10)

    def test_read_only_inputs(self):
        gamma = np.array([3.0, 2.0])
        ws, stages = _random_batch(gamma, 4, 8, 14)
        for arr in (ws, stages):
            arr.setflags(write=False)
        Bco = b_row_sums(gamma)
        bounds, cum = build_g_panels(gamma, Bco)
        args = (gamma, 4, 0.5, 1.0, Bco, bounds, cum, GL_NODES, GL_WEIGHTS, True)
        for a, b in zip(_kernels.gof_stats(ws, stages, *args), _pure.gof_stats(ws, stages, *args)):
            assert_allclose(a, b, rtol=1e-10)
