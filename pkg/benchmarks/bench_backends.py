"""Timing comparison of the pure NumPy kernels against the compiled ones.

Runs the three hot paths (rank reduction + profile fit, the GoF statistic
sweep, and the variance transform) on identical inputs through both
implementations and prints wall times with the speedup factor.  Agreement
is asserted while timing so a silent semantic drift cannot hide behind a
fast number.

Run from the repository root:

    python3 benchmarks/bench_backends.py [--batch 20000] [--shape 4,4,10]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sosinfer import _pure
from sosinfer.sampling import sample_exponential_batch
from sosinfer.variance import GL_NODES, GL_WEIGHTS, _b_raw, build_g_panels

try:
    from sosinfer import _kernels
except ImportError:
    _kernels = None


def _time(fn, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _make_batch(n, r, M, B, seed):
    gamma = np.linspace(n, n - r + 1, r)
    w = sample_exponential_batch(gamma, M, B, np.random.default_rng(seed))
    flat = w.reshape(B, M * r)
    order = np.argsort(flat, axis=1, kind="stable")
    stages = (order % r).astype(np.int64)
    Ws = np.take_along_axis(flat, order, axis=1)
    return gamma, Ws, stages


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=20000, help="replicates per kernel call")
    ap.add_argument("--shape", default="4,4,10", help="n,r,M of the simulated systems")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if _kernels is None:
        raise SystemExit("compiled extension not importable; build it first")

    n, r, M = (int(v) for v in args.shape.split(","))
    B = args.batch
    gamma, Ws, stages = _make_batch(n, r, M, B, args.seed)

    rows = []

    tp, counts = _time(lambda: _pure.stage_counts(stages, M, r))
    tk, counts_k = _time(lambda: _kernels.stage_counts(stages, M, r))
    assert np.array_equal(counts, counts_k)
    rows.append(("stage_counts", tp, tk))

    tp, outp = _time(lambda: _pure.fit_profile_fast(counts, stages, M, float(n), 1e-10, 100000))
    tk, outk = _time(lambda: _kernels.fit_profile_fast(counts, stages, M, float(n), 1e-10, 100000))
    ok = ~outp[6]
    assert np.allclose(outp[0][ok], outk[0][ok], rtol=1e-9)
    assert np.allclose(outp[1][ok], outk[1][ok], rtol=1e-9)
    rows.append(("fit_profile_fast", tp, tk))

    tp, llp = _time(lambda: _pure.profile_loglik(gamma, counts, stages))
    tk, llk = _time(lambda: _kernels.profile_loglik(gamma, counts, stages))
    assert np.allclose(llp, llk, rtol=1e-11)
    rows.append(("profile_loglik", tp, tk))

    Bco = _b_raw(gamma).sum(axis=1)
    pb, pc = build_g_panels(gamma, Bco)
    gof_args = (Ws, stages, gamma, M, 0.5, 1.0, Bco, pb, pc, GL_NODES, GL_WEIGHTS, True)
    tp, sp = _time(lambda: _pure.gof_stats(*gof_args))
    tk, sk = _time(lambda: _kernels.gof_stats(*gof_args))
    for a, b in zip(sp, sk):
        assert np.allclose(a, b, rtol=1e-9, atol=1e-11)
    rows.append(("gof_stats (with Kw)", tp, tk))

    V = np.random.default_rng(args.seed).uniform(0.0, _pure.W_HI, B)
    tp, gp = _time(lambda: _pure.g_eval(V, gamma, Bco, pb, pc, GL_NODES, GL_WEIGHTS))
    tk, gk = _time(lambda: _kernels.g_eval(V, gamma, Bco, pb, pc, GL_NODES, GL_WEIGHTS))
    assert np.allclose(gp, gk, rtol=1e-11)
    rows.append(("g_eval", tp, tk))

    print(f"batch {B}, shape n={n} r={r} M={M}  (times are best of 3, seconds)")
    print(f"{'kernel':<22}{'pure':>10}{'compiled':>10}{'speedup':>9}")
    for name, tp, tk in rows:
        print(f"{name:<22}{tp:>10.4f}{tk:>10.4f}{tp / tk:>8.1f}x")


if __name__ == "__main__":
    main()
