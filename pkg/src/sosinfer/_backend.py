"""Kernel backend selection.

The hot loops live twice: once as a Cython extension (``sosinfer._kernels``)
and once in NumPy (``sosinfer._pure``).  The compiled module is preferred
when importable; set SOSINFER_BACKEND=pure or =compiled to force a choice
(forcing ``compiled`` raises if the extension is missing).  Multi-stage
boundary fits always go through the recursive pure-Python solver since they
are rare and branchy.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pure
from ._pure import W_HI, W_LO  # noqa: F401  (re-exported constants)

_choice = os.environ.get("SOSINFER_BACKEND", "auto").lower()
if _choice not in ("auto", "pure", "compiled"):
    raise ImportError(f"SOSINFER_BACKEND must be auto, pure or compiled, not {_choice!r}")

_impl = None
if _choice in ("auto", "compiled"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = None
if _impl is None:
    _impl = _pure

BACKEND = "pure" if _impl is _pure else "compiled"


def backend_name() -> str:
    return BACKEND


def stage_counts(stages, M, r):
    return _impl.stage_counts(np.ascontiguousarray(stages, dtype=np.int64), M, r)


def fit_profile(counts, stages, M, n, tol=1e-10, max_iter=100000):
    """Batched profile-likelihood fit; returns (gamma, loglik, degen, diver, iters, conv)."""
    counts = np.ascontiguousarray(counts, dtype=np.float64)
    stages = np.ascontiguousarray(stages, dtype=np.int64)
    gamma, ll, degen, diver, iters, conv, multi = _impl.fit_profile_fast(
        counts, stages, M, float(n), tol, max_iter
    )
    if multi.any():
        for b in np.nonzero(multi)[0]:
            g, l, de, dv, it, cv = _pure.fit_single_boundary(
                counts[b], stages[b], M, float(n), tol, max_iter
            )
            gamma[b] = g
            ll[b] = l
            degen[b] = de
            diver[b] = dv
            iters[b] = it
            conv[b] = cv
    return gamma, ll, degen, diver, iters, conv


def profile_loglik(gamma, counts, stages):
    return _impl.profile_loglik(
        np.ascontiguousarray(gamma, dtype=np.float64),
        np.ascontiguousarray(counts, dtype=np.float64),
        np.ascontiguousarray(stages, dtype=np.int64),
    )


def gof_stats(Ws, stages, gamma, M, rho, q, Bco, panel_bounds, panel_cum, glx, glw, want_kw):
    return _impl.gof_stats(
        np.ascontiguousarray(Ws, dtype=np.float64),
        np.ascontiguousarray(stages, dtype=np.int64),
        np.ascontiguousarray(gamma, dtype=np.float64),
        M,
        float(rho),
        float(q),
        np.ascontiguousarray(Bco, dtype=np.float64),
        np.ascontiguousarray(panel_bounds, dtype=np.float64),
        np.ascontiguousarray(panel_cum, dtype=np.float64),
        np.ascontiguousarray(glx, dtype=np.float64),
        np.ascontiguousarray(glw, dtype=np.float64),
        bool(want_kw),
    )


def g_eval(V, gamma, Bco, panel_bounds, panel_cum, glx, glw):
    return _impl.g_eval(
        np.ascontiguousarray(V, dtype=np.float64),
        np.ascontiguousarray(gamma, dtype=np.float64),
        np.ascontiguousarray(Bco, dtype=np.float64),
        np.ascontiguousarray(panel_bounds, dtype=np.float64),
        np.ascontiguousarray(panel_cum, dtype=np.float64),
        np.ascontiguousarray(glx, dtype=np.float64),
        np.ascontiguousarray(glw, dtype=np.float64),
    )
