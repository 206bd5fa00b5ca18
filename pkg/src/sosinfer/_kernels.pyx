# cython: language_level=3
"""Compiled batch kernels.

Function-for-function mirror of ``sosinfer._pure``; that module documents the
semantics and stays the reference.  Replicates are processed one at a time in
plain C loops, which beats the NumPy broadcasts once the batch is large and
keeps peak memory flat.  Multi-stage boundary fits are only detected here,
never solved; the backend routes them to the recursive pure solver.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, expm1, fabs, log, log1p, sqrt

cnp.import_array()

W_LO = -log1p(-1e-10)
W_HI = -log(1e-10)

cdef double _TINY = 1e-300


# ---------------------------------------------------------------------------
# rank structure


def stage_counts(const cnp.int64_t[:, ::1] stages, int M, int r):
    """Per-event stage occupancy counts; see _pure.stage_counts."""
    cdef Py_ssize_t B = stages.shape[0]
    cdef Py_ssize_t E = stages.shape[1]
    out = np.zeros((B, E, r), dtype=np.float64)
    cdef double[:, :, ::1] counts = out
    state_arr = np.zeros(r, dtype=np.float64)
    cdef double[::1] state = state_arr
    cdef Py_ssize_t b, e, k
    cdef cnp.int64_t j
    with nogil:
        for b in range(B):
            for k in range(r):
                state[k] = 0.0
            state[0] = M
            for e in range(E):
                for k in range(r):
                    counts[b, e, k] = state[k]
                j = stages[b, e]
                state[j] -= 1.0
                if j + 1 < r:
                    state[j + 1] += 1.0
    return out


# ---------------------------------------------------------------------------
# profile likelihood


cdef void _detect_row(
    const double[:, :, ::1] counts,
    const cnp.int64_t[:, ::1] stages,
    Py_ssize_t b,
    cnp.uint8_t[::1] closed,
    cnp.uint8_t[::1] free,
) noexcept nogil:
    # Maximal closed / free stage sets by deleting violators to a fixed
    # point; a deletion can only trigger further deletions, so the sweep
    # order does not change the result (same sets as the round-based pure
    # version).
    cdef Py_ssize_t E = counts.shape[1]
    cdef Py_ssize_t r = counts.shape[2]
    cdef Py_ssize_t e, k
    cdef cnp.int64_t j
    cdef double mass
    cdef bint changed = True

    for k in range(r):
        closed[k] = 1 if k != 0 else 0
    while changed:
        changed = False
        for e in range(E):
            j = stages[b, e]
            if closed[j]:
                mass = 0.0
                for k in range(r):
                    if not closed[k]:
                        mass += counts[b, e, k]
                if mass > 0.5:
                    closed[j] = 0
                    changed = True

    for k in range(r):
        free[k] = 0 if (closed[k] or k == 0) else 1
    changed = True
    while changed:
        changed = False
        for e in range(E):
            j = stages[b, e]
            if not free[j]:
                mass = 0.0
                for k in range(r):
                    if free[k]:
                        mass += counts[b, e, k]
                if mass > 0.5:
                    for k in range(r):
                        if free[k] and counts[b, e, k] > 0.5:
                            free[k] = 0
                            changed = True


def fit_profile_fast(
    const cnp.float64_t[:, :, ::1] counts,
    const cnp.int64_t[:, ::1] stages,
    int M,
    double n,
    double tol,
    long max_iter,
):
    """Batched profile fit, multi-stage boundary rows deferred; see _pure."""
    cdef Py_ssize_t B = counts.shape[0]
    cdef Py_ssize_t E = counts.shape[1]
    cdef Py_ssize_t r = counts.shape[2]

    gamma_arr = np.zeros((B, r), dtype=np.float64)
    loglik_arr = np.zeros(B, dtype=np.float64)
    closed_arr = np.zeros((B, r), dtype=np.uint8)
    free_arr = np.zeros((B, r), dtype=np.uint8)
    iters_arr = np.zeros(B, dtype=np.int64)
    conv_arr = np.ones(B, dtype=np.uint8)
    multi_arr = np.zeros(B, dtype=np.uint8)

    cdef double[:, ::1] gamma_out = gamma_arr
    cdef double[::1] loglik = loglik_arr
    cdef cnp.uint8_t[:, ::1] closed_v = closed_arr
    cdef cnp.uint8_t[:, ::1] free_v = free_arr
    cdef cnp.int64_t[::1] iters = iters_arr
    cdef cnp.uint8_t[::1] conv = conv_arr
    cdef cnp.uint8_t[::1] multi_v = multi_arr

    scratch = np.zeros((2, r), dtype=np.float64)
    cdef double[::1] gam = scratch[0]
    cdef double[::1] colsum = scratch[1]
    flags = np.zeros((2, r), dtype=np.uint8)
    cdef cnp.uint8_t[::1] closed = flags[0]
    cdef cnp.uint8_t[::1] free = flags[1]
    # per-row masked copy of the count matrix so the MM sweeps run branch-free
    cm_arr = np.zeros((E, r), dtype=np.float64)
    cdef double[:, ::1] cm = cm_arr
    evw_arr = np.zeros(E, dtype=np.uint8)
    cdef cnp.uint8_t[::1] evw = evw_arr

    cdef Py_ssize_t b, e, k
    cdef cnp.int64_t j
    cdef long it
    cdef int nclosed, nfree
    cdef bint flagged, any_free, is_multi, done
    cdef double denom, inv, rel, gnew, d, ll, own

    with nogil:
        for b in range(B):
            _detect_row(counts, stages, b, closed, free)
            nclosed = 0
            nfree = 0
            for k in range(r):
                nclosed += closed[k]
                nfree += free[k]
            is_multi = nclosed >= 2 or nfree >= 2
            multi_v[b] = 1 if is_multi else 0

            any_free = False
            for k in range(r):
                flagged = closed[k] or free[k]
                gam[k] = 1.0 if flagged else n - k
                if not flagged and k != 0:
                    any_free = True
            for e in range(E):
                j = stages[b, e]
                evw[e] = 0 if (closed[j] or free[j]) else 1
                for k in range(r):
                    cm[e, k] = 0.0 if (closed[k] or free[k]) else counts[b, e, k]

            it = 0
            done = not (any_free and not is_multi)
            while not done and it < max_iter:
                it += 1
                for k in range(r):
                    colsum[k] = 0.0
                for e in range(E):
                    if not evw[e]:
                        continue
                    denom = 0.0
                    for k in range(r):
                        denom += cm[e, k] * gam[k]
                    inv = 1.0 / denom if denom > 0 else 0.0
                    for k in range(r):
                        colsum[k] += cm[e, k] * inv
                rel = 0.0
                for k in range(1, r):
                    if closed[k] or free[k]:
                        continue
                    gnew = M / (colsum[k] if colsum[k] > _TINY else _TINY)
                    d = fabs(gnew - gam[k]) / (gam[k] if gam[k] > _TINY else _TINY)
                    if d > rel:
                        rel = d
                    gam[k] = gnew
                if rel < tol:
                    done = True
            if any_free and not is_multi:
                if done:
                    iters[b] = it
                else:
                    iters[b] = max_iter
                    conv[b] = 0

            ll = 0.0
            for e in range(E):
                j = stages[b, e]
                if evw[e]:
                    denom = 0.0
                    for k in range(r):
                        denom += cm[e, k] * gam[k]
                    ll += log(gam[j]) - log(denom if denom > _TINY else _TINY)
                else:
                    own = counts[b, e, j]
                    ll -= log(own if own > 1.0 else 1.0)
            loglik[b] = ll

            for k in range(r):
                closed_v[b, k] = closed[k]
                free_v[b, k] = free[k]
                if closed[k]:
                    gamma_out[b, k] = 0.0
                elif free[k]:
                    gamma_out[b, k] = INFINITY
                else:
                    gamma_out[b, k] = gam[k]

    return (
        gamma_arr,
        loglik_arr,
        closed_arr.astype(bool),
        free_arr.astype(bool),
        iters_arr,
        conv_arr.astype(bool),
        multi_arr.astype(bool),
    )


def profile_loglik(gamma, const cnp.float64_t[:, :, ::1] counts, const cnp.int64_t[:, ::1] stages):
    """Rank log-likelihood at interior gamma; see _pure.profile_loglik."""
    cdef Py_ssize_t B = counts.shape[0]
    cdef Py_ssize_t E = counts.shape[1]
    cdef Py_ssize_t r = counts.shape[2]
    g2 = np.ascontiguousarray(np.atleast_2d(np.asarray(gamma, dtype=np.float64)))
    cdef const double[:, ::1] gv = g2
    cdef bint single = g2.shape[0] == 1
    out = np.zeros(B, dtype=np.float64)
    cdef double[::1] ll = out
    cdef Py_ssize_t b, e, k, gb
    cdef cnp.int64_t j
    cdef double denom, acc
    with nogil:
        for b in range(B):
            gb = 0 if single else b
            acc = 0.0
            for e in range(E):
                j = stages[b, e]
                denom = 0.0
                for k in range(r):
                    denom += counts[b, e, k] * gv[gb, k]
                acc += log(gv[gb, j]) - log(denom)
            ll[b] = acc
    return out


# ---------------------------------------------------------------------------
# variance transform


cdef double _g_point(
    double v,
    const double[::1] gamma,
    const double[::1] Bco,
    const double[::1] panel_bounds,
    const double[::1] panel_cum,
    const double[::1] glx,
    const double[::1] glw,
) noexcept nogil:
    # One evaluation of g: cumulative panel integral plus the partial last
    # panel finished with the shared Gauss-Legendre rule.
    cdef Py_ssize_t r = gamma.shape[0]
    cdef Py_ssize_t P = panel_bounds.shape[0]
    cdef Py_ssize_t Q = glx.shape[0]
    cdef Py_ssize_t lo = 0, hi = P, mid, idx, qi, k
    cdef double a, h, node, H, s
    while lo < hi:
        mid = (lo + hi) // 2
        if panel_bounds[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    idx = lo
    if idx < 1:
        idx = 1
    elif idx > P - 1:
        idx = P - 1
    a = panel_bounds[idx - 1]
    h = (v - a) / 2.0
    s = 0.0
    for qi in range(Q):
        node = a + h * (glx[qi] + 1.0)
        H = 0.0
        for k in range(r):
            H += exp(-node * gamma[k]) * Bco[k]
        s += glw[qi] / (H if H > _TINY else _TINY)
    return panel_cum[idx - 1] + h * s


def g_eval(V, const cnp.float64_t[::1] gamma, const cnp.float64_t[::1] Bco,
           const cnp.float64_t[::1] panel_bounds, const cnp.float64_t[::1] panel_cum,
           const cnp.float64_t[::1] glx, const cnp.float64_t[::1] glw):
    """Variance transform at exponential-scale points; see _pure.g_eval."""
    V = np.asarray(V, dtype=np.float64)
    flat = np.ascontiguousarray(V.ravel())
    if flat.size == 0:
        return np.zeros(V.shape)
    cdef const double[::1] vv = flat
    cdef Py_ssize_t N = vv.shape[0]
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(N):
            ov[i] = _g_point(vv[i], gamma, Bco, panel_bounds, panel_cum, glx, glw)
    return out.reshape(V.shape)


# ---------------------------------------------------------------------------
# goodness-of-fit statistics


def gof_stats(
    const cnp.float64_t[:, ::1] Ws,
    const cnp.int64_t[:, ::1] stages,
    const cnp.float64_t[::1] gamma,
    int M,
    double rho,
    double q,
    const cnp.float64_t[::1] Bco,
    const cnp.float64_t[::1] panel_bounds,
    const cnp.float64_t[::1] panel_cum,
    const cnp.float64_t[::1] glx,
    const cnp.float64_t[::1] glw,
    bint want_kw,
):
    """K, weighted K and Z sweep for a batch sharing one gamma; see _pure."""
    cdef Py_ssize_t B = Ws.shape[0]
    cdef Py_ssize_t E = Ws.shape[1]
    cdef Py_ssize_t r = gamma.shape[0]

    cdef double wq = INFINITY if q >= 1.0 else -log1p(-q)
    cdef double w_lo = -log1p(-1e-10)
    cdef double w_hi = -log(1e-10)

    K_arr = np.zeros(B, dtype=np.float64)
    Kw_arr = np.zeros(B, dtype=np.float64)
    Z_arr = np.zeros(B, dtype=np.float64)
    cdef double[::1] K = K_arr
    cdef double[::1] Kw = Kw_arr
    cdef double[::1] Z = Z_arr

    # terminal weight at the (clamped) truncation point, shared by all rows
    cdef double wq_c = wq
    if wq_c < w_lo:
        wq_c = w_lo
    elif wq_c > w_hi:
        wq_c = w_hi
    cdef double kwq = 1.0, gq
    if want_kw:
        gq = _g_point(wq_c, gamma, Bco, panel_bounds, panel_cum, glx, glw)
        kwq = exp(-wq_c) * sqrt(gq * (1.0 + fabs(log(gq))))

    cdef double eq = 0.0
    if rho > 0.0 and wq != INFINITY:
        eq = exp(-rho * wq)

    cdef Py_ssize_t b, e, count
    cdef cnp.int64_t j
    cdef double Rpre, S, surv, Fhat, Fpre, w, p, dev, d2, devmax, kdevmax
    cdef double Flast, Wlast, CJ, CJlast, D, Dlast, Jm, dseg, Wprev, zev
    cdef double Wc, g, kwv, gn, Rterm, dterm, zterm
    cdef bint incl

    with nogil:
        for b in range(B):
            S = 0.0
            surv = 1.0
            Fhat = 0.0
            devmax = 0.0
            kdevmax = 0.0
            zev = 0.0
            CJ = 0.0
            D = 0.0
            Wprev = 0.0
            Flast = 0.0
            Wlast = 0.0
            CJlast = 0.0
            Dlast = 0.0
            count = 0
            for e in range(E):
                Rpre = M * gamma[0] + S
                w = Ws[b, e]
                incl = w < wq
                j = stages[b, e]
                Fpre = Fhat
                surv *= 1.0 - 1.0 / Rpre
                Fhat = 1.0 - surv
                if incl:
                    p = -expm1(-w)
                    dev = fabs(Fpre - p)
                    d2 = fabs(Fhat - p)
                    if d2 > dev:
                        dev = d2
                    if dev > devmax:
                        devmax = dev
                    if want_kw:
                        Wc = w
                        if Wc < w_lo:
                            Wc = w_lo
                        elif Wc > w_hi:
                            Wc = w_hi
                        g = _g_point(Wc, gamma, Bco, panel_bounds, panel_cum, glx, glw)
                        kwv = exp(-Wc) * sqrt(g * (1.0 + fabs(log(g))))
                        d2 = dev / kwv
                        if d2 > kdevmax:
                            kdevmax = d2
                    if rho > 0.0:
                        Jm = exp(-rho * w)
                        dseg = Rpre * (exp(-rho * Wprev) - Jm) / rho
                    else:
                        Jm = 1.0
                        dseg = Rpre * (w - Wprev)
                    D += dseg
                    d2 = fabs(CJ - D)
                    if d2 > zev:
                        zev = d2
                    CJ += Jm
                    d2 = fabs(CJ - D)
                    if d2 > zev:
                        zev = d2
                    count += 1
                    Flast = Fhat
                    Wlast = w
                    CJlast = CJ
                    Dlast = D
                gn = gamma[j + 1] if j + 1 < r else 0.0
                S += gn - gamma[j]
                Wprev = w
            # the rate in the tail segment [W_last, w_q): just before the
            # first excluded event, or exactly zero when nothing is left
            if count < E:
                S = 0.0
                for e in range(count):
                    j = stages[b, e]
                    gn = gamma[j + 1] if j + 1 < r else 0.0
                    S += gn - gamma[j]
                Rterm = M * gamma[0] + S
            else:
                Rterm = 0.0
            if rho > 0.0:
                dterm = Rterm * (exp(-rho * Wlast) - eq) / rho
            else:
                dterm = Rterm * (wq - Wlast) if Rterm > 0 else 0.0
            zterm = fabs(CJlast - (Dlast + dterm))
            Z[b] = zterm if zterm > zev else zev

            dev = fabs(Flast - q)
            K[b] = dev if dev > devmax else devmax
            if want_kw:
                d2 = dev / kwq
                Kw[b] = d2 if d2 > kdevmax else kdevmax

    return K_arr, Kw_arr, Z_arr
