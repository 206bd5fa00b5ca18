"""Pure NumPy batch kernels.

These are the reference implementations of everything the compiled extension
also provides: stage-count reduction, profile-likelihood fitting, and the
goodness-of-fit statistic sweep.  All kernels are batched over a leading
replicate axis and must stay drop-in exchangeable with ``_kernels`` (same
arguments, same outputs, agreement to roundoff), which the test suite checks.

Shapes use B for replicates, E = M*r for pooled events and r for stages.
Stage indices are 0-based throughout this module.
"""

from __future__ import annotations

import numpy as np

# Weight and variance evaluations clamp the cdf argument to [1e-10, 1 - 1e-10];
# on the exponential scale w = -log(1 - p) that window is [W_LO, W_HI].
W_LO = -np.log1p(-1e-10)
W_HI = -np.log(1e-10)

_TINY = 1e-300


# ---------------------------------------------------------------------------
# rank structure


def stage_counts(stages: np.ndarray, M: int, r: int) -> np.ndarray:
    """Per-event stage occupancy counts.

    stages : int64 (B, E) 0-based stage of each pooled event, in time order.
    Returns float64 (B, E, r): counts[b, e, j] systems in stage j+1 just
    before event e.  Systems past their last stage are dropped.
    """
    stages = np.ascontiguousarray(stages, dtype=np.int64)
    B, E = stages.shape
    counts = np.zeros((B, E, r), dtype=np.float64)
    state = np.zeros((B, r), dtype=np.float64)
    state[:, 0] = M
    rows = np.arange(B)
    for e in range(E):
        counts[:, e, :] = state
        j = stages[:, e]
        state[rows, j] -= 1.0
        adv = j + 1 < r
        state[rows[adv], j[adv] + 1] += 1.0
    return counts


# ---------------------------------------------------------------------------
# profile likelihood


def _detect_boundary(counts: np.ndarray, stages: np.ndarray):
    """Maximal closed (-> 0) and free (-> inf) stage sets, vectorised.

    A set S of stages (never containing stage 0) is *closed* when every
    event whose own stage lies in S has all of its occupancy mass inside S;
    sending those gammas to 0 then keeps every event term finite while
    enlarging none, so the supremum sits on that boundary.  Dually S is
    *free* when no event with stage outside S carries any S mass, which
    lets those gammas run to infinity.  Both are found by deleting
    violating stages until a fixed point; the maximal sets are unique
    because closed (resp. free) sets are stable under union.
    """
    B, E, r = counts.shape
    closed = np.ones((B, r), dtype=bool)
    closed[:, 0] = False
    while True:
        out_mass = np.einsum("ber,br->be", counts, (~closed).astype(np.float64))
        own_in = np.take_along_axis(closed, stages, axis=1)
        viol = (out_mass > 0.5) & own_in
        if not viol.any():
            break
        b_idx, e_idx = np.nonzero(viol)
        closed[b_idx, stages[b_idx, e_idx]] = False

    free = ~closed
    free[:, 0] = False
    while True:
        in_mass = np.einsum("ber,br->be", counts, free.astype(np.float64))
        own_out = ~np.take_along_axis(free, stages, axis=1)
        viol = (in_mass > 0.5) & own_out
        if not viol.any():
            break
        hit = np.einsum("be,bej->bj", viol.astype(np.float64), counts > 0.5) > 0.5
        free &= ~hit
    return closed, free


def fit_profile_fast(
    counts: np.ndarray,
    stages: np.ndarray,
    M: int,
    n: float,
    tol: float,
    max_iter: int,
):
    """Vectorised profile-likelihood fit; defers multi-stage boundary rows.

    Returns (gamma, loglik, degen, diver, iters, conv, multi).  Rows where
    the closed or free set has two or more stages need the recursive
    solver (`fit_single_boundary`); they are reported in ``multi`` and left
    unfilled here.  For all other rows the boundary blocks are singletons,
    whose supremum contribution has the closed form -sum(log c_e,j) over
    that stage's events, and the interior stages are optimised by the MM
    fixed point gamma_j <- M / sum_e c_ej / (c_e . gamma).
    """
    B, E, r = counts.shape
    closed, free = _detect_boundary(counts, stages)
    multi = (closed.sum(axis=1) >= 2) | (free.sum(axis=1) >= 2)

    flagged = closed | free
    interior = ~flagged
    ev_w = np.take_along_axis(interior, stages, axis=1).astype(np.float64)
    cmask = counts * interior[:, None, :]

    gamma = np.tile((n - np.arange(r)).astype(np.float64), (B, 1))
    gamma[flagged] = 1.0
    free_param = interior.copy()
    free_param[:, 0] = False

    conv = np.ones(B, dtype=bool)
    iters = np.zeros(B, dtype=np.int64)
    active = free_param.any(axis=1) & ~multi
    it = 0
    while active.any() and it < max_iter:
        it += 1
        sub = np.nonzero(active)[0]
        g_s = gamma[sub]
        cm = cmask[sub]
        denom = (cm @ g_s[..., None])[..., 0]
        inv = np.divide(ev_w[sub], denom, out=np.zeros_like(denom), where=denom > 0)
        colsum = (np.swapaxes(cm, 1, 2) @ inv[..., None])[..., 0]
        fp = free_param[sub]
        gnew = np.where(fp, M / np.maximum(colsum, _TINY), g_s)
        rel = np.max(
            np.where(fp, np.abs(gnew - g_s) / np.maximum(g_s, _TINY), 0.0), axis=1
        )
        gamma[sub] = gnew
        done = rel < tol
        iters[sub[done]] = it
        active[sub[done]] = False
    if it >= max_iter and active.any():
        conv[active] = False
        iters[active] = max_iter

    # log-likelihood: interior events against masked counts, plus the
    # closed-form contribution -log c_e,j of every boundary-stage event.
    denom = (cmask @ gamma[..., None])[..., 0]
    own_gamma = np.take_along_axis(gamma, stages, axis=1)
    ev_term = np.where(
        ev_w > 0, np.log(own_gamma) - np.log(np.maximum(denom, _TINY)), 0.0
    )
    own_counts = np.take_along_axis(counts, stages[..., None], axis=2)[..., 0]
    own_flagged = np.take_along_axis(flagged, stages, axis=1)
    flag_term = np.where(own_flagged, -np.log(np.maximum(own_counts, 1.0)), 0.0)
    loglik = ev_term.sum(axis=1) + flag_term.sum(axis=1)

    gamma_out = gamma.copy()
    gamma_out[closed] = 0.0
    gamma_out[free] = np.inf
    return gamma_out, loglik, closed, free, iters, conv, multi


def _detect_single(counts, stages, cols, fixed):
    """Scalar closed/free detection within one block (cols is a bool mask)."""
    r = counts.shape[1]
    sub = counts * cols[None, :]
    closed = cols.copy()
    closed[fixed] = False
    while True:
        out_mass = sub @ (cols & ~closed).astype(np.float64)
        viol = (out_mass > 0.5) & closed[stages]
        if not viol.any():
            break
        closed[np.unique(stages[viol])] = False
    free = cols & ~closed
    free[fixed] = False
    while True:
        in_mass = sub @ free.astype(np.float64)
        viol = (in_mass > 0.5) & ~free[stages]
        if not viol.any():
            break
        hit = (sub[viol] > 0.5).any(axis=0)
        new = free & ~hit
        if (new == free).all():
            break
        free = new
    return closed, free


def _mm_block(counts, stages, cols, fixed, fixval, M, tol, max_iter):
    """MM fixed point on one interior block; returns (gamma_block, ll, iters, conv)."""
    r = counts.shape[1]
    gamma = np.zeros(r)
    gamma[cols] = 1.0
    gamma[fixed] = fixval
    params = cols.copy()
    params[fixed] = False
    ev = cols[stages]
    cm = counts * cols[None, :]
    it = 0
    conv = True
    if params.any():
        conv = False
        while it < max_iter:
            it += 1
            denom = cm @ gamma
            inv = np.where(ev, 1.0 / np.maximum(denom, _TINY), 0.0)
            colsum = cm.T @ inv
            gnew = np.where(params, M / np.maximum(colsum, _TINY), gamma)
            rel = np.max(np.abs(gnew - gamma)[params] / gamma[params])
            gamma = gnew
            if rel < tol:
                conv = True
                break
    denom = cm @ gamma
    ll = float(
        np.sum(np.where(ev, np.log(gamma[stages]) - np.log(np.maximum(denom, _TINY)), 0.0))
    )
    return gamma, ll, it, conv


def fit_single_boundary(counts, stages, M, n, tol, max_iter):
    """Exact supremum for one replicate whose boundary sets are not singletons.

    The likelihood supremum decomposes over nested stage blocks: the maximal
    closed set collapses to 0 and the maximal free set runs to infinity, and
    within each the limiting event terms form a scale-invariant profile
    likelihood of the same shape (occupancy restricted to the block), which
    may degenerate again.  Peeling recursively until every block is interior
    and summing the block optima gives the supremum; whether a stage reports
    0 or inf is decided by the outermost block it fell out through.
    """
    r = counts.shape[1]
    gamma_out = np.zeros(r)
    degen = np.zeros(r, dtype=bool)
    diver = np.zeros(r, dtype=bool)
    total = 0.0
    max_it = 0
    all_conv = True

    stack = [(np.ones(r, dtype=bool), 0, float(n), 0)]
    while stack:
        cols, fixed, fixval, sign = stack.pop()
        ev_sel = cols[stages]
        closed, free = _detect_single(counts[ev_sel], stages[ev_sel], cols, fixed)
        inter = cols & ~closed & ~free
        ev_in = inter[stages]
        g_blk, ll, it, conv = _mm_block(
            counts[ev_in], stages[ev_in], inter, fixed, fixval, M, tol, max_iter
        )
        total += ll
        max_it = max(max_it, it)
        all_conv = all_conv and conv
        idx = np.nonzero(inter)[0]
        if sign == 0:
            gamma_out[idx] = g_blk[idx]
        elif sign < 0:
            degen[idx] = True
        else:
            gamma_out[idx] = np.inf
            diver[idx] = True
        if closed.any():
            stack.append(
                (closed, int(np.nonzero(closed)[0][0]), 1.0, sign if sign != 0 else -1)
            )
        if free.any():
            stack.append(
                (free, int(np.nonzero(free)[0][0]), 1.0, sign if sign != 0 else 1)
            )
    return gamma_out, total, degen, diver, max_it, all_conv


def profile_loglik(gamma: np.ndarray, counts: np.ndarray, stages: np.ndarray):
    """Rank log-likelihood at interior gamma; gamma is (B, r) or (r,)."""
    gamma = np.atleast_2d(np.asarray(gamma, dtype=np.float64))
    if gamma.shape[0] == 1 and counts.shape[0] > 1:
        gamma = np.broadcast_to(gamma, (counts.shape[0], gamma.shape[1]))
    denom = np.einsum("ber,br->be", counts, gamma)
    own = np.take_along_axis(gamma, stages, axis=1)
    return np.sum(np.log(own) - np.log(denom), axis=1)


# ---------------------------------------------------------------------------
# variance transform


def g_eval(V, gamma, Bco, panel_bounds, panel_cum, glx, glw):
    """Variance transform g at exponential-scale points V in [0, W_HI].

    g(p) = int_0^{-log(1-p)} dv / H(v) with H(v) = sum_j B_j exp(-gamma_j v).
    Panels carry precomputed cumulative integrals; the tail inside the
    last panel is finished with the same 15-point Gauss-Legendre rule, so
    every evaluation uses one fixed quadrature no matter the caller.
    """
    V = np.asarray(V, dtype=np.float64)
    flat = V.ravel()
    if flat.size == 0:
        return np.zeros(V.shape)
    idx = np.searchsorted(panel_bounds, flat, side="left")
    idx = np.clip(idx, 1, panel_bounds.size - 1)
    a = panel_bounds[idx - 1]
    h = (flat - a) / 2.0
    nodes = a[:, None] + h[:, None] * (glx[None, :] + 1.0)
    H = np.exp(-nodes[:, :, None] * gamma[None, None, :]) @ Bco
    out = panel_cum[idx - 1] + h * ((glw[None, :] / np.maximum(H, _TINY)).sum(axis=1))
    return out.reshape(V.shape)


# ---------------------------------------------------------------------------
# goodness-of-fit statistics


def gof_stats(
    Ws: np.ndarray,
    stages: np.ndarray,
    gamma: np.ndarray,
    M: int,
    rho: float,
    q: float,
    Bco: np.ndarray,
    panel_bounds: np.ndarray,
    panel_cum: np.ndarray,
    glx: np.ndarray,
    glw: np.ndarray,
    want_kw: bool,
):
    """K, weighted K and Z statistics for a batch sharing one gamma.

    Ws : (B, E) pooled event times on the exponential scale (sorted rows),
    stages : (B, E) matching 0-based stages.  The truncation q < 1 keeps
    only events with F-value below q; on the W scale that is W < -log(1-q).
    Returns three (B,) arrays; Kw is zeros when want_kw is false.
    """
    B, E = Ws.shape
    r = gamma.shape[0]
    wq = np.inf if q >= 1.0 else -np.log1p(-q)

    gnext = np.append(gamma[1:], 0.0)
    delta = gnext[stages] - gamma[stages]
    Rpre = M * gamma[0] + np.concatenate(
        [np.zeros((B, 1)), np.cumsum(delta, axis=1)[:, :-1]], axis=1
    )
    Y = 1.0 / Rpre
    Fhat = 1.0 - np.cumprod(1.0 - Y, axis=1)
    Fpre = np.concatenate([np.zeros((B, 1)), Fhat[:, :-1]], axis=1)

    p = -np.expm1(-Ws)
    incl = Ws < wq
    count = incl.sum(axis=1)
    has = count > 0
    last = np.maximum(count - 1, 0)

    dev = np.maximum(np.abs(Fpre - p), np.abs(Fhat - p))
    Flast = np.where(has, np.take_along_axis(Fhat, last[:, None], axis=1)[:, 0], 0.0)
    term_dev = np.abs(Flast - q)
    K = np.maximum(np.where(incl, dev, 0.0).max(axis=1), term_dev)

    if want_kw:
        Wc = np.clip(Ws, W_LO, W_HI)
        g = g_eval(Wc, gamma, Bco, panel_bounds, panel_cum, glx, glw)
        kw = np.exp(-Wc) * np.sqrt(g * (1.0 + np.abs(np.log(g))))
        wq_c = min(max(wq, W_LO), W_HI)
        gq = g_eval(np.array([wq_c]), gamma, Bco, panel_bounds, panel_cum, glx, glw)[0]
        kwq = np.exp(-wq_c) * np.sqrt(gq * (1.0 + abs(np.log(gq))))
        Kw = np.maximum(np.where(incl, dev / kw, 0.0).max(axis=1), term_dev / kwq)
    else:
        Kw = np.zeros(B)

    if rho > 0.0:
        J = np.exp(-rho * Ws)
    else:
        J = np.ones_like(Ws)
    Jm = np.where(incl, J, 0.0)
    CJ = np.cumsum(Jm, axis=1)
    CJpre = CJ - Jm
    Wprev = np.concatenate([np.zeros((B, 1)), Ws[:, :-1]], axis=1)
    if rho > 0.0:
        dseg = Rpre * (np.exp(-rho * Wprev) - J) / rho
    else:
        dseg = Rpre * (Ws - Wprev)
    D = np.cumsum(np.where(incl, dseg, 0.0), axis=1)
    zpre = np.abs(CJpre - D)
    zpost = np.abs(CJ - D)
    zev = np.where(incl, np.maximum(zpre, zpost), 0.0).max(axis=1)

    Rext = np.concatenate([Rpre, np.zeros((B, 1))], axis=1)
    Rterm = np.take_along_axis(Rext, count[:, None], axis=1)[:, 0]
    Wlast = np.where(has, np.take_along_axis(Ws, last[:, None], axis=1)[:, 0], 0.0)
    CJlast = np.where(has, np.take_along_axis(CJ, last[:, None], axis=1)[:, 0], 0.0)
    Dlast = np.where(has, np.take_along_axis(D, last[:, None], axis=1)[:, 0], 0.0)
    if rho > 0.0:
        eq = 0.0 if not np.isfinite(wq) else np.exp(-rho * wq)
        dterm = Rterm * (np.exp(-rho * Wlast) - eq) / rho
    else:
        # indexing instead of np.where: wq is inf for q = 1 and the masked
        # branch would still evaluate 0 * inf
        dterm = np.zeros(B)
        pos = Rterm > 0
        dterm[pos] = Rterm[pos] * (wq - Wlast[pos])
    zterm = np.abs(CJlast - (Dlast + dterm))
    Z = np.maximum(zev, zterm)
    return K, Kw, Z
