"""Exact tests for H0: gamma = gamma0 via Monte Carlo null distributions.

Both statistics are functions of the rank structure only, so their null
distributions do not depend on the (continuous) baseline -- the null tables
are simulated once under a uniform baseline and are exact for any F.  The
p-value convention (1 + #{null >= observed}) / (R + 1) and the matching
order-statistic critical value keep the tests exact at finite R.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend, mc
from .data import DataMatrix, RankStructure, rank_structure
from .estimators import PLFitResult, fit_profile_likelihood, profile_loglik
from .params import ModelParams
from .sampling import replicate_stream

__all__ = [
    "ParamTestSpec",
    "TestReport",
    "lr_statistic",
    "wald_statistic",
    "simulate_null_statistics",
    "exact_critical_value",
    "test_gamma",
    "test_static_intensities",
    "power_curve",
    "power_curves",
]

_KIND_ALIASES = {"lr": "LR", "wald": "Wald", "w": "Wald"}


def _normalize_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[str(kind).strip().lower()]
    except KeyError:
        raise ValueError(f"statistic kind must be LR or Wald, got {kind!r}") from None


@dataclass(frozen=True)
class ParamTestSpec:
    """What to test and how many Monte Carlo replicates to spend on it."""

    gamma0: tuple | None = None
    kind: str = "LR"
    level: float = 0.05
    replications: int = 10000
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", _normalize_kind(self.kind))
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0,1), got {self.level}")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if self.gamma0 is not None:
            object.__setattr__(self, "gamma0", tuple(float(g) for g in self.gamma0))


@dataclass(frozen=True)
class TestReport:
    """Outcome of an exact Monte Carlo test.

    decision is "reject" exactly when statistic > critical_value; with the
    critical value at the order-statistic index R - floor(level*(R+1)) + 1
    this coincides (ties aside) with p_value <= level.
    """

    statistic: float
    critical_value: float
    p_value: float
    mc_se: float
    decision: str
    seed: int
    replications: int
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "statistic": float(self.statistic),
            "critical_value": float(self.critical_value),
            "p_value": float(self.p_value),
            "mc_se": float(self.mc_se),
            "decision": self.decision,
            "seed": int(self.seed),
            "replications": int(self.replications),
        }
        out.update(self.extras)
        return out


def _report(observed, null_values, level, seed, extras) -> TestReport:
    crit, se = mc.critical_value(null_values, level)
    p = mc.mc_p_value(null_values, observed)
    return TestReport(
        statistic=float(observed),
        critical_value=crit,
        p_value=p,
        mc_se=se,
        decision="reject" if observed > crit else "retain",
        seed=seed,
        replications=len(null_values),
        extras=extras,
    )


def lr_statistic(ranks: RankStructure, gamma0, fit: PLFitResult) -> float:
    """LR = sup log-likelihood minus the null log-likelihood, clipped at 0."""
    gamma0 = np.asarray(gamma0, dtype=np.float64)
    if gamma0.shape != (ranks.r,):
        raise ValueError(f"gamma0 must have shape ({ranks.r},), got {gamma0.shape}")
    lr = fit.log_likelihood - profile_loglik(gamma0, ranks)
    # the supremum dominates any interior point; anything below is roundoff
    return max(lr, 0.0)


def wald_statistic(fit: PLFitResult, gamma0) -> float:
    """W = sum_j (gamma_hat_j / gamma0_j - 1)^2.

    Degenerate components contribute 1, divergent ones make W infinite;
    both conventions apply identically to observed data and null
    replicates, which is all exactness needs.
    """
    gamma0 = np.asarray(gamma0, dtype=np.float64)
    if gamma0.shape != fit.gamma_hat.shape:
        raise ValueError("gamma0 and fitted gamma differ in length")
    return float(np.sum((fit.gamma_hat / gamma0 - 1.0) ** 2))


def _simulate_chunk(indices, n, r, M, gamma_sim, gamma0, seed, index_offset):
    B = indices.size
    w = np.empty((B, M, r))
    for i, k in enumerate(indices):
        rng = replicate_stream(seed, int(k) + index_offset)
        w[i] = np.cumsum(rng.standard_exponential((M, r)) / gamma_sim, axis=1)
    flat = w.reshape(B, M * r)
    order = np.argsort(flat, axis=1, kind="stable")
    stages = (order % r).astype(np.int64)
    counts = _backend.stage_counts(stages, M, r)
    gamma, ll, degen, diver, iters, conv = _backend.fit_profile(counts, stages, M, n)
    ll0 = _backend.profile_loglik(gamma0[None, :], counts, stages)
    lr = np.maximum(ll - ll0, 0.0)
    wald = np.sum((gamma / gamma0[None, :] - 1.0) ** 2, axis=1)
    flagged = int((degen.any(axis=1) | diver.any(axis=1) | ~conv).sum())
    return lr, wald, flagged


def simulate_null_statistics(
    shape: tuple,
    gamma_sim,
    gamma0,
    replications: int,
    seed: int,
    threads: int = 1,
    chunk_size: int = 2048,
    index_offset: int = 0,
):
    """Simulate LR and Wald statistics of data drawn under ``gamma_sim``,
    tested against ``gamma0``.  Returns (lr_values, wald_values, failures).

    Replicate k uses the stream derived from (seed, k + index_offset), so
    disjoint offsets give independent batches under one master seed.
    """
    n, r, M = shape
    gamma_sim = np.asarray(gamma_sim, dtype=np.float64)
    gamma0 = np.asarray(gamma0, dtype=np.float64)
    chunks = [
        np.arange(lo, min(lo + chunk_size, replications), dtype=np.int64)
        for lo in range(0, replications, chunk_size)
    ]

    def work(idx):
        return _simulate_chunk(idx, n, r, M, gamma_sim, gamma0, seed, index_offset)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(idx) for idx in chunks]
    lr = np.concatenate([p[0] for p in parts])
    wald = np.concatenate([p[1] for p in parts])
    failures = sum(p[2] for p in parts)
    return lr, wald, failures


def _null_values(spec: ParamTestSpec, shape, gamma0) -> np.ndarray:
    lr, wald, _ = simulate_null_statistics(
        shape, gamma0, gamma0, spec.replications, spec.seed, spec.threads
    )
    return lr if spec.kind == "LR" else wald


def exact_critical_value(spec: ParamTestSpec, shape: tuple) -> tuple[float, float]:
    """Critical value of the exact test at spec.level for systems of the
    given shape, with its Monte Carlo order-interval standard error."""
    if spec.replications < 1000:
        raise ValueError("replications must be >= 1000 for critical value tables")
    n, r, M = shape
    gamma0 = np.asarray(
        spec.gamma0 if spec.gamma0 is not None else ModelParams(n, r, M).gamma,
        dtype=np.float64,
    )
    ModelParams(n, r, M, tuple(gamma0))
    return mc.critical_value(_null_values(spec, shape, gamma0), spec.level)


def test_gamma(data: DataMatrix, n: int, spec: ParamTestSpec, ties: str = "error") -> TestReport:
    """Exact test of H0: gamma = spec.gamma0 on observed data.

    ``ties`` is forwarded to :func:`rank_structure`; it only matters for
    real data with recording-precision ties (null replicates are
    continuous).
    """
    ranks = rank_structure(data, ties=ties)
    shape = (n, ranks.r, ranks.M)
    gamma0 = np.asarray(
        spec.gamma0 if spec.gamma0 is not None else ModelParams(*shape).gamma,
        dtype=np.float64,
    )
    ModelParams(n, ranks.r, ranks.M, tuple(gamma0))
    fit = fit_profile_likelihood(ranks, n)
    if spec.kind == "LR":
        observed = lr_statistic(ranks, gamma0, fit)
    else:
        observed = wald_statistic(fit, gamma0)
    null_values = _null_values(spec, shape, gamma0)
    extras = {
        "kind": spec.kind,
        "gamma0": [float(g) for g in gamma0],
        "gamma_hat": [float(g) for g in fit.gamma_hat],
        "fit_converged": bool(fit.converged),
        "level": spec.level,
    }
    return _report(observed, null_values, spec.level, spec.seed, extras)


def test_static_intensities(
    data: DataMatrix, n: int, spec: ParamTestSpec, ties: str = "error"
) -> TestReport:
    """Test of static intensities: gamma0 = (n, n-1, ..., n-r+1).

    This is the model-selection question "is the load shared at all":
    under gamma0 the data behave like plain order statistics of n iid
    lifetimes.  Any gamma0 in the spec is ignored.
    """
    r = data.r
    static = tuple(float(n - j) for j in range(r))
    spec = ParamTestSpec(
        gamma0=static,
        kind=spec.kind,
        level=spec.level,
        replications=spec.replications,
        seed=spec.seed,
        threads=spec.threads,
    )
    return test_gamma(data, n, spec, ties=ties)


def power_curves(alt_alpha, shape: tuple, spec: ParamTestSpec, levels) -> dict:
    """Rejection rates of both exact tests under an alternative alpha vector.

    Simulates the null statistics (stream indices 0..R-1) and alternative
    statistics (indices R..2R-1) in one pass, then applies the
    level-specific critical values.  Returns {"levels": [...], "LR": [...],
    "Wald": [...]}; each power column is nondecreasing in the level because
    the critical index is.
    """
    n, r, M = shape
    gamma0 = np.asarray(
        spec.gamma0 if spec.gamma0 is not None else ModelParams(n, r, M).gamma,
        dtype=np.float64,
    )
    alt_alpha = np.asarray(alt_alpha, dtype=np.float64)
    if alt_alpha.shape != (r,):
        raise ValueError(f"alternative alpha must have shape ({r},)")
    gamma_alt = (n - np.arange(r)) * alt_alpha
    ModelParams(n, r, M, tuple(gamma_alt))
    R = spec.replications
    lr0, w0, _ = simulate_null_statistics(shape, gamma0, gamma0, R, spec.seed, spec.threads)
    lr1, w1, _ = simulate_null_statistics(
        shape, gamma_alt, gamma0, R, spec.seed, spec.threads, index_offset=R
    )
    out = {"levels": [float(lv) for lv in levels], "LR": [], "Wald": []}
    for kind, null_values, alt_values in (("LR", lr0, lr1), ("Wald", w0, w1)):
        for level in levels:
            crit, _ = mc.critical_value(null_values, level)
            out[kind].append(float(np.mean(alt_values > crit)))
    return out


def power_curve(alt_alpha, shape: tuple, spec: ParamTestSpec, levels) -> list:
    """Power of the test in spec.kind alone; see power_curves.

    Returns [(level, power), ...].
    """
    curves = power_curves(alt_alpha, shape, spec, levels)
    return list(zip(curves["levels"], curves[spec.kind]))
