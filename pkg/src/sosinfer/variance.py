"""The variance transform g and its ingredients.

On the uniform scale the at-risk intensity of the pooled counting process at
time s has expectation E[gamma_{N(s)+1}] = sum_j (1-s)^{gamma_j} B_j with
B_j = sum_{k>=j} b_{j,k}, where the b are partial-fraction coefficients of
hypoexponential survival functions.  The transform

    g(p) = int_0^p ds / ((1-s) E[gamma_{N(s)+1}])

is the asymptotic variance function behind the weighted KS statistic; after
substituting v = -log(1-s) it becomes int_0^V dv / H(v) with
H(v) = sum_j B_j e^{-gamma_j v}, which is what the fast panel evaluator and
scipy quadrature both integrate.

The b formula needs pairwise distinct gamma.  Tied vectors are handled by a
documented symmetric-perturbation fallback: split each tie group by a small
relative spread, evaluate on the split vector and its mirror image, and
average; the linear error terms cancel, leaving a bias of order spread^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from ._pure import W_HI, W_LO

__all__ = [
    "b_coeffs",
    "b_row_sums",
    "expected_gamma_at_risk",
    "prob_stage_count",
    "g_variance",
    "weight_k",
    "build_g_panels",
    "VarianceFunction",
    "GL_NODES",
    "GL_WEIGHTS",
]

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(15)

_TIE_REL = 1e-9


def _check_gamma(gamma) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 1 or gamma.size < 1:
        raise ValueError("gamma must be a nonempty vector")
    if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0):
        raise ValueError("gamma entries must be positive and finite")
    return gamma


def _tie_groups(gamma: np.ndarray):
    """Groups of indices whose gamma values sit within the tie tolerance."""
    tol = _TIE_REL * gamma.max()
    order = np.argsort(gamma, kind="stable")
    groups = []
    cur = [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if gamma[b] - gamma[a] <= tol:
            cur.append(b)
        else:
            groups.append(cur)
            cur = [b]
    groups.append(cur)
    return [g for g in groups if len(g) > 1]


def _b_raw(gamma: np.ndarray) -> np.ndarray:
    """b_{j,k} without the distinctness guard; zeros for j > k."""
    r = gamma.size
    prefix = np.cumprod(gamma)
    diff = gamma[:, None] - gamma[None, :]  # diff[i, j] = gamma_i - gamma_j
    np.fill_diagonal(diff, 1.0)
    b = np.zeros((r, r))
    for j in range(r):
        denom = np.cumprod(diff[:, j])  # product over i <= k, i != j
        b[j, j:] = prefix[j:] / denom[j:]
    return b


def b_coeffs(gamma) -> np.ndarray:
    """Triangular coefficient array b[j-1, k-1] for 1 <= j <= k <= r.

    b_{j,k} = (prod_{l<=k} gamma_l) / prod_{i<=k, i!=j} (gamma_i - gamma_j).
    Requires pairwise distinct entries (gap > 1e-9 * max); for tied vectors
    use expected_gamma_at_risk / g_variance, which fall back to the
    symmetric-perturbation evaluation.
    """
    gamma = _check_gamma(gamma)
    if _tie_groups(gamma):
        raise ValueError(
            "gamma entries are tied (within 1e-9 relative); the b coefficients "
            "are undefined -- use the tie fallback in expected_gamma_at_risk/g_variance"
        )
    return _b_raw(gamma)


def b_row_sums(gamma) -> np.ndarray:
    """B_j = sum_{k=j}^r b_{j,k}; the weights of e^{-gamma_j v} in H(v)."""
    return b_coeffs(gamma).sum(axis=1)


def _split_vectors(gamma: np.ndarray):
    """Perturbed gamma pair (split, mirrored split) for the tie fallback.

    Each tie group of size m is spread over symmetric relative offsets of
    half-width 1e-6 (1e-4 for groups of three or more, where the narrower
    spread would put the b denominators inside roundoff).
    """
    groups = _tie_groups(gamma)
    a = gamma.copy()
    b = gamma.copy()
    for g in groups:
        m = len(g)
        delta = 1e-6 if m == 2 else 1e-4
        offs = delta * (2.0 * np.arange(m) - (m - 1)) / (m - 1)
        base = gamma[g].mean()
        a[g] = base * (1.0 + offs)
        b[g] = base * (1.0 - offs)
    return a, b


def expected_gamma_at_risk(gamma, s) -> float:
    """E[gamma_{N(s)+1}] for s in (0,1), the mean pooled intensity per system."""
    gamma = _check_gamma(gamma)
    s = float(s)
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0,1), got {s}")
    if _tie_groups(gamma):
        a, b = _split_vectors(gamma)
        return 0.5 * (_expected_raw(a, s) + _expected_raw(b, s))
    return _expected_raw(gamma, s)


def _expected_raw(gamma, s) -> float:
    B = _b_raw(gamma).sum(axis=1)
    return float(np.sum((1.0 - s) ** gamma * B))


def prob_stage_count(gamma, s) -> np.ndarray:
    """P(N(s) = k) for k = 0..r: occupancy law of one system at uniform time s.

    Uses the hypoexponential survivals S_k(v) = P(first k failures take
    longer than v) = sum_{j<=k} b_{j,k} e^{-gamma_j v} / gamma_j.
    """
    gamma = _check_gamma(gamma)
    if _tie_groups(gamma):
        a, b = _split_vectors(gamma)
        return 0.5 * (prob_stage_count(a, s) + prob_stage_count(b, s))
    s = float(s)
    if not 0.0 <= s < 1.0:
        raise ValueError(f"s must lie in [0,1), got {s}")
    r = gamma.size
    if s == 0.0:
        out = np.zeros(r + 1)
        out[0] = 1.0
        return out
    v = -np.log1p(-s)
    b = _b_raw(gamma)
    ev = np.exp(-gamma * v)
    surv = np.array(
        [np.sum(b[: k + 1, k] * ev[: k + 1] / gamma[: k + 1]) for k in range(r)]
    )  # surv[k-1] = S_k(v) = P(T_k > v), and S_0 = 0 for v > 0
    probs = np.empty(r + 1)
    probs[0] = surv[0]
    probs[1:r] = surv[1:] - surv[:-1]
    probs[r] = 1.0 - surv[r - 1]
    return probs


def g_variance(gamma, p) -> float:
    """Variance transform g(p) by adaptive quadrature, relative tol 1e-9."""
    gamma = _check_gamma(gamma)
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0,1), got {p}")
    if _tie_groups(gamma):
        a, b = _split_vectors(gamma)
        return 0.5 * (_g_quad(a, p) + _g_quad(b, p))
    return _g_quad(gamma, p)


def _g_quad(gamma, p) -> float:
    B = _b_raw(gamma).sum(axis=1)
    V = -np.log1p(-p)

    def integrand(v):
        return 1.0 / np.sum(B * np.exp(-gamma * v))

    val, _ = integrate.quad(integrand, 0.0, V, epsrel=1e-9, limit=200)
    return float(val)


def weight_k(gamma, p) -> float:
    """KS weight k(p) = (1-p) sqrt(g(p) (1 + |log g(p)|)), positive on (0,1)."""
    g = g_variance(gamma, p)
    return float((1.0 - p) * np.sqrt(g * (1.0 + abs(np.log(g)))))


def build_g_panels(gamma, Bco=None, v_max: float = W_HI):
    """Cumulative Gauss-Legendre panels for the fast g evaluator.

    Panels of width min(0.25, 10/max(gamma)) keep the 15-point rule's error
    below ~1e-12 of the panel value; the kernels finish any query point with
    one partial panel of the same rule.  Returns (bounds, cumulative), with
    bounds[0] = 0 and bounds[-1] = v_max.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    if Bco is None:
        Bco = _b_raw(gamma).sum(axis=1)
    width = min(0.25, 10.0 / gamma.max())
    P = max(1, int(np.ceil(v_max / width)))
    bounds = np.linspace(0.0, v_max, P + 1)
    a = bounds[:-1]
    h = (bounds[1:] - a) / 2.0
    nodes = a[:, None] + h[:, None] * (GL_NODES[None, :] + 1.0)
    H = np.exp(-nodes[:, :, None] * gamma[None, None, :]) @ Bco
    panels = h * (GL_WEIGHTS[None, :] / H).sum(axis=1)
    cum = np.concatenate([[0.0], np.cumsum(panels)])
    return bounds, cum


@dataclass(frozen=True)
class VarianceFunction:
    """gamma together with its b coefficients and a g evaluator.

    For tied gamma the b array is unavailable and every evaluation goes
    through the perturbation fallback (``tie_fallback`` is then True).
    """

    gamma: np.ndarray
    b: np.ndarray | None = field(default=None)
    tie_fallback: bool = field(default=False)

    def __post_init__(self):
        gamma = _check_gamma(self.gamma)
        object.__setattr__(self, "gamma", gamma)
        if _tie_groups(gamma):
            object.__setattr__(self, "tie_fallback", True)
            object.__setattr__(self, "b", None)
        else:
            object.__setattr__(self, "b", _b_raw(gamma))

    def g(self, p) -> float:
        return g_variance(self.gamma, p)

    def weight(self, p) -> float:
        return weight_k(self.gamma, p)

    def expected_gamma(self, s) -> float:
        return expected_gamma_at_risk(self.gamma, s)
