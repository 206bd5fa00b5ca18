"""Sampling sequential order statistics and the seeded stream contract.

The sampler works on the exponential scale first: with E_{i,l} iid standard
exponential, W_i^{(j)} = sum_{l<=j} E_{i,l} / gamma_l is the j-th failure
time of system i under a standard exponential baseline, and U = 1 - e^{-W},
X = F^{-1}(U) transports it to any baseline F.  Doing the uniform step
explicitly makes the quantile-transform equality between baselines hold
bit-for-bit on a shared stream.

Reproducibility: every Monte Carlo replicate k draws from the counter-based
stream Philox(master_seed).jumped(k), so results do not depend on execution
order or thread count.
"""

from __future__ import annotations

import numpy as np

from .baseline import BaselineCdf
from .data import DataMatrix
from .errors import DataError
from .params import ModelParams

__all__ = [
    "replicate_stream",
    "sample",
    "sample_exponential_batch",
    "exponential_scale",
    "spacing_statistics",
]

_BELOW_ONE = np.nextafter(1.0, 0.0)


def replicate_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for replicate ``index`` of a master seed."""
    return np.random.Generator(np.random.Philox(key=master_seed).jumped(index))


def sample_exponential_batch(
    gamma: np.ndarray, M: int, size: int, rng: np.random.Generator
) -> np.ndarray:
    """(size, M, r) failure times under a standard exponential baseline."""
    gamma = np.asarray(gamma, dtype=np.float64)
    e = rng.standard_exponential((size, M, gamma.shape[0]))
    return np.cumsum(e / gamma, axis=2)


def sample(params: ModelParams, baseline: BaselineCdf, rng: np.random.Generator) -> DataMatrix:
    """One DataMatrix draw of the load-sharing model under ``baseline``."""
    w = sample_exponential_batch(params.gamma_arr, params.M, 1, rng)[0]
    u = np.minimum(-np.expm1(-w), _BELOW_ONE)
    return DataMatrix(baseline.ppf(u))


def exponential_scale(data: DataMatrix, baseline: BaselineCdf) -> np.ndarray:
    """Data transported to the exponential scale, W = Lambda_F(X).

    Under the model with baseline F the result is again a load-sharing
    sample with standard exponential baseline and the same gamma.  Raises
    DataError when observations fall outside the support of F (cumulative
    hazard non-finite, zero, or not increasing along a row).
    """
    lam = baseline.cumhaz(data.values)
    if not np.all(np.isfinite(lam)):
        bad = np.argwhere(~np.isfinite(lam))[0]
        raise DataError(
            f"observation outside baseline support at (system {bad[0] + 1}, column {bad[1] + 1})"
        )
    padded = np.concatenate([np.zeros((data.M, 1)), lam], axis=1)
    if np.any(np.diff(padded, axis=1) <= 0):
        bad = np.argwhere(np.diff(padded, axis=1) <= 0)[0]
        raise DataError(
            f"cumulative hazard not increasing at (system {bad[0] + 1}, column {bad[1] + 1}); "
            "observation outside baseline support"
        )
    return lam


def spacing_statistics(data: DataMatrix, baseline: BaselineCdf, params: ModelParams) -> np.ndarray:
    """Normalized spacings S_i^{(j)} = (n-j+1) (Lambda(X^{(j)}) - Lambda(X^{(j-1)})).

    Under the model, alpha_j * S_i^{(j)} are iid standard exponential, which
    is what makes the known-baseline MLE explicit.
    """
    if data.r != params.r or data.M != params.M:
        raise ValueError(
            f"data shape ({data.M}, {data.r}) does not match params (M={params.M}, r={params.r})"
        )
    lam = exponential_scale(data, baseline)
    padded = np.concatenate([np.zeros((data.M, 1)), lam], axis=1)
    d = np.diff(padded, axis=1)
    j = np.arange(1, params.r + 1)
    return (params.n - j + 1) * d
