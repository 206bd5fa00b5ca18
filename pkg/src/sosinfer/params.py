"""Model parameters for load-sharing systems observed through sequential order statistics.

A system starts with ``n`` exchangeable components and is observed until its
``r``-th failure.  While ``j - 1`` components are down, the system hazard is
``gamma_j`` times the baseline hazard, so the vector ``gamma = (gamma_1, ...,
gamma_r)`` carries the whole load-sharing structure.  The classical
parametrisation uses per-component factors ``alpha_j`` with ``gamma_j =
(n - j + 1) * alpha_j`` and the identifiability constraint ``alpha_1 = 1``,
which pins ``gamma_1 = n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ModelParams", "from_alpha", "from_censoring_scheme"]


@dataclass(frozen=True)
class ModelParams:
    """Immutable bundle (n, r, M, gamma) describing a sampling experiment.

    Parameters
    ----------
    n : int
        Number of components per system.
    r : int
        Number of observed failures per system, ``1 <= r <= n``.
    M : int
        Number of independent systems.
    gamma : tuple of float
        Stage intensities ``(gamma_1, ..., gamma_r)``; ``gamma_1`` must equal
        ``n`` and all entries must be positive and finite.
    """

    n: int
    r: int
    M: int
    gamma: tuple = field(default=None)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not 1 <= self.r <= self.n:
            raise ValueError(f"r must satisfy 1 <= r <= n, got r={self.r}, n={self.n}")
        if self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        gamma = self.gamma
        if gamma is None:
            gamma = tuple(float(self.n - j) for j in range(self.r))
        gamma = tuple(float(g) for g in gamma)
        if len(gamma) != self.r:
            raise ValueError(f"gamma must have length r={self.r}, got {len(gamma)}")
        arr = np.asarray(gamma)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("gamma entries must be positive and finite")
        if abs(gamma[0] - self.n) > 1e-12 * self.n:
            raise ValueError(
                f"gamma_1 must equal n={self.n} (alpha_1 = 1 normalisation), got {gamma[0]}"
            )
        object.__setattr__(self, "gamma", gamma)

    @property
    def gamma_arr(self) -> np.ndarray:
        return np.asarray(self.gamma, dtype=np.float64)

    @property
    def alpha(self) -> tuple:
        """Per-component factors alpha_j = gamma_j / (n - j + 1)."""
        n = self.n
        return tuple(g / (n - j) for j, g in enumerate(self.gamma))


def from_alpha(n: int, r: int, M: int, alpha) -> ModelParams:
    """Build ModelParams from per-component load factors.

    ``alpha_1`` must equal 1; the remaining entries must be positive.
    """
    alpha = tuple(float(a) for a in alpha)
    if len(alpha) != r:
        raise ValueError(f"alpha must have length r={r}, got {len(alpha)}")
    if abs(alpha[0] - 1.0) > 1e-12:
        raise ValueError(f"alpha_1 must equal 1, got {alpha[0]}")
    gamma = tuple((n - j) * a for j, a in enumerate(alpha))
    return ModelParams(n=n, r=r, M=M, gamma=gamma)


def from_censoring_scheme(n_total: int, n: int, scheme) -> np.ndarray:
    """Intensity vector of a progressive type-II censoring experiment.

    ``n_total`` items go on test, ``n`` failures are observed, and ``R_k >= 0``
    items are withdrawn right after the k-th failure.  The observed failure
    times are sequential order statistics with

        gamma_j = n - j + 1 + sum_{k>=j} R_k,

    which is exactly the number of items still on test ahead of the j-th
    failure.  Returns the length-``n`` gamma vector (note gamma_1 = n_total,
    so this is not a ModelParams: the alpha_1 = 1 normalisation does not
    apply to censoring designs).
    """
    scheme = np.asarray(scheme, dtype=np.int64)
    if scheme.ndim != 1 or scheme.shape[0] != n:
        raise ValueError(f"scheme must have length n={n}, got shape {scheme.shape}")
    if np.any(scheme < 0):
        raise ValueError("withdrawal counts must be nonnegative")
    if n + int(scheme.sum()) != n_total:
        raise ValueError(
            f"n + sum(scheme) must equal n_total={n_total}, got {n + int(scheme.sum())}"
        )
    tail = np.cumsum(scheme[::-1])[::-1]
    j = np.arange(1, n + 1)
    return (n - j + 1 + tail).astype(np.float64)
