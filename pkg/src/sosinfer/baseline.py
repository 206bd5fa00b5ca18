"""Absolutely continuous baseline lifetime distributions.

Every baseline F must satisfy F(0) = 0.  The model only ever needs four
callables -- cdf, ppf, hazard and cumulative hazard -- so the families are
written out with closed forms instead of going through scipy.stats frozen
distributions, except for the gamma family where the incomplete gamma
function is unavoidable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError

__all__ = [
    "BaselineCdf",
    "UniformBaseline",
    "ExponentialBaseline",
    "WeibullBaseline",
    "GammaBaseline",
    "parse_baseline",
]


class BaselineCdf:
    """Interface shared by all baseline families.

    Subclasses implement ``cdf``, ``ppf``, ``hazard`` and ``cumhaz`` as
    vectorised functions of nonnegative time (ppf takes probabilities in
    [0, 1)).  ``ppf`` and ``cdf`` are exact inverses of each other up to
    floating point roundoff on the interior of the support.
    """

    def cdf(self, t):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def hazard(self, t):
        raise NotImplementedError

    def cumhaz(self, t):
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.spec_string()!r})"


@dataclass(frozen=True)
class UniformBaseline(BaselineCdf):
    """Standard uniform on (0, 1): F(t) = t."""

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.clip(t, 0.0, 1.0)

    def ppf(self, u):
        return np.asarray(u, dtype=np.float64)

    def hazard(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 1.0 / (1.0 - t)

    def cumhaz(self, t):
        t = np.asarray(t, dtype=np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            # t >= 1 maps to inf/nan, which exponential_scale reports as an
            # out-of-support observation
            return -np.log1p(-t)

    def spec_string(self):
        return "uniform"


@dataclass(frozen=True)
class ExponentialBaseline(BaselineCdf):
    """Two-parameter exponential with location mu >= 0 and scale sigma > 0."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.mu < 0:
            raise ConfigError(f"exponential location must be >= 0, got {self.mu}")
        if self.sigma <= 0:
            raise ConfigError(f"exponential scale must be > 0, got {self.sigma}")

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        z = np.maximum(t - self.mu, 0.0) / self.sigma
        return -np.expm1(-z)

    def ppf(self, u):
        u = np.asarray(u, dtype=np.float64)
        return self.mu - self.sigma * np.log1p(-u)

    def hazard(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.where(t > self.mu, 1.0 / self.sigma, 0.0)

    def cumhaz(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.maximum(t - self.mu, 0.0) / self.sigma

    def spec_string(self):
        return f"exp:{self.mu:g},{self.sigma:g}"


@dataclass(frozen=True)
class WeibullBaseline(BaselineCdf):
    """Weibull with shape k > 0 and scale s > 0: cumhaz (t/s)^k."""

    shape: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ConfigError("weibull shape and scale must be > 0")

    def cdf(self, t):
        return -np.expm1(-self.cumhaz(t))

    def ppf(self, u):
        u = np.asarray(u, dtype=np.float64)
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    def hazard(self, t):
        t = np.asarray(t, dtype=np.float64)
        z = np.maximum(t, 0.0) / self.scale
        return (self.shape / self.scale) * z ** (self.shape - 1.0)

    def cumhaz(self, t):
        t = np.asarray(t, dtype=np.float64)
        return (np.maximum(t, 0.0) / self.scale) ** self.shape

    def spec_string(self):
        return f"weibull:{self.shape:g},{self.scale:g}"


@dataclass(frozen=True)
class GammaBaseline(BaselineCdf):
    """Gamma with shape k > 0 and scale s > 0."""

    shape: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ConfigError("gamma shape and scale must be > 0")

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        return special.gammainc(self.shape, np.maximum(t, 0.0) / self.scale)

    def ppf(self, u):
        u = np.asarray(u, dtype=np.float64)
        return self.scale * special.gammaincinv(self.shape, u)

    def hazard(self, t):
        t = np.asarray(t, dtype=np.float64)
        z = np.maximum(t, 0.0) / self.scale
        # pdf / sf, written via logs to survive far tails
        logpdf = (
            special.xlogy(self.shape - 1.0, z)
            - z
            - special.gammaln(self.shape)
            - np.log(self.scale)
        )
        sf = special.gammaincc(self.shape, z)
        return np.exp(logpdf) / sf

    def cumhaz(self, t):
        t = np.asarray(t, dtype=np.float64)
        sf = special.gammaincc(self.shape, np.maximum(t, 0.0) / self.scale)
        return -np.log(sf)

    def spec_string(self):
        return f"gamma:{self.shape:g},{self.scale:g}"


_FAMILIES = {
    "uniform": (UniformBaseline, 0),
    "exp": (ExponentialBaseline, 2),
    "exponential": (ExponentialBaseline, 2),
    "weibull": (WeibullBaseline, 2),
    "gamma": (GammaBaseline, 2),
}


def parse_baseline(spec: str) -> BaselineCdf:
    """Parse a baseline spec string like ``uniform``, ``exp:50,300`` or
    ``weibull:1.5,1``.

    The grammar is ``name[:param,param]``.  Unknown names, wrong parameter
    counts and unparsable numbers raise ConfigError.
    """
    if not isinstance(spec, str) or not spec.strip():
        raise ConfigError(f"baseline spec must be a nonempty string, got {spec!r}")
    name, _, rest = spec.strip().partition(":")
    name = name.strip().lower()
    if name not in _FAMILIES:
        raise ConfigError(
            f"unknown baseline family {name!r}; expected one of {sorted(set(_FAMILIES))}"
        )
    cls, nparams = _FAMILIES[name]
    if not rest:
        params = []
    else:
        try:
            params = [float(p) for p in rest.split(",")]
        except ValueError:
            raise ConfigError(f"could not parse baseline parameters in {spec!r}") from None
    if nparams == 0:
        if params:
            raise ConfigError(f"baseline {name!r} takes no parameters, got {spec!r}")
        return cls()
    if len(params) != nparams:
        raise ConfigError(
            f"baseline {name!r} takes {nparams} parameters, got {len(params)} in {spec!r}"
        )
    return cls(*params)
