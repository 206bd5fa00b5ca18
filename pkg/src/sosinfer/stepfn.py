"""Right-continuous step functions with explicit left limits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["StepFunction"]


@dataclass(frozen=True)
class StepFunction:
    """A piecewise-constant, right-continuous function.

    The function equals ``y0`` on ``(-inf, xs[0])`` and ``ys[k]`` on
    ``[xs[k], xs[k+1])``.  Calling evaluates right-continuously; use
    :meth:`left_limit` for the value just before a point.

    Parameters
    ----------
    xs : array_like
        Strictly increasing jump locations.
    ys : array_like
        Function value from each jump onwards; same length as ``xs``.
    y0 : float
        Value before the first jump (default 0).
    """

    xs: np.ndarray
    ys: np.ndarray
    y0: float = 0.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        if xs.ndim != 1 or ys.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-d arrays of equal length")
        if xs.size and not np.all(np.diff(xs) > 0):
            raise ValueError("jump locations must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "y0", float(self.y0))

    def _eval(self, t, side):
        t = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.xs, t, side=side)
        full = np.concatenate(([self.y0], self.ys))
        out = full[idx]
        return out if out.ndim else float(out)

    def __call__(self, t):
        """Value at t, right-continuous: jumps count at their location."""
        return self._eval(t, side="right")

    def left_limit(self, t):
        """Value just before t: jumps at t do not count."""
        return self._eval(t, side="left")

    @property
    def jump_sizes(self) -> np.ndarray:
        full = np.concatenate(([self.y0], self.ys))
        return np.diff(full)
