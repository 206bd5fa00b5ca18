"""Seeded Monte Carlo harness: chunked parallel map, quantiles, p-values.

Tasks receive a contiguous array of replicate indices and return one value
per index (plus a count of flagged replicates).  Each replicate must derive
its randomness from its own index via ``sampling.replicate_stream``, never
from shared state; the harness then yields identical results for any thread
count, because chunks are collected by index.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "McPlan",
    "McResult",
    "run",
    "quantile",
    "critical_value",
    "critical_value_index",
    "mc_p_value",
]


@dataclass(frozen=True)
class McPlan:
    """A reproducible Monte Carlo run.

    task(indices) -> values, or (values, n_flagged); indices is an int64
    array of replicate numbers in [0, replications).  The task must be pure
    given the indices (all randomness derived from them).
    """

    seed: int
    replications: int
    task: object
    threads: int = 1
    chunk_size: int = 2048
    progress: object = field(default=None, compare=False)

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass(frozen=True)
class McResult:
    values: np.ndarray
    seed: int
    elapsed: float
    failures: int


def _call_task(task, idx):
    out = task(idx)
    if isinstance(out, tuple):
        values, flagged = out
    else:
        values, flagged = out, 0
    values = np.asarray(values, dtype=np.float64)
    if values.shape != idx.shape:
        raise ValueError(
            f"task returned {values.shape[0] if values.ndim else 'scalar'} values "
            f"for {idx.size} indices"
        )
    return values, int(flagged)


def run(plan: McPlan) -> McResult:
    """Execute the plan; values land in replicate-index order.

    A chunk that raises is isolated: its replicates are retried one at a
    time, and any index that still fails contributes NaN and a failure
    count instead of aborting the run.
    """
    t0 = time.perf_counter()
    R = plan.replications
    chunks = [
        np.arange(lo, min(lo + plan.chunk_size, R), dtype=np.int64)
        for lo in range(0, R, plan.chunk_size)
    ]
    values = np.full(R, np.nan)
    failures = 0

    def run_chunk(idx):
        try:
            return _call_task(plan.task, idx)
        except Exception:
            vals = np.full(idx.size, np.nan)
            flagged = 0
            for pos, k in enumerate(idx):
                one = np.array([k], dtype=np.int64)
                try:
                    v, f = _call_task(plan.task, one)
                except Exception:
                    flagged += 1
                else:
                    vals[pos] = v[0]
                    flagged += f
            return vals, flagged

    if plan.threads > 1:
        with ThreadPoolExecutor(max_workers=plan.threads) as pool:
            results = list(pool.map(run_chunk, chunks))
    else:
        results = []
        for idx in chunks:
            results.append(run_chunk(idx))
            if plan.progress is not None:
                plan.progress(int(idx[-1]) + 1, R)
    done = 0
    for idx, (vals, flagged) in zip(chunks, results):
        values[idx] = vals
        failures += flagged
        done += idx.size
        if plan.progress is not None and plan.threads > 1:
            plan.progress(done, R)
    return McResult(values=values, seed=plan.seed, elapsed=time.perf_counter() - t0, failures=failures)


def _values_of(result) -> np.ndarray:
    values = result.values if isinstance(result, McResult) else np.asarray(result, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty Monte Carlo sample")
    return values


def _order_interval_se(sorted_values: np.ndarray, level: float) -> float:
    """Half-width of the one-sigma binomial order-statistic interval."""
    R = sorted_values.size
    half = np.sqrt(R * level * (1.0 - level))
    lo = int(np.ceil(level * R - half))
    hi = int(np.ceil(level * R + half))
    lo = min(max(lo, 1), R)
    hi = min(max(hi, 1), R)
    a = float(sorted_values[lo - 1])
    b = float(sorted_values[hi - 1])
    if np.isinf(b):
        # divergent replicates (gamma_hat on the boundary) reached into the
        # interval: width 0 if the whole interval diverges, else unbounded
        return 0.0 if np.isinf(a) else math.inf
    return (b - a) / 2.0


def quantile(result, level: float) -> tuple[float, float]:
    """Empirical quantile by the ceiling-index order statistic, with its
    order-statistic-interval standard error.  NaNs sort high."""
    values = _values_of(result)
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0,1), got {level}")
    s = np.sort(values)
    k = int(np.ceil(level * s.size))
    k = min(max(k, 1), s.size)
    return float(s[k - 1]), _order_interval_se(s, level)


def critical_value_index(replications: int, level: float) -> int:
    """1-based order-statistic index of the exact-test critical value.

    With m = floor(level*(R+1)), rejecting when the observed statistic
    exceeds the (R-m+1)-th order statistic is the same event (up to ties,
    which have probability zero) as the Monte Carlo p-value
    (1 + #{values >= observed})/(R+1) being <= level.
    """
    m = int(np.floor(level * (replications + 1)))
    if m < 1:
        raise ValueError(
            f"level {level} is below the resolution of {replications} replicates"
        )
    return replications - m + 1


def critical_value(result, level: float) -> tuple[float, float]:
    """Upper-tail critical value at the exact-test index, with order-interval SE."""
    values = _values_of(result)
    s = np.sort(values)
    k = critical_value_index(s.size, level)
    return float(s[k - 1]), _order_interval_se(s, 1.0 - level)


def mc_p_value(result, observed: float) -> float:
    """Exact Monte Carlo p-value (1 + #{values >= observed})/(R + 1)."""
    values = _values_of(result)
    count = int(np.sum(values >= observed))
    return (1.0 + count) / (values.size + 1.0)
