"""Failure-time data matrices and their rank structure.

The observed data are M independent systems, each contributing a strictly
increasing row of r failure times.  All distribution-free machinery consumes
only the *rank structure* of the pooled sample: the global ordering of all
M*r failure times together with, at each event, how many systems currently
sit in each stage.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "DataMatrix",
    "RankStructure",
    "rank_structure",
    "perturb_ties",
]


@dataclass(frozen=True)
class DataMatrix:
    """Validated (M, r) matrix of failure times.

    Rows are systems, columns are failure stages.  Entries must be positive,
    finite and strictly increasing along each row.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"data must be a 2-d matrix, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"data must be nonempty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise DataError(
                f"non-finite entry at (system {bad[0] + 1}, column {bad[1] + 1})"
            )
        if np.any(values <= 0):
            bad = np.argwhere(values <= 0)[0]
            raise DataError(
                f"nonpositive failure time at (system {bad[0] + 1}, column {bad[1] + 1})"
            )
        if values.shape[1] > 1:
            diffs = np.diff(values, axis=1)
            if np.any(diffs <= 0):
                bad = np.argwhere(diffs <= 0)[0]
                raise DataError(
                    f"row {bad[0] + 1} is not strictly increasing at column {bad[1] + 2}"
                )
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def r(self) -> int:
        return self.values.shape[1]

    @classmethod
    def read_csv(cls, path, perturb: bool = False) -> "DataMatrix":
        """Load a matrix from CSV, one row per system; a header line is allowed.

        ``perturb=True`` applies :func:`perturb_ties` to the raw values before
        validation, for files with recording-precision ties.
        """
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise DataError(f"no data rows in {path}")
        skip = 0
        try:
            [float(tok) for tok in lines[0].replace(",", " ").split()]
        except ValueError:
            skip = 1
        body = "\n".join(lines[skip:])
        if not body.strip():
            raise DataError(f"no data rows in {path}")
        try:
            values = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataError(f"could not parse {path}: {exc}") from None
        if perturb:
            values = perturb_ties(values)
        return cls(values)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.values, delimiter=",", fmt="%.17g")


def perturb_ties(values, row_eps: float = 1e-9, col_eps: float = 1e-12) -> np.ndarray:
    """Break exact ties by a deterministic, rank-preserving-in-the-limit nudge.

    Entry (i, j) (1-based) is shifted by ``(i * row_eps + j * col_eps) * scale``
    where ``scale`` is the largest absolute entry.  The offsets are strictly
    increasing in (i, j) lexicographic order, so tied entries come apart in a
    reproducible way while distinct entries keep their order for any sane eps.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DataError(f"data must be a 2-d matrix, got shape {values.shape}")
    scale = np.max(np.abs(values)) if values.size else 1.0
    if scale == 0.0 or not np.isfinite(scale):
        scale = 1.0
    i = np.arange(1, values.shape[0] + 1)[:, None]
    j = np.arange(1, values.shape[1] + 1)[None, :]
    return values + (i * row_eps + j * col_eps) * scale


@dataclass(frozen=True)
class RankStructure:
    """Pooled-sample event sequence of a DataMatrix.

    Attributes
    ----------
    times : ndarray, shape (E,)
        All failure times in increasing global order, E = M * r.
    system : ndarray, shape (E,)
        1-based system index of each event.
    stage : ndarray, shape (E,)
        1-based stage of each event: the k-th failure of its system has
        stage k.
    counts : ndarray, shape (E, r)
        counts[e, j-1] is the number of systems sitting in stage j just
        before event e (systems past their r-th failure are excluded, so
        the row sums are M until the first system finishes, then decrease).
    M, r : int
        Dimensions of the originating matrix.
    """

    times: np.ndarray
    system: np.ndarray
    stage: np.ndarray
    counts: np.ndarray
    M: int
    r: int

    def __post_init__(self):
        for name in ("times", "system", "stage", "counts"):
            arr = np.asarray(getattr(self, name))
            arr = arr.astype(np.float64 if name in ("times", "counts") else np.int64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_events(self) -> int:
        return self.times.shape[0]

    def stage0(self) -> np.ndarray:
        """0-based stage indices (for array indexing)."""
        return self.stage - 1


def _find_ties(values: np.ndarray) -> str:
    flat = values.ravel()
    uniq, inv, cnt = np.unique(flat, return_inverse=True, return_counts=True)
    dup = np.nonzero(cnt > 1)[0]
    parts = []
    r = values.shape[1]
    for u in dup[:3]:
        where = np.nonzero(inv == u)[0]
        locs = ", ".join(
            f"(system {k // r + 1}, column {k % r + 1})" for k in where
        )
        parts.append(f"value {uniq[u]:g} at {locs}")
    more = "" if dup.size <= 3 else f" (and {dup.size - 3} more tied values)"
    return "; ".join(parts) + more


def rank_structure(data, ties: str = "error") -> RankStructure:
    """Reduce a data matrix to its pooled-event rank structure.

    By default, ties anywhere in the matrix are rejected with a message
    naming the colliding entries, since the global event order would be
    ambiguous.  With ``ties="breslow"`` tied times are treated as
    simultaneous: every event in a tied group is assigned the stage
    occupancy from just before the group, the usual partial-likelihood
    convention for tied event times.  The result depends on the data only
    through ranks: any strictly increasing transform of the values yields
    the same structure.
    """
    if ties not in ("error", "breslow"):
        raise ValueError(f'ties must be "error" or "breslow", got {ties!r}')
    values = data.values if isinstance(data, DataMatrix) else DataMatrix(data).values
    M, r = values.shape
    flat = values.ravel()
    if ties == "error" and np.unique(flat).size != flat.size:
        raise DataError("tied failure times: " + _find_ties(values))
    order = np.argsort(flat, kind="stable")
    times = flat[order]
    system = order // r
    stage = order % r
    counts = np.zeros((M * r, r), dtype=np.float64)
    state = np.zeros(r, dtype=np.float64)
    state[0] = M
    e = 0
    while e < M * r:
        g = e + 1
        while g < M * r and times[g] == times[e]:
            g += 1
        counts[e:g] = state
        for k in range(e, g):
            j = stage[k]
            state[j] -= 1
            if j + 1 < r:
                state[j + 1] += 1
        e = g
    return RankStructure(
        times=times,
        system=system + 1,
        stage=stage + 1,
        counts=counts,
        M=M,
        r=r,
    )
