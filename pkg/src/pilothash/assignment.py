"""Bucket assignment functions and their tabulated form.

A bucket assignment function maps a normalized hash x in (0, 1] to a
normalized bucket index in [0, 1]; the bucket of x is ceil(gamma(x) * B).
Four families are supported:

  uniform     gamma(x) = x
  skew        the classic 60/30 split: half-slope below 0.6, steep above
  beta_star   x + (1 - x) * ln(1 - x), the work-optimal curve
  beta_eps    eps * x + (1 - eps) * beta_star(x), damped so expected
              bucket sizes stay below (average size) / eps

Evaluation goes through a 2049-entry table with linear interpolation;
the grid values are exact, and `inverse` inverts the interpolated
function itself (by bisection) so derived quantities stay internally
consistent with what the builder actually uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRID = 2048

KINDS = ("uniform", "skew", "beta_star", "beta_eps")
KIND_CODES = {k: i for i, k in enumerate(KINDS)}


@dataclass(frozen=True)
class AssignmentSpec:
    """Which assignment function to use; epsilon only matters for beta_eps."""

    kind: str = "beta_eps"
    epsilon: float = 0.0

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ValueError(f"unknown assignment kind {self.kind!r}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")


def beta_star(x: float) -> float:
    """The work-optimal assignment curve x + (1-x)ln(1-x); 1 at x = 1 by continuity."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 1.0:
        return 1.0
    return x + (1.0 - x) * math.log1p(-x)


def beta_eps(x: float, epsilon: float) -> float:
    """Damped optimal curve eps*x + (1-eps)*beta_star(x)."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must be in [0, 1)")
    return epsilon * x + (1.0 - epsilon) * beta_star(x)


def default_epsilon(lam: float, partition_size: float) -> float:
    """Default damping: lambda / (5 sqrt(P)), clamped to [0, 0.99]."""
    if lam < 0 or partition_size <= 0:
        raise ValueError("lambda must be >= 0 and partition size > 0")
    return min(0.99, max(0.0, lam / (5.0 * math.sqrt(partition_size))))


def skew(x: float) -> float:
    """PTHash/FCH-style imbalance: 60% of keys into the first 30% of buckets."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x <= 0.6:
        return 0.5 * x
    return 1.75 * x - 0.75


def bucket_count(partition_size: float, lam: float) -> int:
    """Buckets per partition, B = round(P / lambda), at least 1."""
    if lam <= 0 or partition_size < 1:
        raise ValueError("lambda must be > 0 and partition size >= 1")
    return max(1, round(partition_size / lam))


def _curve(spec: AssignmentSpec):
    if spec.kind == "uniform":
        return lambda x: x
    if spec.kind == "skew":
        return skew
    if spec.kind == "beta_star":
        return beta_star
    return lambda x: beta_eps(x, spec.epsilon)


@dataclass(frozen=True)
class AssignmentTable:
    """Tabulated assignment function: gamma at x = k/2048 for k = 0..2048."""

    entries: np.ndarray
    spec: AssignmentSpec

    def eval(self, x: float) -> float:
        return eval_table(self, x)

    def bucket(self, x: float, bcount: int) -> int:
        return bucket_for_hash(self, x, bcount)

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.entries) > 0))


def tabulate(spec: AssignmentSpec) -> AssignmentTable:
    gamma = _curve(spec)
    entries = np.empty(GRID + 1, dtype=np.float64)
    for k in range(GRID + 1):
        entries[k] = gamma(k / GRID)
    entries.setflags(write=False)
    return AssignmentTable(entries, spec)


def eval_table(table: AssignmentTable, x: float) -> float:
    """Linear interpolation between grid entries; exact at grid points."""
    if not 0.0 < x <= 1.0:
        raise ValueError("x must be in (0, 1]")
    e = table.entries
    t = x * float(GRID)
    k = int(t)
    if k >= GRID:
        return float(e[GRID])
    return float(e[k] + (t - k) * (e[k + 1] - e[k]))


def eval_many(table: AssignmentTable, x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`eval_table` over an array of x in (0, 1]."""
    e = table.entries
    t = x * float(GRID)
    k = t.astype(np.int64)
    kc = np.minimum(k, GRID - 1)
    interp = e[kc] + (t - kc) * (e[kc + 1] - e[kc])
    return np.where(k >= GRID, e[GRID], interp)


def bucket_many(table: AssignmentTable, x: np.ndarray, bcount: int) -> np.ndarray:
    """Vectorized :func:`bucket_for_hash`."""
    b = np.ceil(eval_many(table, x) * bcount).astype(np.int64)
    return np.clip(b, 1, bcount)


def bucket_for_hash(table: AssignmentTable, x: float, bcount: int) -> int:
    """Bucket of hash x: ceil(gamma(x) * B), clamped to [1, B]."""
    if bcount < 1:
        raise ValueError("bucket count must be >= 1")
    b = math.ceil(eval_table(table, x) * bcount)
    if b < 1:
        return 1
    if b > bcount:
        return bcount
    return b


def inverse(table: AssignmentTable, y: float) -> float:
    """x with eval(table, x) = y within 1e-12, by bisection on the table.

    Inverts the interpolated function, not the analytic curve, so that
    expected-size computations agree with what evaluation actually does.
    """
    if not 0.0 <= y <= 1.0:
        raise ValueError("y must be in [0, 1]")
    if not table.strictly_increasing:
        raise ValueError("table is not strictly increasing; cannot invert")
    if y <= 0.0:
        return 0.0
    if y >= 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        v = eval_table(table, mid) if mid > 0.0 else 0.0
        if abs(v - y) <= 1e-12:
            return mid
        if v < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
