"""Concatenated-code failure rates with and without correlated-error enhancement.

Everything is evaluated in log space; ``n`` is the error weight, e.g. ``2**k``
for k levels of a distance-3 code. Returned probabilities are upper bounds
(``P_n <= A_n^2``), not exact rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

LOG_SQRT2 = 0.5 * math.log(2.0)


@dataclass(frozen=True)
class ThresholdQuery:
    p1: float
    p_th: float
    n: int

    def __post_init__(self):
        if not 0 <= self.p1 <= 1:
            raise ValueError(f"P_1 must lie in [0, 1], got {self.p1}")
        if not 0 < self.p_th < 1:
            raise ValueError(f"P_th must lie in (0, 1), got {self.p_th}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))


def _exp(log_value):
    if log_value == -math.inf:
        return 0.0
    # far above threshold the bound exceeds any float; it is vacuous there anyway
    return math.inf if log_value > 709.0 else math.exp(log_value)


def _log_ratio(q):
    return -math.inf if q.p1 == 0 else math.log(q.p1) - math.log(q.p_th)


def log_pairing_count(n):
    """``log((2n)! / (2^n n!))``."""
    return math.lgamma(2 * n + 1) - n * math.log(2.0) - math.lgamma(n + 1)


def log_independent_pfail(q: ThresholdQuery) -> float:
    return math.log(q.p_th) + q.n * _log_ratio(q)


def independent_pfail(q: ThresholdQuery) -> float:
    """``P_th (P_1 / P_th)^n``."""
    return _exp(log_independent_pfail(q))


def log_correlated_pfail(q: ThresholdQuery, exact: bool = False) -> float:
    if q.p1 == 0:
        return -math.inf
    if exact:
        prefactor = log_pairing_count(q.n)
    else:
        prefactor = LOG_SQRT2 + q.n * math.log(2.0 * q.n / math.e)
    return prefactor + log_independent_pfail(q)


def correlated_pfail(q: ThresholdQuery, exact: bool = False) -> float:
    """Failure bound when all bath contractions are equal.

    The default uses the Stirling form ``sqrt(2) P_th (2n/e * P_1/P_th)^n``;
    ``exact=True`` uses the full pairing count ``(2n-1)!!`` instead.
    """
    return _exp(log_correlated_pfail(q, exact))


def breakdown_point(p_th: float, n: int) -> float:
    """``P_1`` below which concatenation to weight ``n`` stops paying off: ``(e / 2n) P_th``."""
    if not 0 < p_th < 1:
        raise ValueError("P_th must lie in (0, 1)")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    return math.e / (2.0 * n) * p_th


def sweep(n_values, p1_values, p_th):
    """Rows ``(n, P_1, P_fail_indep, P_fail_corr, breakdown)`` over the grid."""
    rows = []
    for n in n_values:
        b = breakdown_point(p_th, n)
        for p1 in p1_values:
            q = ThresholdQuery(p1, p_th, n)
            rows.append((n, p1, independent_pfail(q), correlated_pfail(q), b))
    return rows
