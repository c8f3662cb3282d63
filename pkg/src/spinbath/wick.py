"""Multi-qubit error amplitudes as Gaussian moments of bath displacements.

``A_n^2`` for the pattern ``(j_1, ..., j_n)`` is the vacuum/thermal expectation
of ``phi_j1^+ phi_j1 ... phi_jn^+ phi_jn``, evaluated by summing over every
perfect matching of the 2n operator slots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .correlation import CHANNELS, DEPHASING_Z, ContractionMatrix
from .errors import CapacityError, UndefinedRatioError

N_MAX = 8


def double_factorial_odd(n):
    """``(2n - 1)!! = (2n)! / (2^n n!)``, the number of perfect matchings of 2n items."""
    return math.factorial(2 * n) // (2 ** n * math.factorial(n))


@lru_cache(maxsize=None)
def matching_table(n_slots):
    """All perfect matchings of ``range(n_slots)`` as an int8 array (count, n_slots//2, 2).

    Rows are grouped by the partner of slot 0, in increasing order, and every
    pair is stored as ``(a, b)`` with ``a < b``.
    """
    if n_slots % 2:
        raise ValueError("need an even number of slots")
    if n_slots == 0:
        tbl = np.zeros((1, 0, 2), dtype=np.int8)
        tbl.setflags(write=False)
        return tbl
    sub = matching_table(n_slots - 2)
    blocks = []
    for partner in range(1, n_slots):
        rest = np.array([s for s in range(1, n_slots) if s != partner], dtype=np.int8)
        block = np.empty((sub.shape[0], n_slots // 2, 2), dtype=np.int8)
        block[:, 0, 0] = 0
        block[:, 0, 1] = partner
        block[:, 1:, :] = rest[sub]
        blocks.append(block)
    tbl = np.concatenate(blocks)
    if tbl.shape[0] != double_factorial_odd(n_slots // 2):
        raise AssertionError("matching enumeration count mismatch")
    tbl.setflags(write=False)
    return tbl


@dataclass(frozen=True)
class ErrorPattern:
    indices: tuple
    channel: str = DEPHASING_Z

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise ValueError("error pattern must name at least one qubit")
        if len(set(idx)) != len(idx):
            raise ValueError(f"error pattern indices must be distinct: {idx}")
        if min(idx) < 0:
            raise ValueError("qubit indices must be >= 0")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        object.__setattr__(self, "indices", idx)

    @property
    def weight(self):
        return len(self.indices)


@dataclass(frozen=True)
class AmplitudeReport:
    pattern: ErrorPattern
    amplitude_sq: float
    independent_product: float
    enhancement: float
    matching_count: int
    violation: bool = False

    def to_dict(self):
        return {
            "pattern": list(self.pattern.indices),
            "channel": self.pattern.channel,
            "n": self.pattern.weight,
            "amplitude_sq": self.amplitude_sq,
            "independent_product": self.independent_product,
            "enhancement": self.enhancement,
            "matching_count": self.matching_count,
            "violation": self.violation,
        }


def _entries(C):
    return C.entries if isinstance(C, ContractionMatrix) else np.asarray(C, dtype=complex)


def _as_pattern(pattern):
    return pattern if isinstance(pattern, ErrorPattern) else ErrorPattern(tuple(pattern))


def gaussian_moment(C, pattern, *, n_max: int = N_MAX, ordering: str = "forward") -> float:
    """``<phi_j1^+ phi_j1 ... phi_jn^+ phi_jn>`` by exhaustive Wick pairing.

    Each pairing term multiplies n ordered contractions ``<x_a x_b>``; with
    ``ordering="forward"`` the earlier slot sits on the left (``a < b``),
    ``"reverse"`` swaps them, which only matters for a non-symmetric ``C``.
    """
    pattern = _as_pattern(pattern)
    K = _entries(C)
    n = pattern.weight
    if n > n_max:
        raise CapacityError(f"pattern weight {n} exceeds n_max={n_max} "
                            f"({double_factorial_odd(n)} matchings)")
    if max(pattern.indices) >= K.shape[0]:
        raise IndexError(f"pattern {pattern.indices} out of range for {K.shape[0]} qubits")

    qubit = np.repeat(np.asarray(pattern.indices), 2)
    # slot signs from phi^+ = -phi; <phi_a phi_b> = -K
    sign = np.tile([-1.0, 1.0], n)
    ordered = K[np.ix_(qubit, qubit)]
    if ordering == "reverse":
        ordered = ordered.T
    elif ordering != "forward":
        raise ValueError("ordering must be 'forward' or 'reverse'")
    pair_value = -np.outer(sign, sign) * ordered

    tbl = matching_table(2 * n)
    block = tbl.shape[0] // (2 * n - 1)
    partial = []
    for b in range(2 * n - 1):
        rows = tbl[b * block:(b + 1) * block]
        terms = np.prod(pair_value[rows[..., 0], rows[..., 1]], axis=1)
        partial.append(math.fsum(terms.real))
    return math.fsum(partial)


def independence_deviation(C, patterns, delta: float = 0.1) -> list:
    """Ratio of ``A_n^2`` to the product of single-qubit ``A_1^2`` for each pattern."""
    K = _entries(C)
    channel = C.channel if isinstance(C, ContractionMatrix) else DEPHASING_Z
    reports = []
    for p in patterns:
        if not isinstance(p, ErrorPattern):
            p = ErrorPattern(tuple(p), channel)
        singles = [float(K[j, j].real) for j in p.indices]
        if min(singles) <= 0:
            raise UndefinedRatioError(f"zero single-qubit amplitude in pattern {p.indices}")
        a_sq = gaussian_moment(K, p)
        prod = math.prod(singles)
        ratio = a_sq / prod
        reports.append(AmplitudeReport(
            pattern=p,
            amplitude_sq=a_sq,
            independent_product=prod,
            enhancement=ratio,
            matching_count=double_factorial_odd(p.weight),
            violation=not (1 - delta <= ratio <= 1 + delta),
        ))
    return reports


def stirling_pairing_estimate(n):
    """Large-n form ``sqrt(2) (2n/e)^n`` of the matching count."""
    return math.sqrt(2.0) * (2.0 * n / math.e) ** n
