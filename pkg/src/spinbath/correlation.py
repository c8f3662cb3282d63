"""Contraction matrices for a qubit register and the regime diagnostics built on them.

Entries are stored as the non-negative magnitudes ``K[j, m] = <phi_j^+ phi_m>``
(the bath displacement operators are anti-Hermitian, so ``<phi_j phi_m> = -K``).
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bath_kernel import BathSpec, KernelQuery, evaluate_bitflip, evaluate_dephasing
from .errors import IntegrationError, KernelEvaluationError, UndefinedRatioError

DEPHASING_Z = "dephasing-Z"
BITFLIP_Z = "bitflip-Z"
BITFLIP_Y = "bitflip-Y"
CHANNELS = (DEPHASING_Z, BITFLIP_Z, BITFLIP_Y)

INDEPENDENT = "independent"
INTERMEDIATE = "intermediate"
CORRELATED = "correlated"
_SEVERITY = {INDEPENDENT: 0, INTERMEDIATE: 1, CORRELATED: 2}


@dataclass(frozen=True)
class QubitLayout:
    positions: np.ndarray
    splitting: float = 0.0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim == 1 and pos.size == 3:
            pos = pos[None, :]
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError(f"positions must have shape (N, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if not (math.isfinite(self.splitting) and self.splitting >= 0):
            raise ValueError("splitting must be finite and >= 0")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def collinear(cls, n, spacing, splitting=0.0):
        pos = np.zeros((n, 3))
        pos[:, 0] = spacing * np.arange(n)
        return cls(pos, splitting)

    @property
    def n_qubits(self):
        return self.positions.shape[0]

    def distances(self):
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def translated(self, shift):
        return QubitLayout(self.positions + np.asarray(shift, dtype=float), self.splitting)

    def permuted(self, order):
        return QubitLayout(self.positions[list(order)], self.splitting)


@dataclass(frozen=True, eq=False)
class ContractionMatrix:
    entries: np.ndarray
    time: float
    channel: str
    splitting: float = 0.0
    errors: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        ent = np.array(self.entries, dtype=complex)
        if ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
            raise ValueError("contraction matrix must be square")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}; expected one of {CHANNELS}")
        ent.setflags(write=False)
        object.__setattr__(self, "entries", ent)

    def __eq__(self, other):
        if not isinstance(other, ContractionMatrix):
            return NotImplemented
        return (self.time == other.time and self.channel == other.channel
                and self.splitting == other.splitting
                and np.array_equal(self.entries, other.entries))

    __hash__ = None

    @property
    def n(self):
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    def invariant_violations(self, tol=1e-9):
        """List of broken structural invariants (empty when the matrix is sound)."""
        C = self.entries
        scale = max(float(np.max(np.abs(C))), 1e-300)
        out = []
        if np.max(np.abs(C - C.T)) > tol * scale:
            out.append("not symmetric")
        d = np.diag(C)
        if np.max(np.abs(d.imag)) > tol * scale or np.min(d.real) < -tol * scale:
            out.append("diagonal not real non-negative")
        bound = np.sqrt(np.outer(np.abs(d.real), np.abs(d.real)))
        if np.any(np.abs(C) > bound + tol * scale):
            out.append("Cauchy-Schwarz bound violated")
        return out

    def to_dict(self):
        return {
            "time": self.time,
            "channel": self.channel,
            "splitting": self.splitting,
            "real": self.entries.real.tolist(),
            "imag": self.entries.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        ent = np.asarray(d["real"], dtype=float) + 1j * np.asarray(d["imag"], dtype=float)
        return cls(ent, float(d["time"]), d["channel"], float(d["splitting"]))

    def csv_rows(self):
        """Row-major records ``(t, channel, splitting, row, col, real, imag)``."""
        for j in range(self.n):
            for m in range(self.n):
                z = self.entries[j, m]
                yield (self.time, self.channel, self.splitting, j, m, z.real, z.imag)

    def to_csv(self):
        buf = io.StringIO()
        write_contraction_csv(buf, [self])
        return buf.getvalue()


CSV_HEADER = ("t", "channel", "splitting", "row", "col", "real", "imag")


def write_contraction_csv(stream, matrices):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for C in matrices:
        for t, ch, dl, j, m, re, im in C.csv_rows():
            w.writerow([f"{t:.12e}", ch, f"{dl:.12e}", j, m, f"{re:.12e}", f"{im:.12e}"])


def _distance_key(r):
    return 0.0 if r == 0 else float(f"{r:.12e}")


def build_contraction_matrix(bath: BathSpec, layout: QubitLayout, t: float, channel: str,
                             *, workers: int = 1, **quad) -> ContractionMatrix:
    """Evaluate the kernel for every pair, once per distinct distance."""
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
    if not t >= 0:
        raise ValueError("time must be >= 0")
    delta = layout.splitting
    if channel != DEPHASING_Z and not delta > 0:
        raise ValueError(f"channel {channel} requires splitting > 0")

    dist = layout.distances()
    n = layout.n_qubits
    keys = {}
    for j in range(n):
        for m in range(j, n):
            keys.setdefault(_distance_key(dist[j, m]), (j, m))

    def one(key):
        if t == 0:
            return 0j, 0.0
        try:
            if channel == DEPHASING_Z:
                res = evaluate_dephasing(bath, KernelQuery(key, t, 0.0), **quad)
            else:
                # bitflip-Y shares the bitflip-Z kernel magnitude
                res = evaluate_bitflip(bath, KernelQuery(key, t, delta), **quad)
        except IntegrationError as exc:
            raise KernelEvaluationError(keys[key], exc) from exc
        return res.value, res.error

    ordered = sorted(keys)
    if workers > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, ordered))
    else:
        values = [one(k) for k in ordered]
    table = dict(zip(ordered, values))

    entries = np.empty((n, n), dtype=complex)
    errors = np.empty((n, n))
    for j in range(n):
        for m in range(j, n):
            v, e = table[_distance_key(dist[j, m])]
            entries[j, m] = entries[m, j] = v
            errors[j, m] = errors[m, j] = e
    return ContractionMatrix(entries, float(t), channel, float(delta), errors)


def correlation_ratio(C: ContractionMatrix, j: int, m: int) -> float:
    """Normalized contraction ``C[j,m] / sqrt(C[j,j] C[m,m])``."""
    ent = C.entries if isinstance(C, ContractionMatrix) else np.asarray(C)
    djj, dmm = ent[j, j].real, ent[m, m].real
    if djj <= 0 or dmm <= 0:
        raise UndefinedRatioError(f"zero self-contraction at ({j}, {m}); ratio undefined")
    return float(ent[j, m].real / math.sqrt(djj * dmm))


@dataclass(frozen=True)
class RegimeReport:
    pairs: dict
    ratios: dict
    overall: str


def classify_regime(C: ContractionMatrix, theta_indep: float = 0.1,
                    theta_corr: float = 0.9) -> RegimeReport:
    if not 0 < theta_indep < theta_corr < 1:
        raise ValueError("need 0 < theta_indep < theta_corr < 1")
    n = C.n if isinstance(C, ContractionMatrix) else len(C)
    labels, ratios = {}, {}
    overall = INDEPENDENT
    for j in range(n):
        for m in range(j + 1, n):
            r = correlation_ratio(C, j, m)
            if abs(r) < theta_indep:
                lab = INDEPENDENT
            elif abs(r) > theta_corr:
                lab = CORRELATED
            else:
                lab = INTERMEDIATE
            labels[(j, m)] = lab
            ratios[(j, m)] = r
            if _SEVERITY[lab] > _SEVERITY[overall]:
                overall = lab
    return RegimeReport(labels, ratios, overall)
