"""Decoherence-free subspace of collective dephasing.

Basis states are bitstrings with qubit 0 as the most significant bit; bit 0
is the Z = +1 eigenstate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .correlation import ContractionMatrix
from .errors import DimensionError, NoExactDFSError

MAX_QUBITS = 12


@dataclass(frozen=True)
class RegisterState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        amp = np.array(self.amplitudes, dtype=complex).ravel()
        if amp.size != 2 ** self.n_qubits:
            raise DimensionError(f"expected {2 ** self.n_qubits} amplitudes, got {amp.size}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized (norm {norm:.15f})")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_bitstrings(cls, coefficients, normalize=True):
        """Build from ``{"0110": c, ...}``."""
        items = list(coefficients.items())
        n = len(items[0][0])
        amp = np.zeros(2 ** n, dtype=complex)
        for bits, c in items:
            if len(bits) != n:
                raise DimensionError("bitstrings must share a length")
            amp[int(bits, 2)] += c
        if normalize:
            amp /= np.linalg.norm(amp)
        return cls(n, amp)

    @classmethod
    def from_amplitudes(cls, amplitudes):
        amp = np.asarray(amplitudes, dtype=complex).ravel()
        n = int(round(math.log2(amp.size))) if amp.size else 0
        if amp.size == 0 or 2 ** n != amp.size:
            raise DimensionError(f"amplitude count {amp.size} is not a power of two")
        return cls(n, amp)


def z_eigenvalues(n):
    """Array (2^n, n) of Z eigenvalues (+1/-1) for each basis index."""
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return 1 - 2 * bits


def dfs_basis(n: int) -> list[str]:
    """Bitstrings with equal numbers of 0 and 1, i.e. zero total Z."""
    if n < 2:
        raise ValueError("need at least two qubits")
    if n % 2:
        raise NoExactDFSError(
            f"no zero-eigenvalue sector of sum(Z) for odd N={n}; nearest sectors have "
            f"{(n - 1) // 2} or {(n + 1) // 2} ones (total Z = +1 / -1)"
        )
    out = []
    for ones in itertools.combinations(range(n), n // 2):
        bits = ["0"] * n
        for i in ones:
            bits[i] = "1"
        out.append("".join(bits))
    return sorted(out)


def collective_z_residual(state: RegisterState) -> float:
    """``|| (sum_j Z_j) |psi> ||``; zero exactly on the DFS."""
    total_z = z_eigenvalues(state.n_qubits).sum(axis=1)
    return float(np.linalg.norm(total_z * state.amplitudes))


def dfs_decoupling_check(C, state: RegisterState) -> float:
    """``<psi| sum_jm C[j,m] Z_j Z_m |psi>``, the second-moment decoherence exponent."""
    K = C.entries if isinstance(C, ContractionMatrix) else np.asarray(C, dtype=complex)
    if K.shape != (state.n_qubits, state.n_qubits):
        raise DimensionError(f"contraction matrix {K.shape} does not match {state.n_qubits} qubits")
    z = z_eigenvalues(state.n_qubits).astype(float)
    quad = np.einsum("bj,jm,bm->b", z, K, z)
    return float(np.real(np.sum(np.abs(state.amplitudes) ** 2 * quad)))


def interpolated_contraction(C, weight):
    """``(1 - w) diag(C) + w * C``: a path from independent to the given correlations."""
    K = C.entries if isinstance(C, ContractionMatrix) else np.asarray(C, dtype=complex)
    return (1.0 - weight) * np.diag(np.diag(K)) + weight * K


def encoding_rate(n):
    return math.log2(math.comb(n, n // 2)) / n
