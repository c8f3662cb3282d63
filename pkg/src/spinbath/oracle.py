"""Exact propagation of a few spins coupled to a few truncated bosonic modes.

Hilbert space ordering is ``spins (qubit 0 first) x mode 0 x ... x mode M-1``;
each mode keeps Fock states ``0 .. d-1``. The Hamiltonian is

    H = sum_j (Delta/2) X_j + sum_k w_k a_k^+ a_k
        + g sum_k (Zt_k a_k^+ + Zt_k^+ a_k),   Zt_k = sum_j Z_j exp(-i k.r_j)

with ``w_k = c |k|``. Truncation makes ``[a, a^+] = 1`` fail on the top Fock
level, so comparisons against closed-form operator identities are made on the
low-occupation input subspace where the physical states live.
"""
from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dfs import RegisterState
from .errors import DimensionError, FitError, ResonanceError, TruncationError

MAX_DIM = 2 ** 20
THERMAL_TAIL = 1e-8
CONVERGENCE_TOL = 1e-8

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class FockSystem:
    positions: np.ndarray
    wavevectors: np.ndarray
    coupling: float
    splitting: float = 0.0
    sound_speed: float = 1.0
    cutoff_dim: int = 8
    temperature: float = 0.0

    def __post_init__(self):
        pos = np.atleast_2d(np.array(self.positions, dtype=float))
        kv = np.atleast_2d(np.array(self.wavevectors, dtype=float))
        if pos.shape[1] != 3 or kv.shape[1] != 3:
            raise ValueError("positions and wavevectors must be 3-vectors")
        if np.any(np.linalg.norm(kv, axis=1) == 0):
            raise ValueError("zero wavevector gives a zero-frequency mode")
        if self.cutoff_dim < 2:
            raise ValueError("cutoff_dim must be >= 2")
        if self.sound_speed <= 0 or self.temperature < 0 or self.splitting < 0:
            raise ValueError("need sound_speed > 0, temperature >= 0, splitting >= 0")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "wavevectors", kv)
        if self.dimension > MAX_DIM:
            raise DimensionError(f"Hilbert space dimension {self.dimension} exceeds {MAX_DIM}")
        if self.temperature > 0:
            tail = np.exp(-self.frequencies * self.cutoff_dim / self.temperature)
            if np.any(tail > THERMAL_TAIL):
                raise TruncationError(
                    f"thermal occupation beyond d={self.cutoff_dim} is {tail.max():.2e} "
                    f"> {THERMAL_TAIL}; increase cutoff_dim"
                )

    @property
    def n_spins(self):
        return self.positions.shape[0]

    @property
    def n_modes(self):
        return self.wavevectors.shape[0]

    @property
    def frequencies(self):
        return self.sound_speed * np.linalg.norm(self.wavevectors, axis=1)

    @property
    def spin_dim(self):
        return 2 ** self.n_spins

    @property
    def bath_dim(self):
        return self.cutoff_dim ** self.n_modes

    @property
    def dimension(self):
        return self.spin_dim * self.bath_dim

    def phases(self):
        """``exp(-i k.r_j)`` with shape (modes, spins)."""
        return np.exp(-1j * self.wavevectors @ self.positions.T)

    def with_(self, **changes):
        return dataclasses.replace(self, **changes)

    def thermal_weights(self):
        """Boltzmann weights of the d^M product Fock states (vacuum: a single 1)."""
        w = np.zeros(self.bath_dim)
        if self.temperature == 0:
            w[0] = 1.0
            return w
        per_mode = []
        for om in self.frequencies:
            p = np.exp(-om * np.arange(self.cutoff_dim) / self.temperature)
            per_mode.append(p / p.sum())
        w = per_mode[0]
        for p in per_mode[1:]:
            w = np.kron(w, p)
        return w


@dataclass
class Operators:
    X: list
    Y: list
    Z: list
    a: list
    low: np.ndarray = field(repr=False)


def _embed(single, position, dims):
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[position] = single
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def operators(sys: FockSystem) -> Operators:
    d = sys.cutoff_dim
    dims = [2] * sys.n_spins + [d] * sys.n_modes
    lower = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    X = [_embed(_X, j, dims) for j in range(sys.n_spins)]
    Y = [_embed(_Y, j, dims) for j in range(sys.n_spins)]
    Z = [_embed(_Z, j, dims) for j in range(sys.n_spins)]
    a = [_embed(lower, sys.n_spins + k, dims) for k in range(sys.n_modes)]
    below_top = np.ones(d, dtype=bool)
    below_top[-1] = False
    low = np.ones(1, dtype=bool)
    for _ in range(sys.n_modes):
        low = np.kron(low, below_top).astype(bool)
    return Operators(X, Y, Z, a, np.tile(low, sys.spin_dim))


def _dag(m):
    return m.conj().T


def collective_z(sys, ops):
    """``Zt_k`` for every mode."""
    ph = sys.phases()
    return [sum(ph[k, j] * ops.Z[j] for j in range(sys.n_spins)) for k in range(sys.n_modes)]


def hamiltonian_parts(sys: FockSystem, ops: Operators | None = None):
    ops = ops or operators(sys)
    dim = sys.dimension
    h_s = sum((0.5 * sys.splitting * x for x in ops.X), np.zeros((dim, dim), complex))
    h_b = sum((w * _dag(a) @ a for w, a in zip(sys.frequencies, ops.a)), np.zeros((dim, dim), complex))
    h_sb = np.zeros((dim, dim), complex)
    for zt, a in zip(collective_z(sys, ops), ops.a):
        h_sb += sys.coupling * (zt @ _dag(a) + _dag(zt) @ a)
    return h_s, h_b, h_sb


def build_hamiltonian(sys: FockSystem) -> np.ndarray:
    h_s, h_b, h_sb = hamiltonian_parts(sys)
    H = h_s + h_b + h_sb
    if np.max(np.abs(H - _dag(H))) > 1e-12:
        raise AssertionError("Hamiltonian is not Hermitian")
    return H


def propagator(H, t):
    """``exp(-i H t)`` from the Hermitian eigendecomposition."""
    try:
        e, v = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise TruncationError(f"eigendecomposition failed: {exc}") from exc
    return (v * np.exp(-1j * e * t)) @ _dag(v)


def _spin_vector(spin_state, sys):
    if isinstance(spin_state, RegisterState):
        vec = spin_state.amplitudes
    else:
        vec = np.asarray(spin_state, dtype=complex).ravel()
    if vec.size != sys.spin_dim:
        raise DimensionError(f"spin state has {vec.size} amplitudes, system needs {sys.spin_dim}")
    return vec / np.linalg.norm(vec)


def uniform_superposition(n_spins):
    return np.full(2 ** n_spins, 2 ** (-n_spins / 2), dtype=complex)


@dataclass(frozen=True)
class EvolutionResult:
    rho: np.ndarray
    purity: float
    coherence: float
    converged: bool
    max_change: float
    joint_state: np.ndarray | None = None

    def scalars(self):
        return np.concatenate([[self.purity], self.rho.real.ravel(), self.rho.imag.ravel()])


def _evolve_once(sys, t, spin_vec):
    H = build_hamiltonian(sys)
    U = propagator(H, t)
    weights = sys.thermal_weights()
    keep = np.nonzero(weights > 1e-16)[0]
    # columns: spin_vec (x) |n> for each populated bath basis state
    psi0 = np.zeros((sys.dimension, keep.size), complex)
    for c, b in enumerate(keep):
        psi0[b::sys.bath_dim, c] = spin_vec
    psi = (U @ psi0).reshape(sys.spin_dim, sys.bath_dim, keep.size)
    p = weights[keep] / weights[keep].sum()
    rho = np.einsum("k,abk,cbk->ac", p, psi, psi.conj())
    joint = psi[..., 0].ravel() if sys.temperature == 0 else None
    return rho, joint


def _check_density_matrix(rho):
    if np.max(np.abs(rho - _dag(rho))) > 1e-10:
        raise AssertionError("reduced density matrix not Hermitian")
    if abs(np.trace(rho).real - 1) > 1e-10:
        raise AssertionError(f"reduced density matrix trace {np.trace(rho).real}")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
        raise AssertionError("reduced density matrix not PSD")


def evolve(sys: FockSystem, t: float, spin_state=None, *, check_convergence=True,
           strict=False) -> EvolutionResult:
    """Exact evolution of ``spin_state (x) bath`` and the reduced spin state.

    When ``check_convergence`` is set the run is repeated at ``d + 2`` and the
    result is flagged unconverged if purity or any density-matrix entry moves
    by more than 1e-8; ``strict`` turns that flag into TruncationError.
    """
    if spin_state is None:
        spin_state = uniform_superposition(sys.n_spins)
    vec = _spin_vector(spin_state, sys)
    rho, joint = _evolve_once(sys, t, vec)
    _check_density_matrix(rho)
    purity = float(np.real(np.trace(rho @ rho)))
    coherence = float(np.max(np.abs(rho - np.diag(np.diag(rho))))) if rho.shape[0] > 1 else 0.0
    change = 0.0
    if check_convergence:
        big = evolve(sys.with_(cutoff_dim=sys.cutoff_dim + 2), t, vec, check_convergence=False)
        ref = EvolutionResult(rho, purity, coherence, True, 0.0)
        change = float(np.max(np.abs(big.scalars() - ref.scalars())))
    converged = change <= CONVERGENCE_TOL
    if strict and not converged:
        raise TruncationError(f"truncation d={sys.cutoff_dim} not converged (change {change:.2e})")
    return EvolutionResult(rho, purity, coherence, converged, change, joint)


# --- dephasing (Delta = 0) closed form -------------------------------------

def displacement_amplitudes(sys: FockSystem, t: float) -> np.ndarray:
    """``f_k(r_j, t) = (g / w_k) exp(-i k.r_j) (1 - exp(i w_k t))`` with shape (modes, spins)."""
    w = sys.frequencies[:, None]
    return sys.coupling / w * sys.phases() * (1 - np.exp(1j * w * t))


def effective_interaction(sys: FockSystem, t: float, ops: Operators | None = None):
    """``sum_k (g / w_k)^2 Zt_k Zt_k^+ (w_k t - sin w_k t)`` on the full space."""
    ops = ops or operators(sys)
    out = np.zeros((sys.dimension, sys.dimension), complex)
    for w, zt in zip(sys.frequencies, collective_z(sys, ops)):
        out += (sys.coupling / w) ** 2 * (zt @ _dag(zt)) * (w * t - math.sin(w * t))
    return out


def displacement_generators(sys: FockSystem, t: float, ops: Operators | None = None):
    """``phi_j = sum_k f_k(r_j) a_k^+ - f_k(r_j)^* a_k`` for each spin."""
    ops = ops or operators(sys)
    f = displacement_amplitudes(sys, t)
    return [sum(f[k, j] * _dag(ops.a[k]) - np.conj(f[k, j]) * ops.a[k] for k in range(sys.n_modes))
            for j in range(sys.n_spins)]


@dataclass(frozen=True)
class DecompositionReport:
    difference: float
    commutator_norms: dict
    unitarity: float
    difference_full: float


def _input_columns(sys, max_occupation=0):
    """Indices of basis states with every mode at occupation <= max_occupation."""
    occ = np.array(list(itertools.product(range(sys.cutoff_dim), repeat=sys.n_modes)))
    bath_ok = np.all(occ <= max_occupation, axis=1)
    cols = [s * sys.bath_dim + b for s in range(sys.spin_dim) for b in np.nonzero(bath_ok)[0]]
    return np.array(cols)


def verify_dephasing_decomposition(sys: FockSystem, t: float) -> DecompositionReport:
    """Compare exact ``exp(-iHt)`` with ``exp(-i H_B t) exp(i H_eff) exp(sum_j Z_j phi_j)``.

    ``difference`` is the spectral norm on spin states with the bath in vacuum;
    commutators ``[phi_j, phi_m]`` are measured with the top Fock level projected out.
    """
    if sys.splitting != 0:
        raise ValueError("dephasing decomposition requires splitting = 0")
    ops = operators(sys)
    h_s, h_b, h_sb = hamiltonian_parts(sys, ops)
    U = propagator(h_b + h_sb, t)
    phis = displacement_generators(sys, t, ops)
    G = sum(z @ p for z, p in zip(ops.Z, phis))
    U_dec = (propagator(h_b, t) @ scipy.linalg.expm(1j * effective_interaction(sys, t, ops))
             @ scipy.linalg.expm(G))
    cols = _input_columns(sys)
    diff = float(np.linalg.norm((U - U_dec)[:, cols], 2))
    low = ops.low
    comms = {}
    for j in range(sys.n_spins):
        for m in range(j + 1, sys.n_spins):
            c = phis[j] @ phis[m] - phis[m] @ phis[j]
            comms[(j, m)] = float(np.linalg.norm(c[np.ix_(low, low)], 2))
    unit = float(np.linalg.norm(_dag(U) @ U - np.eye(sys.dimension), 2))
    return DecompositionReport(diff, comms, unit, float(np.linalg.norm(U - U_dec, 2)))


# --- bit-flip (Delta > 0) canonical transformation --------------------------

def canonical_generator(sys: FockSystem, ops: Operators | None = None) -> np.ndarray:
    """Anti-Hermitian ``S`` with ``H_SB + [H_S + H_B, S] = 0``."""
    ops = ops or operators(sys)
    delta = sys.splitting
    ph = sys.phases()
    S = np.zeros((sys.dimension, sys.dimension), complex)
    for j in range(sys.n_spins):
        raise_x = 0.5 * (ops.Z[j] - 1j * ops.Y[j])  # |+><-| in the X basis
        lower_x = 0.5 * (ops.Z[j] + 1j * ops.Y[j])
        for k, w in enumerate(sys.frequencies):
            t_pos = lower_x / (delta - w) - raise_x / (delta + w)
            t_neg = lower_x / (delta + w) - raise_x / (delta - w)
            a = ops.a[k]
            S += sys.coupling * (t_pos * ph[k, j] @ _dag(a) + t_neg * np.conj(ph[k, j]) @ a)
    return S


@dataclass(frozen=True)
class ScalingReport:
    couplings: np.ndarray
    infidelities: np.ndarray
    exponent: float
    halving_ratios: np.ndarray
    generator_residual: float


def _approximate_state(sys, t, vec, ops):
    h_s, h_b, h_sb = hamiltonian_parts(sys, ops)
    S = canonical_generator(sys, ops)
    psi0 = np.zeros(sys.dimension, complex)
    psi0[::sys.bath_dim] = vec
    exact = propagator(h_s + h_b + h_sb, t) @ psi0
    approx = scipy.linalg.expm(S) @ (propagator(h_s + h_b, t) @ (scipy.linalg.expm(-S) @ psi0))
    h0 = h_s + h_b
    resid = h_sb + h0 @ S - S @ h0
    return exact, approx, float(np.max(np.abs(resid)))


def verify_canonical_transformation(sys: FockSystem, t: float, couplings, spin_state=None
                                    ) -> ScalingReport:
    """Infidelity of ``exp(S) exp(-i H_0 t) exp(-S)`` against exact evolution over a g sweep.

    The fitted exponent ``p`` in ``infidelity ~ g^p`` measures the order of the
    neglected terms.
    """
    delta = sys.splitting
    if not delta > 0:
        raise ValueError("canonical transformation needs splitting > 0")
    if np.any(np.abs(sys.frequencies - delta) <= 0.1 * delta):
        raise ResonanceError("a mode lies within 10% of the splitting; S is ill-defined")
    vec = _spin_vector(uniform_superposition(sys.n_spins) if spin_state is None else spin_state, sys)
    couplings = np.asarray(couplings, dtype=float)
    infid = []
    resid = 0.0
    for g in couplings:
        s = sys.with_(coupling=float(g))
        ops = operators(s)
        exact, approx, r = _approximate_state(s, t, vec, ops)
        resid = max(resid, r)
        infid.append(max(0.0, 1.0 - abs(np.vdot(exact, approx)) ** 2))
    infid = np.array(infid)
    positive = couplings > 0
    if positive.sum() < 2 or np.any(infid[positive] <= 0) or not np.all(np.isfinite(infid)):
        raise FitError(f"cannot fit a power law to infidelities {infid}")
    slope = np.polyfit(np.log(couplings[positive]), np.log(infid[positive]), 1)[0]
    order = np.argsort(couplings)
    sorted_inf = infid[order]
    halving = sorted_inf[1:] / sorted_inf[:-1]
    return ScalingReport(couplings, infid, float(slope), halving, resid)


# --- decoherence-free subspace ----------------------------------------------

@dataclass(frozen=True)
class DFSReport:
    purity: float
    fidelity: float
    phase_mismatch: float
    converged: bool


def verify_dfs_decoupling(sys: FockSystem, t: float, spin_state) -> DFSReport:
    """Evolve ``spin_state (x) bath`` exactly and compare with ``exp(i H_eff) |psi>``."""
    if sys.splitting != 0:
        raise ValueError("DFS check requires splitting = 0")
    ph = sys.phases()
    mismatch = float(np.max(np.abs(ph[:, :, None] - ph[:, None, :])))
    if mismatch > 1e-6:
        raise ValueError(f"mode phases across qubits differ by {mismatch:.2e} > 1e-6; "
                         "use longer wavelengths")
    vec = _spin_vector(spin_state, sys)
    res = evolve(sys, t, vec)
    # H_eff acts on spins only; evaluate it on the spin factor
    spin_sys = sys.with_(cutoff_dim=2, temperature=0.0)
    heff = effective_interaction(spin_sys, t)[::2 ** spin_sys.n_modes, ::2 ** spin_sys.n_modes]
    target = scipy.linalg.expm(1j * heff) @ vec
    fid = float(np.real(np.vdot(target, res.rho @ target)))
    return DFSReport(res.purity, fid, mismatch, res.converged)
