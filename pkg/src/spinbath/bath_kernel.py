"""Continuum-bath integrals for qubits sharing an isotropic 3D bosonic bath.

Mode sums are replaced by frequency integrals against the spectral density
``J(w) = alpha * w**s * exp(-w / w_c)``; the angular average of the plane-wave
phase between two qubits at distance R is ``sinc(w R / c)``. Units have
hbar = k_B = 1 throughout.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import PrincipalValueError
from .quadrature import integrate

log = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-7
DEFAULT_ATOL = 1e-9
CUTOFF_MULTIPLE = 40.0
EXCISION_FRACTIONS = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class BathSpec:
    """Physical parameters of the bath (3D, linear dispersion ``w = c k``)."""

    coupling_strength: float = 0.05
    spectral_exponent: float = 1.0
    cutoff_frequency: float = 1.0
    sound_speed: float = 1.0
    temperature: float = 0.0

    def __post_init__(self):
        for name in ("coupling_strength", "spectral_exponent", "cutoff_frequency",
                     "sound_speed", "temperature"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.coupling_strength < 0:
            raise ValueError("coupling_strength must be >= 0")
        if self.spectral_exponent < 0:
            raise ValueError("spectral_exponent must be >= 0")
        if self.cutoff_frequency <= 0:
            raise ValueError("cutoff_frequency must be > 0")
        if self.sound_speed <= 0:
            raise ValueError("sound_speed must be > 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def spectral_density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self.coupling_strength * _shape(self, omega)

    @property
    def upper_frequency(self):
        return CUTOFF_MULTIPLE * self.cutoff_frequency


@dataclass(frozen=True)
class KernelQuery:
    separation: float
    time: float
    splitting: float = 0.0

    def __post_init__(self):
        if not (self.separation >= 0 and math.isfinite(self.separation)):
            raise ValueError("separation must be finite and >= 0")
        if not (self.time >= 0 and math.isfinite(self.time)):
            raise ValueError("time must be finite and >= 0")
        if not (self.splitting >= 0 and math.isfinite(self.splitting)):
            raise ValueError("splitting must be finite and >= 0")


@dataclass(frozen=True)
class KernelResult:
    value: complex
    error: float
    evaluations: int
    resonance_fraction: float = float("nan")

    @property
    def resonance_dominated(self):
        return bool(self.resonance_fraction > 0.999)


def _shape(bath, omega):
    # J / alpha; alpha is applied after integration so kernels are exactly linear in it
    return omega ** bath.spectral_exponent * np.exp(-omega / bath.cutoff_frequency)


def _coth(omega, temperature):
    if temperature == 0:
        return np.ones_like(omega)
    # 1/tanh overflows for subnormal arguments; the clamp leaves the integral unchanged
    omega = np.maximum(omega, 1e-300)
    return 1.0 / np.tanh(omega / (2.0 * temperature))


def _sinc(x):
    return np.sinc(x / np.pi)


def thermal_factor(omega, temperature):
    """Return ``<a+ a> + <a a+> = coth(w / 2T)``; exactly 1 at T = 0."""
    omega = float(omega)
    if not omega > 0:
        raise ValueError(f"thermal factor needs omega > 0, got {omega}")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0:
        return 1.0
    return 1.0 / math.tanh(omega / (2.0 * temperature))


def _panel_scale(bath, separation, time):
    scales = [bath.cutoff_frequency / 4.0]
    if time > 0:
        scales.append(2 * math.pi / time)
    if separation > 0:
        scales.append(2 * math.pi * bath.sound_speed / separation)
    return min(scales)


def _uniform_edges(lo, hi, scale):
    n = max(1, int(math.ceil((hi - lo) / scale)))
    return np.linspace(lo, hi, n + 1)


def _finish(bath, res, resonance_fraction=float("nan")):
    alpha = bath.coupling_strength
    return KernelResult(
        value=complex(alpha * res.value, 0.0),
        error=alpha * res.error,
        evaluations=res.evaluations,
        resonance_fraction=resonance_fraction,
    )


def evaluate_dephasing(bath: BathSpec, query: KernelQuery, *, rtol=DEFAULT_RTOL,
                       atol=DEFAULT_ATOL, max_panels=4_000_000) -> KernelResult:
    """Dephasing contraction ``int J (4/w^2) sinc(wR/c) sin^2(wt/2) coth(w/2T) dw``."""
    if query.splitting != 0:
        raise ValueError("dephasing kernel requires splitting = 0")
    R, t = query.separation, query.time
    if t == 0 or bath.coupling_strength == 0:
        return KernelResult(0j, 0.0, 0)
    k_over_w = R / bath.sound_speed
    T = bath.temperature

    def f(w):
        # 4 sin^2(wt/2) / w^2 = t^2 sinc^2(wt/2), finite at w -> 0
        return (_shape(bath, w) * t * t * _sinc(0.5 * w * t) ** 2
                * _sinc(w * k_over_w) * _coth(w, T))

    edges = _uniform_edges(0.0, bath.upper_frequency, _panel_scale(bath, R, t))
    res = integrate(f, edges, rtol=rtol, atol=atol, max_panels=max_panels)
    return _finish(bath, res)


def evaluate_bitflip(bath: BathSpec, query: KernelQuery, *, rtol=DEFAULT_RTOL,
                     atol=DEFAULT_ATOL, max_panels=4_000_000) -> KernelResult:
    """Bit-flip contraction with ``sin^2(wt/2)/w^2`` shifted to ``w - Delta``.

    The range is split at the resonance ``w = Delta``; the resonance window
    ``Delta +- 10/t`` is kept as panel edges so its share can be reported.
    """
    delta, R, t = query.splitting, query.separation, query.time
    if not delta > 0:
        raise ValueError("bit-flip kernel requires splitting > 0")
    if not t > 0:
        raise ValueError("bit-flip kernel requires time > 0")
    if bath.coupling_strength == 0:
        return KernelResult(0j, 0.0, 0, 0.0)
    k_over_w = R / bath.sound_speed
    T = bath.temperature

    def f(w):
        x = w - delta
        return (_shape(bath, w) * t * t * _sinc(0.5 * x * t) ** 2
                * _sinc(w * k_over_w) * _coth(w, T))

    upper = max(bath.upper_frequency, 2.0 * delta)
    lo_win, hi_win = max(0.0, delta - 10.0 / t), delta + 10.0 / t
    edges = np.concatenate([
        _uniform_edges(0.0, upper, _panel_scale(bath, R, t)),
        [delta, lo_win, min(hi_win, upper)],
    ])
    res = integrate(f, edges, rtol=rtol, atol=atol, max_panels=max_panels)
    fraction = res.partial(lo_win, hi_win) / res.value if res.value != 0 else float("nan")
    if fraction > 0.999:
        log.debug("resonance window holds %.6f of the bit-flip kernel", fraction)
    return _finish(bath, res, fraction)


def dephasing_kernel(bath: BathSpec, query: KernelQuery, **kw) -> complex:
    return evaluate_dephasing(bath, query, **kw).value


def bitflip_kernel(bath: BathSpec, query: KernelQuery, **kw) -> complex:
    return evaluate_bitflip(bath, query, **kw).value


def _geometric_edges(pole, eps, reach, side):
    steps = []
    x = eps
    while x < reach:
        steps.append(x)
        x *= 2.0
    steps.append(reach)
    return pole + side * np.asarray(steps)


def _excised_integral(bath, separation, delta, eps, rtol, atol):
    k_over_w = separation / bath.sound_speed

    def f(w):
        return _shape(bath, w) * _sinc(w * k_over_w) * 2.0 * w / ((w - delta) * (w + delta))

    upper = max(bath.upper_frequency, 4.0 * delta)
    scale = _panel_scale(bath, separation, 0.0)
    reach = 0.5 * delta
    left = np.concatenate([_uniform_edges(0.0, delta - reach, scale),
                           _geometric_edges(delta, eps, reach, -1.0)])
    right = np.concatenate([_geometric_edges(delta, eps, reach, +1.0),
                            _uniform_edges(delta + reach, upper, scale)])
    lres = integrate(f, left, rtol=rtol, atol=atol)
    rres = integrate(f, right, rtol=rtol, atol=atol)
    return lres.value + rres.value, lres.error + rres.error


def effective_zz_coupling(bath: BathSpec, separation: float, splitting: float, *,
                          rtol=1e-10, atol=1e-12, pv_rtol=1e-3) -> float:
    """Bath-mediated ZZ coupling ``PV int J 2w/(w^2 - Delta^2) sinc(wR/c) dw``.

    At ``splitting == 0`` this is the coefficient of the linear-in-time part of
    the dephasing effective interaction, ``int J (2/w) sinc(wR/c) dw``. For
    ``splitting > 0`` the pole is excised symmetrically at widths
    ``{1e-2, 1e-3, 1e-4} * Delta`` and the width dependence is Richardson
    extrapolated away. ``pv_rtol`` bounds the disagreement between the two
    extrapolants; since the leading excision error is linear in the width it
    controls the returned value about a thousand times more tightly.
    """
    if separation < 0 or splitting < 0:
        raise ValueError("separation and splitting must be >= 0")
    if bath.coupling_strength == 0:
        return 0.0
    if splitting == 0:
        if bath.spectral_exponent == 0:
            raise ValueError("Delta = 0 coupling diverges for spectral_exponent = 0")
        k_over_w = separation / bath.sound_speed

        def f(w):
            return _shape(bath, w) * 2.0 / w * _sinc(w * k_over_w)

        edges = _uniform_edges(0.0, bath.upper_frequency, _panel_scale(bath, separation, 0.0))
        return bath.coupling_strength * integrate(f, edges, rtol=rtol, atol=atol).value

    estimates = [
        _excised_integral(bath, separation, splitting, frac * splitting, rtol, atol)[0]
        for frac in EXCISION_FRACTIONS
    ]
    ratio = EXCISION_FRACTIONS[0] / EXCISION_FRACTIONS[1]
    extrapolated = [(ratio * fine - coarse) / (ratio - 1.0)
                    for coarse, fine in zip(estimates, estimates[1:])]
    spread = abs(extrapolated[-1] - extrapolated[-2])
    if spread > max(atol, pv_rtol * abs(extrapolated[-1])):
        raise PrincipalValueError("principal-value extrapolation did not converge",
                                  [bath.coupling_strength * e for e in extrapolated])
    return bath.coupling_strength * extrapolated[-1]
