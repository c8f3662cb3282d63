"""Adaptive composite Gauss-Legendre quadrature.

Each panel is integrated once with an ``order``-point rule and once with the
same rule on its two halves; the difference is the panel error estimate and
the two-half value is kept. Panels that miss their share of the global
tolerance are bisected. Evaluation is vectorized across panels, so the
integrand must accept ndarrays of any shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IntegrationError

_CHUNK = 40_000
_EPS = np.finfo(float).eps


@lru_cache(maxsize=None)
def _gauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    evaluations: int
    lower: np.ndarray
    upper: np.ndarray
    panel_values: np.ndarray

    def partial(self, a, b):
        """Sum of accepted panels lying inside [a, b]."""
        inside = (self.lower >= a) & (self.upper <= b)
        return float(np.sum(self.panel_values[inside]))


def _rule(func, a, b, order):
    x, w = _gauss(order)
    half = 0.5 * (b - a)[:, None]
    mid = 0.5 * (b + a)[:, None]
    coarse_f = func(mid + half * x)
    coarse = np.sum(coarse_f * w, axis=1) * half[:, 0]
    quarter = 0.5 * half
    left_f = func(mid - quarter + quarter * x)
    right_f = func(mid + quarter + quarter * x)
    fine = (np.sum(left_f * w, axis=1) + np.sum(right_f * w, axis=1)) * quarter[:, 0]
    magnitude = (np.sum(np.abs(left_f) * w, axis=1) + np.sum(np.abs(right_f) * w, axis=1)) * quarter[:, 0]
    return coarse, fine, magnitude


def integrate(func, edges, *, order=10, rtol=1e-7, atol=1e-9, max_panels=4_000_000):
    """Integrate ``func`` over ``[edges[0], edges[-1]]`` with ``edges`` as initial panels.

    Converged when the summed panel error is below ``max(atol, rtol * int |f|)``.

    Raises IntegrationError when more than ``max_panels`` panels would be needed.
    """
    edges = np.unique(np.asarray(edges, dtype=float))
    if edges.size < 2:
        raise ValueError("need at least two distinct panel edges")
    span = edges[-1] - edges[0]
    a, b = edges[:-1], edges[1:]

    kept_a, kept_b, kept_v, kept_e = [], [], [], []
    evaluations = 0
    accepted_total = 0.0
    accepted_abs = 0.0
    accepted_err = 0.0
    n_panels = a.size
    while a.size:
        coarse = np.empty_like(a)
        fine = np.empty_like(a)
        mag = np.empty_like(a)
        for s in range(0, a.size, _CHUNK):
            sl = slice(s, s + _CHUNK)
            coarse[sl], fine[sl], mag[sl] = _rule(func, a[sl], b[sl], order)
        evaluations += 3 * order * a.size
        floor = 50 * _EPS * mag
        err = np.maximum(np.abs(fine - coarse), floor)

        # relative tolerance is measured against int |f| so cancelling integrals stay reachable
        scale = accepted_abs + float(np.sum(mag))
        tol = max(atol, rtol * scale)
        share = tol * (b - a) / span
        # panels at rounding resolution (in width or in value) cannot improve by bisection
        tiny = (b - a) <= 1e-13 * max(span, abs(edges[-1]))
        ok = (err <= share) | tiny | (err <= floor)
        kept_a.append(a[ok])
        kept_b.append(b[ok])
        kept_v.append(fine[ok])
        kept_e.append(err[ok])
        accepted_total += float(np.sum(fine[ok]))
        accepted_abs += float(np.sum(mag[ok]))
        accepted_err += float(np.sum(err[ok]))

        bad = ~ok
        if not bad.any():
            break
        n_panels += int(bad.sum())
        if n_panels > max_panels:
            raise IntegrationError(
                "quadrature refinement budget exhausted",
                estimate=accepted_total + float(np.sum(fine[bad])),
                residual=accepted_err + float(np.sum(err[bad])),
            )
        ba, bb = a[bad], b[bad]
        m = 0.5 * (ba + bb)
        a = np.concatenate([ba, m])
        b = np.concatenate([m, bb])

    lower = np.concatenate(kept_a)
    order_idx = np.argsort(lower, kind="stable")
    values = np.concatenate(kept_v)[order_idx]
    return QuadratureResult(
        value=float(np.sum(values)),
        error=accepted_err,
        evaluations=evaluations,
        lower=lower[order_idx],
        upper=np.concatenate(kept_b)[order_idx],
        panel_values=values,
    )
