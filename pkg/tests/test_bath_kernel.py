import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings, strategies as st

from spinbath.bath_kernel import (BathSpec, KernelQuery, bitflip_kernel, dephasing_kernel,
                                  effective_zz_coupling, evaluate_bitflip, evaluate_dephasing,
                                  thermal_factor)

from oracles import coth_series, mode_sum, pv_trapezoid, sphere_average_cos

OHMIC = BathSpec(coupling_strength=1.0, spectral_exponent=1.0, cutoff_frequency=1.0,
                 sound_speed=1.0, temperature=0.5)
COLD = BathSpec(coupling_strength=1.0, spectral_exponent=1.0, cutoff_frequency=5.0,
                sound_speed=1.0, temperature=0.0)


class TestBathSpec:
    @pytest.mark.parametrize("field,value", [
        ("coupling_strength", -1.0), ("cutoff_frequency", 0.0), ("sound_speed", -2.0),
        ("temperature", -0.1), ("spectral_exponent", -1.0), ("temperature", float("nan")),
    ])
    def test_rejects_bad_fields(self, field, value):
        with pytest.raises(ValueError):
            BathSpec(**{field: value})

    def test_query_rejects_negative(self):
        with pytest.raises(ValueError):
            KernelQuery(-1.0, 1.0)


class TestThermalFactor:
    def test_zero_temperature(self):
        assert thermal_factor(5.0, 0.0) == 1.0

    def test_high_frequency_asymptote(self):
        for ratio in (60, 100, 1e4):
            assert abs(thermal_factor(ratio * 0.3, 0.3) - 1) < 1e-12

    def test_coth_one_against_series(self):
        expected = coth_series(1.0)
        assert expected == pytest.approx(1.313035285499331, abs=1e-6)
        assert thermal_factor(2 * 0.7, 0.7) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("omega", [0.0, -1.0])
    def test_nonpositive_frequency(self, omega):
        with pytest.raises(ValueError):
            thermal_factor(omega, 1.0)


def test_angular_average_is_sinc():
    for kr in (0.0, 0.3, 2.0, 7.5):
        assert sphere_average_cos(kr) == pytest.approx(np.sinc(kr / np.pi), abs=1e-6)


class TestDephasingKernel:
    def test_zero_time(self):
        assert dephasing_kernel(OHMIC, KernelQuery(1.0, 0.0)) == 0

    def test_self_ratio(self):
        v = dephasing_kernel(OHMIC, KernelQuery(0.0, 3.0))
        assert v.real > 0 and v / v == 1

    def test_matches_mode_sum(self):
        for R, t in [(0.0, 3.0), (2.0, 7.0), (0.5, 40.0)]:
            got = dephasing_kernel(OHMIC, KernelQuery(R, t)).real
            assert got == pytest.approx(mode_sum(OHMIC, R, t), rel=2e-4)

    def test_long_time_ratio(self):
        # alpha=1, s=1, w_c=1, c=1, T=0.5, R=2, t=200
        ref = mode_sum(OHMIC, 2.0, 200.0) / mode_sum(OHMIC, 0.0, 200.0)
        got = (dephasing_kernel(OHMIC, KernelQuery(2.0, 200.0))
               / dephasing_kernel(OHMIC, KernelQuery(0.0, 200.0))).real
        assert abs(ref - 1) < 0.1
        assert abs(got - 1) < 0.1
        assert got == pytest.approx(ref, abs=1e-3)

    def test_single_scale_closed_form(self):
        # T=0, s=2, R=0: int w^2 e^{-w} 4 sin^2(wt/2)/w^2 dw = 2 - 2/(1+t^2)
        bath = BathSpec(1.0, 2.0, 1.0, 1.0, 0.0)
        for t in (0.5, 3.0, 20.0):
            got = dephasing_kernel(bath, KernelQuery(0.0, t)).real
            assert got == pytest.approx(2 - 2 / (1 + t * t), rel=1e-7, abs=1e-12)

    def test_real_valued(self):
        r = evaluate_dephasing(OHMIC, KernelQuery(1.3, 9.0))
        assert abs(r.value.imag) < 1e-10 * abs(r.value)

    def test_rejects_splitting(self):
        with pytest.raises(ValueError):
            evaluate_dephasing(OHMIC, KernelQuery(0.0, 1.0, 1.0))

    def test_doubling_budget_within_error(self):
        q = KernelQuery(1.0, 30.0)
        a = evaluate_dephasing(OHMIC, q, max_panels=20_000)
        b = evaluate_dephasing(OHMIC, q, max_panels=40_000)
        assert abs(a.value - b.value) <= max(a.error, 1e-300)

    def test_tighter_tolerance_within_error(self):
        q = KernelQuery(1.0, 30.0)
        loose = evaluate_dephasing(OHMIC, q, rtol=1e-5)
        tight = evaluate_dephasing(OHMIC, q, rtol=1e-11)
        assert abs(loose.value - tight.value) <= loose.error


class TestBitflipKernel:
    def test_self_ratio(self):
        v = bitflip_kernel(COLD, KernelQuery(0.0, 50.0, 1.0))
        assert v.real > 0 and v / v == 1

    def test_sinc_zero_at_pi(self):
        t = 150 * math.pi
        ratio = (bitflip_kernel(COLD, KernelQuery(math.pi, t, 1.0))
                 / bitflip_kernel(COLD, KernelQuery(0.0, t, 1.0))).real
        assert abs(ratio - 0.0) < 0.05

    def test_half_pi_against_mode_sum(self):
        t = 150 * math.pi / 2
        ref = mode_sum(COLD, math.pi / 2, t, 1.0) / mode_sum(COLD, 0.0, t, 1.0)
        got = (bitflip_kernel(COLD, KernelQuery(math.pi / 2, t, 1.0))
               / bitflip_kernel(COLD, KernelQuery(0.0, t, 1.0))).real
        assert ref == pytest.approx(2 / math.pi, abs=0.05)
        assert got == pytest.approx(2 / math.pi, abs=0.05)
        assert got == pytest.approx(ref, abs=2e-3)

    def test_resonance_fraction_matches_lineshape(self):
        # long t: share of int sin^2(u)/u^2 du inside |u| < 5
        inner, _ = scipy.integrate.quad(lambda u: np.sinc(u / np.pi) ** 2, 0, 5, limit=200)
        expected = 2 * inner / math.pi
        r = evaluate_bitflip(COLD, KernelQuery(0.0, 5000.0, 1.0))
        assert r.resonance_fraction == pytest.approx(expected, abs=5e-3)
        assert not r.resonance_dominated

    def test_resonance_flag_threshold(self):
        from spinbath.bath_kernel import KernelResult
        assert KernelResult(1.0, 0.0, 0, 0.9995).resonance_dominated
        assert not KernelResult(1.0, 0.0, 0, 0.999).resonance_dominated

    @pytest.mark.parametrize("q", [KernelQuery(0.0, 1.0, 0.0), KernelQuery(0.0, 0.0, 1.0)])
    def test_preconditions(self, q):
        with pytest.raises(ValueError):
            evaluate_bitflip(COLD, q)

    def test_small_splitting_limit(self):
        for bath in (COLD, OHMIC):
            for R, t in [(0.0, 1.0), (0.5, 0.8)]:
                delta = 5e-4
                assert delta * t < 1e-3 and delta * R / bath.sound_speed < 1e-3
                bf = bitflip_kernel(bath, KernelQuery(R, t, delta)).real
                dp = dephasing_kernel(bath, KernelQuery(R, t)).real
                assert bf == pytest.approx(dp, rel=0.01)


def _random_bath(draw_alpha, s, wc, c, T):
    return BathSpec(draw_alpha, s, wc, c, T)


bath_params = st.tuples(
    st.floats(0.01, 2.0), st.sampled_from([0.5, 1.0, 2.0, 3.0]), st.floats(0.5, 5.0),
    st.floats(0.3, 3.0), st.sampled_from([0.0, 0.1, 1.0]),
)


@settings(max_examples=25, deadline=None)
@given(bath_params, st.floats(0.0, 10.0), st.floats(0.05, 20.0))
def test_self_correlation_dominates(params, R, t):
    bath = _random_bath(*params)
    self_c = dephasing_kernel(bath, KernelQuery(0.0, t)).real
    cross = dephasing_kernel(bath, KernelQuery(R, t)).real
    assert self_c >= cross * (1 - 1e-9)


@settings(max_examples=20, deadline=None)
@given(bath_params, st.floats(0.0, 5.0), st.floats(0.05, 20.0), st.floats(0.0, 3.0))
def test_linear_in_coupling(params, R, t, delta):
    bath = _random_bath(*params)
    doubled = BathSpec(2 * bath.coupling_strength, *params[1:])
    q = KernelQuery(R, t, delta)
    fn = bitflip_kernel if delta > 0 else dephasing_kernel
    assert fn(doubled, q) == 2 * fn(bath, q)


class TestEffectiveCoupling:
    def test_zero_coupling(self):
        assert effective_zz_coupling(BathSpec(0.0), 1.0, 2.0) == 0.0
        assert effective_zz_coupling(BathSpec(0.0), 1.0, 0.0) == 0.0

    def test_zero_splitting_closed_form(self):
        # s=1: int 2 alpha e^{-w/wc} sinc(wR/c) dw = 2 alpha (c/R) arctan(wc R / c)
        bath = BathSpec(0.7, 1.0, 2.0, 1.5, 0.0)
        for R in (0.0, 0.4, 3.0, 10.0):
            exact = 2 * 0.7 * 2.0 if R == 0 else 2 * 0.7 * (1.5 / R) * math.atan(2.0 * R / 1.5)
            assert effective_zz_coupling(bath, R, 0.0) == pytest.approx(exact, rel=1e-8)

    def test_zero_splitting_is_integral_of_two_over_omega(self):
        bath = BathSpec(1.0, 2.0, 1.0, 1.0, 0.0)
        R = 1.7
        ref, _ = scipy.integrate.quad(
            lambda w: w ** 2 * math.exp(-w) * 2 / w * math.sin(w * R) / (w * R), 0, 40, limit=500)
        assert effective_zz_coupling(bath, R, 0.0) == pytest.approx(ref, rel=0.01)

    def test_principal_value_against_trapezoid(self):
        bath = BathSpec(1.0, 1.0, 1.0, 1.0, 0.0)
        got = effective_zz_coupling(bath, 0.0, 2.0)
        assert got == pytest.approx(pv_trapezoid(bath, 0.0, 2.0, eps=1e-4), rel=5e-3)

    def test_principal_value_against_cauchy_weight(self):
        bath = BathSpec(1.0, 1.0, 1.0, 1.0, 0.0)
        for R, delta in [(0.0, 2.0), (1.0, 0.5), (2.5, 1.2)]:
            def g(w):
                return w * math.exp(-w) * np.sinc(w * R / math.pi) * 2 * w / (w + delta)
            ref, _ = scipy.integrate.quad(g, 0, 40, weight="cauchy", wvar=delta, limit=500)
            assert effective_zz_coupling(bath, R, delta) == pytest.approx(ref, rel=1e-6)

    def test_small_splitting_approaches_zero_path(self):
        bath = BathSpec(1.0, 1.0, 1.0, 1.0, 0.0)
        for R in (0.0, 1.0, 5.0):
            near = effective_zz_coupling(bath, R, 1e-4)
            assert near == pytest.approx(effective_zz_coupling(bath, R, 0.0), rel=0.01)

    def test_negative_inputs(self):
        with pytest.raises(ValueError):
            effective_zz_coupling(OHMIC, -1.0, 0.0)
