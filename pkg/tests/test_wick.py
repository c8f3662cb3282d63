import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinbath.correlation import BITFLIP_Z, DEPHASING_Z, ContractionMatrix
from spinbath.errors import CapacityError, UndefinedRatioError
from spinbath.wick import (ErrorPattern, double_factorial_odd, gaussian_moment,
                           independence_deviation, matching_table, stirling_pairing_estimate)

from oracles import mc_gaussian_moment


def random_psd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + 0.1 * np.eye(n)


def brute_force_moment(C, pattern):
    # Isserlis over the repeated-index list, enumerating matchings recursively
    slots = [j for j in pattern for _ in range(2)]

    def rec(rest):
        if not rest:
            return 1.0
        first, others = rest[0], rest[1:]
        return sum(C[first, others[k]] * rec(others[:k] + others[k + 1:]) for k in range(len(others)))

    return rec(slots)


class TestMatchings:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_count(self, n):
        tbl = matching_table(2 * n)
        assert tbl.shape == (double_factorial_odd(n), n, 2)
        assert double_factorial_odd(n) == math.factorial(2 * n) // (2 ** n * math.factorial(n))

    def test_rows_are_perfect_matchings(self):
        tbl = matching_table(8)
        assert np.all(np.sort(tbl.reshape(len(tbl), -1), axis=1) == np.arange(8))
        assert np.all(tbl[..., 0] < tbl[..., 1])
        assert len({tuple(map(tuple, r)) for r in tbl}) == len(tbl)

    def test_odd_slots_rejected(self):
        with pytest.raises(ValueError):
            matching_table(5)

    def test_stirling_within_five_percent(self):
        assert double_factorial_odd(8) / stirling_pairing_estimate(8) == pytest.approx(1, abs=0.05)


class TestPattern:
    @pytest.mark.parametrize("idx", [(), (1, 1), (-1, 2)])
    def test_invalid(self, idx):
        with pytest.raises(ValueError):
            ErrorPattern(idx)

    def test_unknown_channel(self):
        with pytest.raises(ValueError):
            ErrorPattern((0,), "bitflip-X")


class TestGaussianMoment:
    def test_diagonal_is_product(self):
        C = np.diag([0.5, 2.0, 3.0, 7.0])
        assert gaussian_moment(C, (0, 1, 2, 3)) == pytest.approx(0.5 * 2 * 3 * 7, rel=1e-15)

    @pytest.mark.parametrize("n,factor", [(1, 1), (2, 3), (3, 15), (4, 105)])
    def test_fully_correlated_factor(self, n, factor):
        c0 = 0.37
        C = np.full((n, n), c0)
        assert gaussian_moment(C, range(n)) == pytest.approx(factor * c0 ** n, rel=1e-14)

    def test_eight_qubits_all_ones(self):
        assert gaussian_moment(np.ones((8, 8)), range(8)) == 2027025.0

    def test_against_isserlis_recursion(self):
        rng = np.random.default_rng(3)
        C = random_psd(rng, 5)
        for pat in [(0,), (1, 3), (0, 2, 4), (4, 3, 1, 0)]:
            assert gaussian_moment(C, pat) == pytest.approx(brute_force_moment(C, pat), rel=1e-12)

    def test_monte_carlo(self):
        rng = np.random.default_rng(11)
        C = random_psd(rng, 4) / 4
        for pat in [(0, 1, 2), (1, 2, 3)]:
            mean, se = mc_gaussian_moment(C, pat, 1_000_000, rng)
            assert abs(gaussian_moment(C, pat) - mean) < 3 * se

    def test_orderings_agree(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            C = random_psd(rng, 4)
            pat = tuple(rng.permutation(4)[:3])
            assert gaussian_moment(C, pat, ordering="reverse") == pytest.approx(
                gaussian_moment(C, pat, ordering="forward"), rel=1e-13)

    def test_bad_ordering(self):
        with pytest.raises(ValueError):
            gaussian_moment(np.eye(2), (0,), ordering="sideways")

    def test_capacity(self):
        with pytest.raises(CapacityError):
            gaussian_moment(np.eye(9), range(9))
        assert gaussian_moment(np.eye(9), range(9), n_max=9) == pytest.approx(1.0)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            gaussian_moment(np.eye(2), (0, 2))

    def test_accepts_contraction_matrix(self):
        C = ContractionMatrix(np.full((2, 2), 2.0), 1.0, DEPHASING_Z)
        assert gaussian_moment(C, (0, 1)) == pytest.approx(12.0)


@st.composite
def psd_and_pattern(draw):
    n = draw(st.integers(1, 5))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    C = random_psd(np.random.default_rng(seed), n)
    k = draw(st.integers(1, n))
    pat = draw(st.permutations(range(n)))[:k]
    return C, tuple(pat)


@settings(max_examples=60, deadline=None)
@given(psd_and_pattern(), st.integers(-6, 6))
def test_scaling_power_of_two_exact(case, k):
    C, pat = case
    lam = 2.0 ** k
    assert gaussian_moment(lam * C, pat) == lam ** len(pat) * gaussian_moment(C, pat)


@settings(max_examples=40, deadline=None)
@given(psd_and_pattern(), st.floats(0.01, 10.0))
def test_scaling_general(case, lam):
    C, pat = case
    assert gaussian_moment(lam * C, pat) == pytest.approx(lam ** len(pat) * gaussian_moment(C, pat), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(psd_and_pattern(), st.randoms(use_true_random=False))
def test_permutation_invariance_and_positivity(case, rnd):
    C, pat = case
    shuffled = list(pat)
    rnd.shuffle(shuffled)
    a = gaussian_moment(C, pat)
    assert a >= 0
    assert gaussian_moment(C, shuffled) == pytest.approx(a, rel=1e-12)


class TestIndependenceDeviation:
    def test_diagonal_no_violation(self):
        C = ContractionMatrix(np.diag([1.0, 2.0, 0.5]), 1.0, DEPHASING_Z)
        reps = independence_deviation(C, [(0, 1), (0, 1, 2)])
        assert [r.enhancement for r in reps] == [pytest.approx(1.0)] * 2
        assert not any(r.violation for r in reps)

    def test_fully_correlated_n4(self):
        C = ContractionMatrix(np.full((4, 4), 0.2), 1.0, BITFLIP_Z, 1.0)
        (rep,) = independence_deviation(C, [range(4)])
        assert rep.enhancement == pytest.approx(105, rel=1e-12)
        assert rep.matching_count == 105 and rep.violation
        assert rep.pattern.channel == BITFLIP_Z
        d = rep.to_dict()
        assert d["n"] == 4 and d["pattern"] == [0, 1, 2, 3]

    def test_delta_band(self):
        C = np.array([[1.0, 0.2], [0.2, 1.0]])  # ratio 1 + 2 * 0.04 = 1.08
        (rep,) = independence_deviation(C, [(0, 1)], delta=0.1)
        assert rep.enhancement == pytest.approx(1.08) and not rep.violation
        (rep,) = independence_deviation(C, [(0, 1)], delta=0.05)
        assert rep.violation

    def test_zero_amplitude(self):
        with pytest.raises(UndefinedRatioError):
            independence_deviation(np.diag([1.0, 0.0]), [(0, 1)])

    def test_every_subset(self):
        C = np.diag([1.0, 2.0, 3.0, 4.0])
        pats = [c for n in range(1, 5) for c in itertools.combinations(range(4), n)]
        assert all(not r.violation for r in independence_deviation(C, pats))
