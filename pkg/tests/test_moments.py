import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslab import moments, polyx
from nslab.gridfn import Interval
from nslab.moments import (LegendreSystem, MomentSequence, PrecisionConfig,
                           compute_moments, eval_reconstruction,
                           hilbert_inverse_sigma_max, legendre_ode_residual,
                           reconstruct_from_moments, required_bits,
                           verify_festmom, weighted_moment_bounds)

UNIT = Interval(0.0, 1.0)


class TestComputeMoments:
    def test_constant(self):
        m = compute_moments([Fraction(1)], UNIT, 2)
        assert m.values == [Fraction(1), Fraction(1, 2), Fraction(1, 3)]

    def test_linear(self):
        m = compute_moments([Fraction(0), Fraction(1)], UNIT, 2)
        assert m.values == [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)]

    def test_orthonormal_first_legendre(self):
        # L-hat_1 = (2t - 1) * sqrt(3) / sqrt(3) normalization: raw L_1 has
        # coefficients 3(2t-1); orthonormal row divides by sqrt(3)
        sys = LegendreSystem(1)
        raw = sys.raw_polynomial(1)          # norm sqrt(3)
        coeffs = [float(c) / math.sqrt(3) for c in raw]
        m = compute_moments(coeffs, UNIT, 1)
        assert float(m.values[0]) == pytest.approx(0.0, abs=1e-15)
        assert float(m.values[1]) == pytest.approx(math.sqrt(3) / 6, rel=1e-12)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            compute_moments([1], UNIT, -1)


class TestHilbertSigmaMax:
    def test_order_zero(self):
        assert float(hilbert_inverse_sigma_max(0)) == pytest.approx(1.0)

    def test_order_one_closed_form(self):
        # inverse of [[1,1/2],[1/2,1/3]] is [[4,-6],[-6,12]]; top eigenvalue
        # of the symmetric inverse is 8 + sqrt(52)
        val = float(hilbert_inverse_sigma_max(1))
        assert val == pytest.approx(8.0 + math.sqrt(52.0), rel=1e-10)

    def test_growth_monotone(self):
        vals = [float(hilbert_inverse_sigma_max(N)) for N in range(6)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_invalid_orders(self):
        with pytest.raises(ValueError):
            hilbert_inverse_sigma_max(-1)
        with pytest.raises(ValueError):
            hilbert_inverse_sigma_max(41)


class TestGramIdentity:
    @pytest.mark.parametrize("N", [1, 4, 8])
    def test_orthonormal_gram_equals_hilbert_inverse(self, N):
        sys = LegendreSystem(N)
        assert sys.gram_exact() == sys.hilbert_inverse_exact()

    def test_order_one_entries(self):
        sys = LegendreSystem(1)
        assert sys.hilbert_inverse_exact() == [[4, -6], [-6, 12]]

    def test_orthonormality_integral(self):
        sys = LegendreSystem(4)
        for m in range(5):
            for k in range(m + 1):
                Lm = sys.raw_polynomial(m)
                Lk = sys.raw_polynomial(k)
                ip = polyx.p_integral(polyx.p_mul(Lm, Lk), Fraction(0), Fraction(1))
                ip /= Fraction((2 * m + 1)) ** Fraction(1) if False else 1
                expect = Fraction(2 * m + 1) if m == k else Fraction(0)
                assert ip == expect


class TestLegendreODE:
    @pytest.mark.parametrize("m", range(9))
    def test_residual_exactly_zero(self, m):
        assert all(c == 0 for c in legendre_ode_residual(m))


class TestFestmom:
    def test_zero_function(self):
        lhs, rhs, holds = verify_festmom([Fraction(0)], UNIT, 3)
        assert (float(lhs), float(rhs), holds) == (0.0, 0.0, True)

    def test_random_suite_small(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            coeffs = rng.standard_normal(6).tolist()
            for N in (1, 4, 8):
                _, _, holds = verify_festmom(coeffs, Interval(0.2, 0.8), N)
                assert holds

    @pytest.mark.parametrize("N", [1, 3, 5])
    def test_top_legendre_mode_gradient_term_dominates(self, N):
        # f = orthonormal L_{N+1}: moment sum up to N vanishes by
        # orthogonality, so the gradient term alone must carry the bound
        sys = LegendreSystem(N + 1)
        raw = sys.raw_polynomial(N + 1)
        coeffs = [float(c) / math.sqrt(2 * (N + 1) + 1) for c in raw]
        lhs, rhs, holds = verify_festmom(coeffs, UNIT, N)
        assert holds
        assert float(lhs) == pytest.approx(1.0, rel=1e-8)
        assert float(rhs) >= 1.0

    def test_domain_check(self):
        with pytest.raises(ValueError):
            verify_festmom([1], Interval(-0.5, 0.5), 2)


class TestWeightedBounds:
    def test_unit_weights_hold(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            coeffs = rng.standard_normal(5).tolist()
            for signed in (False, True):
                _, _, holds = weighted_moment_bounds(
                    coeffs, Interval(0.1, 0.9), lambda j: 1.0, signed)
                assert holds

    def test_riesz_weights(self):
        # gamma_j = prod_{k<=j} (1 - 2a/k) with a = 1/4: 1, 1/2, 3/8, ...
        alpha = 0.25

        def gamma(j):
            out = 1.0
            for k in range(1, j + 1):
                out *= 1.0 - 2.0 * alpha / k
            return out

        assert gamma(0) == 1.0 and gamma(1) == 0.5
        _, _, holds = weighted_moment_bounds(
            [0.3, -1.0, 2.0], Interval(0.2, 0.7), gamma, False)
        assert holds

    def test_zero_function_trivially_holds(self):
        lhs, rhs, holds = weighted_moment_bounds(
            [0.0], Interval(0.1, 0.9), lambda j: 1.0, False)
        assert holds and lhs == 0.0

    def test_zero_weight_rejected(self):
        with pytest.raises(ValueError):
            weighted_moment_bounds([1.0, 5.0, 3.0, 1.0], Interval(0.1, 0.9),
                                   lambda j: 0.0, False)


class TestReconstructFromMoments:
    def test_legendre_mode_exact(self):
        sys = LegendreSystem(2)
        raw = polyx.p_scale(sys.raw_polynomial(2), Fraction(1))
        m = compute_moments(raw, UNIT, 4)
        coeffs, itv = reconstruct_from_moments(m, 4)
        assert coeffs[:3] == raw and all(c == 0 for c in coeffs[3:])

    def test_constant_order_zero(self):
        m = compute_moments([Fraction(1)], UNIT, 0)
        coeffs, itv = reconstruct_from_moments(m, 0)
        assert coeffs == [Fraction(1)]

    def test_degree6_roundtrip_exact(self):
        rng = np.random.default_rng(3)
        coeffs = [Fraction(x).limit_denominator(1000)
                  for x in rng.standard_normal(7)]
        m = compute_moments(coeffs, UNIT, 6)
        rec, itv = reconstruct_from_moments(m, 6)
        diff = polyx.p_add(rec, polyx.p_scale(coeffs, Fraction(-1)))
        err = polyx.p_l2sq(diff, Fraction(0), Fraction(1))
        assert float(err) <= 1e-30

    def test_general_interval_roundtrip(self):
        I = Interval(0.25, 0.75)
        coeffs = [Fraction(1), Fraction(-2), Fraction(3)]
        m = compute_moments(coeffs, I, 4)
        rec, itv = reconstruct_from_moments(m, 4)
        xs = np.linspace(I.a + 0.01, I.b - 0.01, 7)
        got = eval_reconstruction(rec, itv, xs)
        want = polyx.p_eval([float(c) for c in coeffs], xs)
        assert np.max(np.abs(np.asarray(got, dtype=float) - want)) <= 1e-12

    def test_precision_guard(self):
        vals = [mpmath.mpf(1)] * 13
        m = MomentSequence(UNIT, 12, vals, precision_bits=64)
        with pytest.raises(ArithmeticError):
            reconstruct_from_moments(m, 12)


class TestPrecisionPolicy:
    def test_required_bits_formula(self):
        assert required_bits(7) == math.ceil(3.5 * 8 / math.log(2.0)) + 64

    def test_minimum_bits(self):
        with pytest.raises(ValueError):
            PrecisionConfig(bits=32)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=5))
def test_roundtrip_property_exact(coeffs):
    fr = [Fraction(c) for c in coeffs]
    deg = len(fr) - 1
    m = compute_moments(fr, UNIT, deg)
    rec, _ = reconstruct_from_moments(m, deg)
    diff = polyx.p_add(rec, polyx.p_scale(fr, Fraction(-1)))
    assert polyx.p_l2sq(diff, Fraction(0), Fraction(1)) == 0
