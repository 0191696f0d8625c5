from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslab import polyx

frac = st.fractions(min_value=-5, max_value=5, max_denominator=20)
poly = st.lists(frac, min_size=1, max_size=6)


class TestBasicAlgebra:
    def test_eval_horner(self):
        # 1 + 2x + 3x^2 at x = 2
        assert polyx.p_eval([1, 2, 3], 2) == 17

    def test_mul_known(self):
        assert polyx.p_mul([1, 1], [1, -1]) == [1, 0, -1]

    def test_derivative_antiderivative_roundtrip(self):
        p = polyx.as_exact([1, 2, 3, 4])
        back = polyx.p_deriv(polyx.p_antideriv(p))
        assert back == p

    def test_integral_monomial(self):
        # int_0^1 x^2 dx = 1/3, exact
        assert polyx.p_integral([0, 0, Fraction(1)], Fraction(0), Fraction(1)) \
            == Fraction(1, 3)

    def test_moment(self):
        # int_0^1 x^2 * 1 dx
        assert polyx.p_moment([Fraction(1)], 2, Fraction(0), Fraction(1)) \
            == Fraction(1, 3)

    def test_affine_composition(self):
        # p(x) = x^2, composed with x = 1 + 2t -> 1 + 4t + 4t^2
        assert polyx.p_compose_affine([0, 0, 1], 1, 2) == [1, 4, 4]


@settings(max_examples=50, deadline=None)
@given(p=poly, q=poly)
def test_mul_evaluates_as_product(p, q):
    x = Fraction(3, 7)
    assert polyx.p_eval(polyx.p_mul(p, q), x) == \
        polyx.p_eval(p, x) * polyx.p_eval(q, x)


@settings(max_examples=50, deadline=None)
@given(p=poly)
def test_l2sq_nonnegative_exact(p):
    assert polyx.p_l2sq(p, Fraction(0), Fraction(1)) >= 0


class Test2D:
    def test_eval_tensor(self):
        # c[i][j] x^i y^j: x*y
        c = [[0, 0], [0, 1]]
        assert polyx.p2_eval(c, 2, 3) == 6

    def test_partials(self):
        c = [[0, 0], [0, 1]]  # xy
        assert polyx.p2_eval(polyx.p2_partial(c, 0), 5, 3) == 3
        assert polyx.p2_eval(polyx.p2_partial(c, 1), 5, 3) == 5

    def test_integral_unit_box(self):
        c = [[Fraction(1)]]
        assert polyx.p2_integral(c, ((0, 1), (0, 1))) == 1

    def test_moment_2d(self):
        c = [[Fraction(1)]]
        assert polyx.p2_moment(c, 1, 1, ((Fraction(0), Fraction(1)),
                                         (Fraction(0), Fraction(1)))) \
            == Fraction(1, 4)

    def test_l2sq_matches_1d_product(self):
        # (x*y)^2 integrates to 1/9 on the unit box
        c = [[Fraction(0), Fraction(0)], [Fraction(0), Fraction(1)]]
        assert polyx.p2_l2sq(c, ((Fraction(0), Fraction(1)),
                                 (Fraction(0), Fraction(1)))) == Fraction(1, 9)
