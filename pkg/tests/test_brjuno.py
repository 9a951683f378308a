import math
from fractions import Fraction

import mpmath
import pytest

from juliaspec.classify.brjuno import (
    BrjunoFlag,
    brjuno_data,
    convergents,
    liouville_number,
    parse_alpha,
    rational_approximation,
)
from juliaspec.errors import DomainError, ValidationError

GOLDEN = "(sqrt(5)-1)/2"


class TestParseAlpha:
    def test_exact_inputs(self):
        assert parse_alpha("3/7") == Fraction(3, 7)
        assert parse_alpha("0.125") == Fraction(1, 8)

    def test_expression(self):
        alpha = parse_alpha(GOLDEN)
        assert isinstance(alpha, mpmath.mpf)
        assert float(alpha) == pytest.approx((math.sqrt(5) - 1) / 2, rel=1e-15)

    def test_complex_rejected(self):
        with pytest.raises(DomainError):
            parse_alpha("sqrt(-2)")

    def test_garbage(self):
        with pytest.raises(ValidationError):
            parse_alpha("1/")


class TestConvergents:
    def test_small(self):
        assert convergents([2, 3]) == ([1, 3], [2, 7])

    def test_liouville_number(self):
        assert liouville_number([1, 2]) == Fraction(11, 100)

    def test_rational_approximation(self):
        assert rational_approximation(0.75) == Fraction(3, 4)
        assert rational_approximation((math.sqrt(5) - 1) / 2) is None


class TestBrjunoData:
    def test_golden_mean_converges(self):
        data = brjuno_data(parse_alpha(GOLDEN), depth=40)
        assert data.partial_quotients == (1,) * 40
        assert data.denominators[:8] == (1, 2, 3, 5, 8, 13, 21, 34)
        assert data.flag is BrjunoFlag.CONVERGENT
        assert data.precision_limited_at is None
        assert 3 < data.brjuno_sums[-1] < 4

    def test_rational(self):
        data = brjuno_data(Fraction(3, 7))
        assert data.continued_fraction == (0, 2, 3)
        assert data.terminated
        assert data.flag is BrjunoFlag.ROOT_OF_UNITY
        assert data.to_dict()["rational"] == "3/7"

    def test_reduced_mod_one(self):
        assert brjuno_data(Fraction(10, 7)).partial_quotients == brjuno_data(Fraction(3, 7)).partial_quotients

    def test_float_near_rational(self):
        assert brjuno_data(0.25).flag is BrjunoFlag.ROOT_OF_UNITY

    def test_float_golden_mean_is_precision_limited(self):
        data = brjuno_data((math.sqrt(5) - 1) / 2, depth=40)
        assert data.precision_limited_at is not None
        assert 15 < data.precision_limited_at < 35
        assert data.flag is BrjunoFlag.UNDECIDED

    def test_liouville_like_diverges(self):
        data = brjuno_data(liouville_number([1, 250]))
        assert data.rational is None
        assert data.brjuno_sums[-1] > 50
        assert data.flag is BrjunoFlag.DIVERGENT

    def test_short_liouville_sum_is_not_divergent(self):
        alpha = liouville_number([math.factorial(k) for k in range(1, 7)])
        assert brjuno_data(alpha).flag is not BrjunoFlag.DIVERGENT

    def test_thresholds_recorded(self):
        data = brjuno_data(Fraction(1, 3), divergence_threshold=10)
        assert data.to_dict()["thresholds"]["divergence"] == 10

    def test_depth_range(self):
        with pytest.raises(ValidationError):
            brjuno_data(Fraction(1, 3), depth=0)
