import cmath

import numpy as np
import pytest

from juliaspec.dynamics.polynomial import (
    Polynomial,
    evaluate,
    format_polynomial,
    parse_complex,
    parse_polynomial,
)
from juliaspec.errors import DegeneratePolynomialError, PolynomialSyntaxError


class TestConstruction:
    def test_degree_and_leading(self):
        p = Polynomial((-2, 0, 1))
        assert p.degree == 2
        assert p.leading == 1

    def test_trailing_zeros_trimmed(self):
        p = Polynomial((1, 0, 1, 0, 0))
        assert p.degree == 2

    def test_degree_one_rejected(self):
        with pytest.raises(DegeneratePolynomialError):
            Polynomial((1, 1))

    def test_tiny_leading_rejected(self):
        with pytest.raises(DegeneratePolynomialError):
            Polynomial((1, 1, 1e-14))

    def test_non_finite_rejected(self):
        with pytest.raises(DegeneratePolynomialError):
            Polynomial((float("nan"), 0, 1))

    def test_fingerprint_stable(self):
        assert Polynomial((-2, 0, 1)).fingerprint == Polynomial((-2.0, 0.0, 1.0)).fingerprint
        assert Polynomial((-2, 0, 1)).fingerprint != Polynomial((-1, 0, 1)).fingerprint

    def test_escape_radius(self):
        assert Polynomial((0, 0, 1)).escape_radius == pytest.approx(2.0)
        assert Polynomial((-2, 0, 1)).escape_radius == pytest.approx(6.0)


class TestParse:
    def test_coefficient_list(self):
        assert parse_polynomial("[-2, 0, 1]") == Polynomial((-2, 0, 1))

    def test_expression(self):
        assert parse_polynomial("z^2 - 2") == Polynomial((-2, 0, 1))
        assert parse_polynomial("z**3 + 2z - 1") == Polynomial((-1, 2, 0, 1))

    def test_complex_coefficient(self):
        p = parse_polynomial("z^2 + (0.3+0.1i)")
        assert p.coefficients[0] == pytest.approx(0.3 + 0.1j)

    def test_bound_parameter(self):
        assert parse_polynomial("z^2 + c; c = 0.25,0") == Polynomial((0.25, 0, 1))
        assert parse_polynomial("z^2 + c", c=-1) == Polynomial((-1, 0, 1))

    def test_unbound_parameter(self):
        with pytest.raises(PolynomialSyntaxError):
            parse_polynomial("z^2 + c")

    def test_garbage(self):
        with pytest.raises(PolynomialSyntaxError):
            parse_polynomial("z^^2 +")

    def test_linear_expression_is_degenerate(self):
        with pytest.raises(DegeneratePolynomialError):
            parse_polynomial("2z + 1")

    def test_parse_complex(self):
        assert parse_complex("2,0") == 2
        assert parse_complex("0.3+0.1i") == pytest.approx(0.3 + 0.1j)
        with pytest.raises(PolynomialSyntaxError):
            parse_complex("abc")


class TestFormat:
    def test_basic(self):
        assert format_polynomial(Polynomial((-2, 0, 1))) == "z^2 - 2"
        assert format_polynomial(Polynomial((0, 0, 1))) == "z^2"

    def test_format_parses_back(self):
        p = Polynomial((-1, 2, 0, 3))
        assert parse_polynomial(format_polynomial(p)) == p


class TestEvaluate:
    def test_horner(self):
        p = Polynomial((-2, 0, 1))
        assert evaluate(p, 3).to_complex() == 7
        assert p(1j) == -3

    def test_overflow_sets_escaped(self):
        p = Polynomial((0, 0, 1))
        assert evaluate(p, 1e200).escaped

    def test_array_matches_scalar(self):
        p = Polynomial((0.25 + 0.1j, 1, 0, 1))
        zs = np.array([0.1, 1 - 1j, -0.5j])
        np.testing.assert_allclose(p.evaluate_array(zs), [p(z) for z in zs])
        np.testing.assert_allclose(p.derivative_array(zs), [p.derivative_at(z) for z in zs])

    def test_matches_power_sum_on_random_pairs(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            degree = int(rng.integers(2, 7))
            coeffs = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
            coeffs[-1] += 2 if coeffs[-1].real >= 0 else -2
            z = complex(*rng.uniform(-3, 3, size=2))
            p = Polynomial(tuple(coeffs))
            terms = [c * z ** k for k, c in enumerate(coeffs)]
            scale = sum(abs(t) for t in terms)
            assert abs(p(z) - sum(terms)) <= 1e-13 * scale


class TestDerivedMaps:
    def test_conjugate_identity(self):
        p = Polynomial((-1, 0, 1))
        a, b = 2 - 1j, 0.5j
        q = p.conjugate(a, b)
        for z in (0.3, -1 + 0.2j, 2j):
            assert q(z) == pytest.approx((p(a * z + b) - b) / a)

    def test_critical_points(self):
        assert Polynomial((-1, 0, 1)).critical_points() == pytest.approx((0,))
        crit = Polynomial((0, -3, 0, 1)).critical_points()
        assert crit == pytest.approx((-1, 1))

    def test_str(self):
        assert str(Polynomial((cmath.exp(0j), 0, 1))) == "z^2 + 1"
