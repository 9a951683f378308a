import cmath
import math
from fractions import Fraction

import pytest

from juliaspec.boettcher.identities import (
    distortion_pairs,
    distortion_probe,
    identity_sweep,
    psi_check_grid,
    psi_derivative,
    verify_derivative_identity,
)
from juliaspec.boettcher.rays import HalfPlanePoint, psi
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.errors import DomainError, OverflowRangeError, ValidationError


@pytest.fixture
def square():
    return Polynomial((0, 0, 1))


@pytest.fixture
def basilica():
    return Polynomial((-1, 0, 1))


class TestPsiDerivative:
    def test_square_closed_form(self, square):
        t = HalfPlanePoint(Fraction(1, 10), 0.3)
        expected = -2j * math.pi * cmath.exp(-2j * math.pi * complex(t))
        assert psi_derivative(square, [t])[0] == pytest.approx(expected, rel=1e-7)


class TestDerivativeIdentity:
    def test_square(self, square):
        report = verify_derivative_identity(square, 0.3 + 0.2j, 3)
        assert report.passed
        assert report.residual < 1e-6
        assert report.to_dict()["verdict"] == "PASS"

    def test_basilica(self, basilica):
        report = verify_derivative_identity(basilica, HalfPlanePoint(Fraction(1, 3), 0.1), 4)
        assert report.passed

    def test_n_must_be_positive(self, square):
        with pytest.raises(DomainError):
            verify_derivative_identity(square, 0.1 + 0.2j, 0)

    def test_too_close_to_the_real_line(self, square):
        with pytest.raises(DomainError):
            verify_derivative_identity(square, 0.1 + 0.01j, 1)

    def test_potential_overflow(self, square):
        # 2 pi 2^8 0.2 is above 300
        with pytest.raises(OverflowRangeError):
            verify_derivative_identity(square, 0.1 + 0.2j, 8)

    def test_sweep(self, basilica):
        reports = identity_sweep(basilica, count=5, seed=1)
        assert len(reports) == 5
        for r in reports:
            assert r.passed
            assert 2 * math.pi * 2 ** r.n * r.t.im <= 300

    def test_sweep_is_reproducible(self, square):
        a = identity_sweep(square, count=3, seed=7)
        b = identity_sweep(square, count=3, seed=7)
        assert [(r.t, r.n) for r in a] == [(r.t, r.n) for r in b]

    def test_sweep_count(self, square):
        with pytest.raises(ValidationError):
            identity_sweep(square, count=0)


class TestPsiCheckGrid:
    def test_basilica_grid(self, basilica):
        report = psi_check_grid(basilica, rows=4, cols=4)
        assert report.functional_residuals.shape == (4, 4)
        assert report.passed
        assert report.max_deck < 1e-12
        data = report.to_dict()
        assert data["grid"] == [4, 4]
        assert data["verdict"] == "PASS"

    def test_cubic_chebyshev_grid(self):
        # z^3 - 3z has J = [-2, 2] and psi(t) = w + 1/w with w = exp(-2 pi i t)
        cubic = Polynomial((0, -3, 0, 1))
        report = psi_check_grid(cubic, rows=3, cols=5)
        assert report.passed
        t = HalfPlanePoint(Fraction(1, 5), 0.05)
        w = cmath.exp(-2j * math.pi * complex(t))
        assert psi(cubic, t) == pytest.approx(w + 1 / w, rel=1e-9)

    def test_empty_grid(self, square):
        with pytest.raises(ValidationError):
            psi_check_grid(square, rows=0, cols=3)


class TestDistortion:
    def test_pairs_respect_constraints(self):
        pairs, rejected = distortion_pairs(200, seed=5)
        assert len(pairs) == 200
        assert rejected > 0
        for x, h, s in pairs:
            assert 0 <= x < 1
            assert h <= s <= 0.5

    def test_square_has_no_distortion(self, square):
        report = distortion_probe(square, samples=100, seed=3)
        assert report.d_hat <= 1 + 1e-6
        assert report.samples == 100
        assert report.to_dict()["seed"] == 3

    def test_reproducible(self, basilica):
        a = distortion_probe(basilica, samples=100, seed=11)
        b = distortion_probe(basilica, samples=100, seed=11)
        assert a.d_hat == b.d_hat
        assert a.t == b.t

    def test_minimum_samples(self, square):
        with pytest.raises(ValidationError):
            distortion_probe(square, samples=10)
