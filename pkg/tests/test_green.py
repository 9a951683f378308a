import math

import numpy as np
import pytest

from juliaspec.boettcher.green import (
    boettcher,
    boettcher_array,
    boettcher_scale,
    connectivity_check,
    green,
    green_array,
    inverse_boettcher_far,
)
from juliaspec.dynamics.polynomial import Polynomial


@pytest.fixture
def square():
    return Polynomial((0, 0, 1))


class TestGreen:
    def test_square_is_log_modulus(self, square):
        g = green(square, 2)
        assert g.value == pytest.approx(math.log(2), rel=1e-12)
        assert g.gradient == pytest.approx(0.5, rel=1e-9)
        assert not g.undecided

    def test_leading_coefficient_shift(self):
        g = green(Polynomial((0, 0, 2)), 3)
        assert g.value == pytest.approx(math.log(6), rel=1e-12)

    def test_interior_is_undecided(self, square):
        g = green(square, 0.5j)
        assert g.undecided
        assert g.value == 0.0
        assert g.distance_estimate == 0.0

    def test_invariance(self):
        p = Polynomial((-0.7 + 0.2j, 0, 1))
        z = 1.3 - 0.4j
        assert green(p, p(z)).value == pytest.approx(2 * green(p, z).value, rel=1e-9)

    def test_array_keeps_shape(self, square):
        grid = np.array([[2, 0.1], [4j, -3]], dtype=complex)
        field = green_array(square, grid)
        assert field.values.shape == (2, 2)
        assert field.escaped.tolist() == [[True, False], [True, True]]
        assert field.values[1, 0] == pytest.approx(math.log(4))

    def test_distance_estimate_near_circle(self, square):
        # G = ln|z| so G / |grad G| = |z| ln|z| ~ |z| - 1 near the unit circle
        g = green(square, 1.01)
        assert g.distance_estimate == pytest.approx(1.01 * math.log(1.01), rel=1e-6)


class TestBoettcher:
    def test_square_is_identity(self, square):
        assert boettcher(square, 3 - 4j) == pytest.approx(3 - 4j, rel=1e-12)

    def test_chebyshev(self):
        # z^2 - 2 is conjugate to w^2 by z = w + 1/w
        assert boettcher(Polynomial((-2, 0, 1)), 2.5) == pytest.approx(2, rel=1e-10)

    def test_functional_equation(self):
        p = Polynomial((0.3 + 0.1j, 0, 1))
        z = np.array([5, -4 + 3j, 6j])
        lhs = boettcher_array(p, p.evaluate_array(z))
        rhs = boettcher_array(p, z) ** 2
        assert np.allclose(lhs, rhs, rtol=1e-10)

    def test_non_monic_scale(self):
        p = Polynomial((0, 0, 2))
        assert boettcher_scale(p) == pytest.approx(2)
        assert boettcher(p, 7) == pytest.approx(14, rel=1e-12)

    def test_far_inverse(self):
        p = Polynomial((0.25, 1, 1))
        w = np.array([1e8, 1e8j])
        z = inverse_boettcher_far(p, w)
        assert np.allclose(boettcher_array(p, z), w, rtol=1e-12)


class TestConnectivity:
    def test_basilica_connected(self):
        report = connectivity_check(Polynomial((-1, 0, 1)))
        assert report.connected
        assert report.critical[0].z == 0

    def test_cantor_set(self):
        report = connectivity_check(Polynomial((1, 0, 1)))
        assert not report.connected
        assert report.critical[0].value > 0

    def test_cubic_one_escaping_critical_point(self):
        # critical points 0 and 2; 0 is fixed, 2 -> -4 escapes
        p = Polynomial((0, 0, -3, 1))
        report = connectivity_check(p)
        assert not report.connected
        assert sorted(g.undecided for g in report.critical) == [False, True]

    def test_to_dict(self):
        data = connectivity_check(Polynomial((-1, 0, 1))).to_dict()
        assert data["connected"] is True
        assert data["critical_points"][0]["bounded"] is True
