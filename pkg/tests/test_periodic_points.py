import cmath
import math

import numpy as np
import pytest

from juliaspec.dynamics.orbit import iterate_array
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.errors import BudgetExceededError, DomainError
from juliaspec.spectrum.aberth_solver import AberthSolver
from juliaspec.spectrum.newton_solver import GridNewtonSolver, newton_periodic, seed_points
from juliaspec.spectrum.roots import cluster, contour_count, periodic_points, validate


@pytest.fixture
def square():
    return Polynomial((0, 0, 1))


@pytest.fixture
def parabolic():
    return Polynomial((0.25, 0, 1))


class TestPeriodicPoints:
    def test_fixed_points_of_square(self, square):
        roots = periodic_points(square, 1)
        assert [r.multiplicity for r in roots] == [1, 1]
        assert roots[0].point == pytest.approx(0, abs=1e-12)
        assert roots[1].point == pytest.approx(1, abs=1e-12)

    def test_period_three_of_square(self, square):
        roots = periodic_points(square, 3)
        assert sum(r.multiplicity for r in roots) == 8
        nonzero = [r.point for r in roots if abs(r.point) > 0.5]
        assert len(nonzero) == 7
        for z in nonzero:
            assert abs(z) == pytest.approx(1, abs=1e-10)
            assert abs(z ** 8 - z) < 1e-9

    def test_roots_sorted_by_real_part(self):
        roots = periodic_points(Polynomial((-1, 0, 1)), 2)
        keys = [(r.point.real, r.point.imag) for r in roots]
        assert keys == sorted(keys)

    def test_parabolic_double_root(self, parabolic):
        roots = periodic_points(parabolic, 1)
        assert len(roots) == 1
        assert roots[0].multiplicity == 2
        assert roots[0].point == pytest.approx(0.5, abs=1e-8)

    def test_parabolic_period_two(self, parabolic):
        roots = periodic_points(parabolic, 2)
        assert sum(r.multiplicity for r in roots) == 4
        double = [r for r in roots if r.multiplicity == 2]
        assert len(double) == 1
        assert double[0].point == pytest.approx(0.5, abs=1e-8)
        simple = sorted((r.point for r in roots if r.multiplicity == 1), key=lambda z: z.imag)
        assert simple[0] == pytest.approx(-0.5 - 1j, abs=1e-10)
        assert simple[1] == pytest.approx(-0.5 + 1j, abs=1e-10)

    def test_cubic(self):
        p = Polynomial((0.1j, -0.3, 0, 1))
        roots = periodic_points(p, 2)
        assert sum(r.multiplicity for r in roots) == 9

    def test_aberth_agrees_with_grid_newton(self):
        p = Polynomial((-1, 0, 1))
        a = periodic_points(p, 4, solver=AberthSolver())
        b = periodic_points(p, 4, solver=GridNewtonSolver())
        assert len(a) == len(b) == 16
        other = np.array([r.point for r in b])
        for r in a:
            assert np.abs(other - r.point).min() < 1e-9

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_matches_dense_grid_newton(self, n):
        p = Polynomial((-1, 0, 1))
        axis = np.linspace(-2, 2, 201)
        z = (axis[:, None] + 1j * axis[None, :]).reshape(-1)
        with np.errstate(all="ignore"):
            for _ in range(100):
                value, deriv = iterate_array(p, z, n)
                z = z - (value - z) / (deriv - 1)
            value, _ = iterate_array(p, z, n)
            residual = np.abs(value - z)
        found = []
        for w in z[np.isfinite(z) & (residual < 1e-10)]:
            if all(abs(w - u) > 1e-7 for u in found):
                found.append(complex(w))

        points = [r.point for r in periodic_points(p, n)]
        assert len(points) == len(found) == 2 ** n
        for w in found:
            assert min(abs(w - u) for u in points) < 1e-8
        for u in points:
            assert min(abs(w - u) for w in found) < 1e-8

    def test_budget(self, square):
        with pytest.raises(BudgetExceededError):
            periodic_points(square, 17)

    def test_bad_period(self, square):
        with pytest.raises(DomainError):
            periodic_points(square, 0)


class TestSolvers:
    def test_solver_names(self):
        assert GridNewtonSolver().name == "grid-newton"
        assert AberthSolver().name == "aberth"

    def test_seed_points_count(self, square):
        seeds = seed_points(square, 3)
        assert seeds.size == 8
        # n-th preimages of 2R = 4 lie on |z| = 4^(1/8)
        assert np.allclose(np.abs(seeds), 4 ** (1 / 8))

    def test_newton_converges_near_root(self, square):
        z = newton_periodic(square, 2, np.array([cmath.exp(2j * math.pi / 3) * 1.01]))
        assert z[0] == pytest.approx(cmath.exp(2j * math.pi / 3), abs=1e-12)

    def test_newton_discards_escapees(self, square):
        z = newton_periodic(square, 1, np.array([1e6 + 0j]))
        assert not np.isfinite(z[0]) or abs(z[0] - 1) < 1e-9


class TestHelpers:
    def test_validate_filters(self, square):
        z = validate(square, 1, np.array([0, 1, 0.5, np.nan], dtype=complex))
        assert sorted(z.real) == [0, 1]

    def test_cluster_merges_close_points(self):
        z = np.array([0, 1e-9, 1, 1 + 1e-9j, 2])
        groups = cluster(z, 1e-6)
        assert sorted(len(g) for g in groups) == [1, 2, 2]

    def test_contour_count(self, parabolic):
        count, centre = contour_count(parabolic, 1, 0.5 + 1e-3, 0.05)
        assert count == 2
        assert centre == pytest.approx(0.5, abs=1e-10)

    def test_contour_count_empty(self, square):
        count, _ = contour_count(square, 1, 0.5, 0.1)
        assert count == 0
