import cmath
import math
from fractions import Fraction

import pytest

from juliaspec.boettcher.green import green
from juliaspec.boettcher.rays import (
    HalfPlanePoint,
    angle_orbit,
    as_angle,
    psi,
    psi_array,
    trace_ray,
    trace_rays,
)
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.errors import DomainError


@pytest.fixture
def square():
    return Polynomial((0, 0, 1))


@pytest.fixture
def chebyshev():
    return Polynomial((-2, 0, 1))


@pytest.fixture
def basilica():
    return Polynomial((-1, 0, 1))


class TestAngles:
    def test_as_angle(self):
        assert as_angle("1/3") == Fraction(1, 3)
        assert as_angle("4/3") == Fraction(1, 3)
        assert as_angle(-1) == 0
        assert as_angle(0.25) == Fraction(1, 4)

    def test_bad_angle(self):
        with pytest.raises(DomainError):
            as_angle("one third")

    def test_angle_orbit(self):
        assert angle_orbit(Fraction(1, 3), 2) == (0, 2)
        assert angle_orbit(Fraction(1, 6), 2) == (1, 2)
        assert angle_orbit(Fraction(1, 7), 2) == (0, 3)
        assert angle_orbit(Fraction(0), 3) == (0, 1)

    def test_half_plane_point(self):
        t = HalfPlanePoint.of(0.25 + 0.5j)
        assert t.angle == Fraction(3, 4)
        assert t.potential == pytest.approx(math.pi)
        assert t.scaled(2) == HalfPlanePoint(Fraction(1, 2), 1.0)
        assert t.shifted(1).re == Fraction(5, 4)

    def test_lower_half_plane_rejected(self):
        with pytest.raises(DomainError):
            HalfPlanePoint(Fraction(0), -0.1)


class TestPsi:
    def test_square_closed_form(self, square):
        assert psi(square, 1j) == pytest.approx(math.exp(2 * math.pi), rel=1e-10)
        t = 0.2 + 0.3j
        assert psi(square, t) == pytest.approx(cmath.exp(-2j * math.pi * t), rel=1e-10)

    def test_chebyshev_closed_form(self, chebyshev):
        t = 0.25 + 0.1j
        w = cmath.exp(-2j * math.pi * t)
        assert psi(chebyshev, t) == pytest.approx(w + 1 / w, rel=1e-9)

    def test_functional_equation(self, basilica):
        t = HalfPlanePoint(Fraction(1, 5), 0.2)
        z, lifted = psi_array(basilica, [t, t.scaled(2)])
        assert abs(basilica(z) - lifted) < 1e-8 * (1 + abs(lifted))

    def test_deck_periodicity(self, basilica):
        t = HalfPlanePoint(Fraction(2, 7), 0.1)
        a, b = psi_array(basilica, [t, t.shifted(1)])
        assert abs(a - b) < 1e-12

    def test_potential_matches_green(self, basilica):
        t = HalfPlanePoint(Fraction(3, 10), 0.05)
        z = psi(basilica, t)
        assert green(basilica, z).value == pytest.approx(t.potential, rel=1e-8)

    def test_below_t_min(self, square):
        with pytest.raises(DomainError):
            psi(square, 0.1 + 0.001j)


class TestRays:
    def test_square_ray_zero_lands_at_one(self, square):
        ray = trace_ray(square, 0, s_lo=1e-3)
        assert ray.status == "landed"
        assert ray.landing == pytest.approx(1, abs=1e-10)
        for s, z in ray.samples:
            assert z == pytest.approx(math.exp(s), rel=1e-9)

    def test_chebyshev_endpoints(self, chebyshev):
        right, left = trace_rays(chebyshev, ["0", "1/2"], s_lo=1e-4)
        assert right.landing == pytest.approx(2, abs=1e-9)
        assert left.landing == pytest.approx(-2, abs=1e-9)
        assert left.status == "landed"

    def test_potentials_decrease_to_s_lo(self, basilica):
        ray = trace_ray(basilica, "1/3", s_hi=4, s_lo=0.01, steps=16)
        assert not ray.truncated
        assert ray.potentials[0] == pytest.approx(4)
        assert ray.potentials[-1] == pytest.approx(0.01)
        assert all(a > b for a, b in zip(ray.potentials, ray.potentials[1:]))
        assert len(ray.points) == len(ray.potentials)

    @pytest.mark.parametrize("steps", [2, 4, 8, 16, 24, 32])
    def test_coarse_steps_follow_square_ray(self, square, steps):
        ray = trace_ray(square, "1/3", s_lo=0.01, steps=steps)
        assert ray.status == "landed"
        assert ray.potentials[-1] == pytest.approx(0.01)
        for s, z in ray.samples:
            assert z == pytest.approx(cmath.exp(s + 2j * math.pi / 3), rel=1e-9)

    @pytest.mark.parametrize("steps", [8, 16])
    def test_coarse_steps_reach_basilica_floor(self, basilica, steps):
        ray = trace_ray(basilica, "1/3", s_lo=0.01, steps=steps)
        assert not ray.truncated
        assert ray.potentials[-1] == pytest.approx(0.01)

    def test_samples_on_the_right_level_set(self, basilica):
        ray = trace_ray(basilica, "1/3", s_lo=0.01)
        assert len(ray.samples) > 100
        for s, z in ray.samples[::20]:
            assert green(basilica, z).value == pytest.approx(s, rel=1e-7)

    def test_map_sends_ray_to_doubled_angle(self, basilica):
        steps = 64
        third, two_thirds = trace_rays(basilica, ["1/3", "2/3"], s_lo=0.01, steps=steps)
        assert not third.truncated and not two_thirds.truncated
        checked = 0
        for k in range(0, len(two_thirds.points) - steps - 1, 25):
            image = basilica(third.points[k + steps])
            assert abs(image - two_thirds.points[k]) < 1e-7 * (1 + abs(image))
            checked += 1
        assert checked > 10

    def test_basilica_rays_land_on_alpha_fixed_point(self, basilica):
        alpha = (1 - math.sqrt(5)) / 2
        for ray in trace_rays(basilica, ["1/3", "2/3"]):
            assert ray.status == "landed"
            assert abs(ray.landing - alpha) < 1e-4

    def test_workers_keep_order(self, basilica):
        serial = trace_rays(basilica, ["1/3", "1/7"], s_lo=0.1, steps=8)
        pooled = trace_rays(basilica, ["1/3", "1/7"], s_lo=0.1, steps=8, workers=2)
        assert [r.angle for r in pooled] == [Fraction(1, 3), Fraction(1, 7)]
        assert all(len(r.points) > 10 and not r.truncated for r in serial)
        assert pooled[1].points == pytest.approx(serial[1].points)

    def test_rows_and_dict(self, square):
        ray = trace_ray(square, "1/3", s_lo=0.5, steps=4)
        assert not ray.truncated
        s, re, im = ray.rows()[-1]
        assert s == pytest.approx(0.5)
        assert complex(re, im) == ray.points[-1]
        data = ray.to_dict()
        assert data["angle"] == "1/3"
        assert data["samples"] == len(ray.points)

    def test_bad_potential_range(self, square):
        with pytest.raises(DomainError):
            trace_ray(square, 0, s_hi=1, s_lo=2)
