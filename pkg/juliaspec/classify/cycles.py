"""Indifferent cycles and the small-multiplier scan over a computed spectrum."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from juliaspec.classify.brjuno import BrjunoFlag, RotationData, brjuno_data, rational_approximation
from juliaspec.dynamics.orbit import iterate_with_derivative
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.dynamics.types import OrbitKind
from juliaspec.errors import ValidationError
from juliaspec.spectrum.orbits import GROWTH_BASE_EXPONENT, MultiplierSpectrum, PeriodicOrbit

SCAN_DISCLAIMER = (
    "a finite scan can neither confirm nor refute an infinite sequence of "
    "small-multiplier cycles; hits are reported up to the largest period tested"
)


def rotation_number(multiplier: complex) -> float:
    """arg(lambda) / 2pi in [0, 1)."""
    turns = cmath.phase(multiplier) / (2 * math.pi)
    return turns % 1.0


@dataclass(frozen=True)
class IndifferentCycle:
    orbit: PeriodicOrbit
    rotation: float
    rational: Optional[Fraction]  # p/q when the multiplier is a root of unity
    brjuno: Optional[RotationData] = None

    @property
    def root_of_unity(self) -> bool:
        return self.rational is not None

    @property
    def cremer_candidate(self) -> bool:
        return self.brjuno is not None and self.brjuno.flag is BrjunoFlag.DIVERGENT

    def to_dict(self) -> dict:
        return {
            "orbit": self.orbit.to_dict(),
            "rotation": self.rotation,
            "root_of_unity": self.root_of_unity,
            "rational": None if self.rational is None else f"{self.rational.numerator}/{self.rational.denominator}",
            "brjuno": None if self.brjuno is None else self.brjuno.to_dict(),
            "cremer_candidate": self.cremer_candidate,
        }


def indifferent_cycles(spectrum: MultiplierSpectrum) -> list[IndifferentCycle]:
    out: list[IndifferentCycle] = []
    for orbit in spectrum.all_orbits():
        if orbit.kind is not OrbitKind.INDIFFERENT:
            continue
        alpha = rotation_number(orbit.multiplier)
        rational = rational_approximation(alpha)
        if rational is not None and rational == 1:
            rational = Fraction(0)
        brjuno = None if rational is not None else brjuno_data(alpha)
        out.append(IndifferentCycle(orbit=orbit, rotation=alpha, rational=rational, brjuno=brjuno))
    return out


# ---------------------------------------------------------------------------
# Small multipliers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmallMultiplierHit:
    period: int
    orbit: PeriodicOrbit
    modulus: float
    bound: float  # period^(5+eps)

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "point": self.orbit.points[0],
            "modulus": self.modulus,
            "bound": self.bound,
        }


@dataclass(frozen=True)
class SmallMultiplierScan:
    epsilon: float
    max_period: Optional[int]
    hits: tuple[SmallMultiplierHit, ...]
    note: str = SCAN_DISCLAIMER

    def __iter__(self):
        return iter(self.hits)

    def __len__(self) -> int:
        return len(self.hits)

    @property
    def periods(self) -> list[int]:
        return sorted({h.period for h in self.hits})

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "largest_period_tested": self.max_period,
            "hits": [h.to_dict() for h in self.hits],
            "hit_periods": self.periods,
            "note": self.note,
        }


def small_multiplier_scan(
    poly: Polynomial,
    spectrum: MultiplierSpectrum,
    epsilon: float,
) -> SmallMultiplierScan:
    """Repelling cycles with 1 < |lambda| <= n^(5+eps), moduli recomputed from the orbit points."""
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    exponent = GROWTH_BASE_EXPONENT + epsilon
    hits: list[SmallMultiplierHit] = []
    for n in spectrum.periods:
        bound = n ** exponent
        for orbit in spectrum.repelling(n):
            modulus = abs(iterate_with_derivative(poly, orbit.points[0], n, bailout=math.inf).derivative)
            if 1 < modulus <= bound:
                hits.append(SmallMultiplierHit(period=n, orbit=orbit, modulus=modulus, bound=bound))
    return SmallMultiplierScan(
        epsilon=epsilon,
        max_period=max(spectrum.periods) if spectrum.periods else None,
        hits=tuple(hits),
    )
