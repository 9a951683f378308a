"""Exact-period cycles, their multipliers, and the multiplier growth check."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from juliaspec.dynamics.orbit import iterate_with_derivative
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.dynamics.types import OrbitKind
from juliaspec.errors import (
    CycleGroupingError,
    EmptySpectrumError,
    InsufficientDataError,
    NumericalError,
    ValidationError,
)
from juliaspec.spectrum.aberth_solver import AberthSolver
from juliaspec.spectrum.base import PeriodicSolver
from juliaspec.spectrum.newton_solver import GridNewtonSolver
from juliaspec.spectrum.roots import DEFAULT_ROOT_BUDGET, PeriodicRoot, periodic_points

logger = logging.getLogger(__name__)

SIEVE_TOLERANCE = 1e-6  # relative to the escape radius
INDIFFERENCE_TOLERANCE = 1e-8
GROWTH_BASE_EXPONENT = 5.0

SOLVERS: dict[str, type[PeriodicSolver]] = {
    "grid-newton": GridNewtonSolver,
    "aberth": AberthSolver,
}


def make_solver(name: str) -> PeriodicSolver:
    try:
        return SOLVERS[name]()
    except KeyError:
        raise ValidationError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None


def divisors(n: int) -> list[int]:
    return [m for m in range(1, n + 1) if n % m == 0]


def mobius(n: int) -> int:
    result, k = 1, 2
    while k * k <= n:
        if n % k == 0:
            n //= k
            if n % k == 0:
                return 0
            result = -result
        k += 1
    return -result if n > 1 else result


def exact_orbit_count(degree: int, n: int) -> int:
    """Number of period-n cycles of a generic degree-d map."""
    return sum(mobius(n // m) * degree ** m for m in divisors(n)) // n


# ---------------------------------------------------------------------------
# Cycles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: tuple[complex, ...]
    multiplier: complex
    kind: OrbitKind
    multiplicity: int = 1

    @property
    def modulus(self) -> float:
        return abs(self.multiplier)

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "points": list(self.points),
            "multiplier": self.multiplier,
            "modulus": self.modulus,
            "kind": str(self.kind),
            "multiplicity": self.multiplicity,
        }


def _group_cycles(
    poly: Polynomial,
    n: int,
    points: list[PeriodicRoot],
    tol: float,
    indifference_tol: float,
) -> list[PeriodicOrbit]:
    pool = np.array([r.point for r in points])
    unused = np.ones(pool.shape, dtype=bool)
    orbits: list[PeriodicOrbit] = []
    for start in range(pool.size):
        if not unused[start]:
            continue
        cycle = [start]
        unused[start] = False
        z = complex(pool[start])
        for _ in range(n - 1):
            z = poly(z)
            gaps = np.where(unused, np.abs(pool - z), np.inf)
            nxt = int(np.argmin(gaps))
            if gaps[nxt] > tol:
                raise CycleGroupingError(
                    f"period {n}: image of {pool[cycle[-1]]} matches no remaining periodic point"
                )
            cycle.append(nxt)
            unused[nxt] = False
            z = complex(pool[nxt])
        if abs(poly(z) - pool[start]) > tol:
            raise CycleGroupingError(f"period {n}: cycle through {pool[start]} does not close")
        seg = iterate_with_derivative(poly, pool[start], n, bailout=math.inf)
        multiplier = seg.derivative
        orbits.append(
            PeriodicOrbit(
                period=n,
                points=tuple(complex(pool[i]) for i in cycle),
                multiplier=multiplier,
                kind=OrbitKind.from_modulus(abs(multiplier), indifference_tol),
                multiplicity=points[start].multiplicity,
            )
        )
    return orbits


def exact_period_orbits(
    poly: Polynomial,
    n: int,
    roots_by_period: Optional[dict[int, list[PeriodicRoot]]] = None,
    solver: Optional[PeriodicSolver] = None,
    budget: int = DEFAULT_ROOT_BUDGET,
    sieve_tol: float = SIEVE_TOLERANCE,
    indifference_tol: float = INDIFFERENCE_TOLERANCE,
) -> list[PeriodicOrbit]:
    """Cycles of exact period n, each with its multiplier and type."""
    cache = roots_by_period if roots_by_period is not None else {}
    for m in divisors(n):
        if m not in cache:
            cache[m] = periodic_points(poly, m, solver=solver, budget=budget)

    radius = sieve_tol * poly.escape_radius
    lower = [r.point for m in divisors(n)[:-1] for r in cache[m]]
    candidates = cache[n]
    if lower:
        lower_arr = np.array(lower)
        candidates = [r for r in candidates if np.abs(lower_arr - r.point).min() > radius]

    orbits = _group_cycles(poly, n, candidates, radius * 10, indifference_tol)
    orbits.sort(key=lambda o: (o.modulus, o.points[0].real, o.points[0].imag))

    if all(r.multiplicity == 1 for r in cache[n]):
        expected = exact_orbit_count(poly.degree, n)
        if len(orbits) != expected:
            raise CycleGroupingError(
                f"period {n}: found {len(orbits)} cycles, expected {expected}"
            )
    return orbits


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------

@dataclass
class MultiplierSpectrum:
    fingerprint: str
    degree: int
    orbits: dict[int, list[PeriodicOrbit]] = field(default_factory=dict)
    root_counts: dict[int, int] = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def periods(self) -> list[int]:
        return sorted(self.orbits)

    def repelling(self, n: int) -> list[PeriodicOrbit]:
        return [o for o in self.orbits.get(n, []) if o.kind is OrbitKind.REPELLING]

    def lambda_min(self, n: int) -> Optional[float]:
        """Smallest repelling multiplier modulus at exact period n."""
        mods = [o.modulus for o in self.repelling(n)]
        return min(mods) if mods else None

    def all_orbits(self) -> list[PeriodicOrbit]:
        return [o for n in self.periods for o in self.orbits[n]]

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "degree": self.degree,
            "periods": [
                {
                    "period": n,
                    "root_count": self.root_counts.get(n),
                    "lambda_min": self.lambda_min(n),
                    "orbits": [o.to_dict() for o in self.orbits[n]],
                }
                for n in self.periods
            ],
            "failures": {str(n): msg for n, msg in sorted(self.failures.items())},
        }


def _roots_job(
    poly: Polynomial, n: int, solver_name: str, budget: int, escalate: bool = True
) -> tuple[int, list[PeriodicRoot]]:
    return n, periodic_points(
        poly, n, solver=make_solver(solver_name), budget=budget, escalate=escalate
    )


def multiplier_spectrum(
    poly: Polynomial,
    n_max: int,
    solver_name: str = "grid-newton",
    budget: int = DEFAULT_ROOT_BUDGET,
    workers: int = 1,
    strict: bool = True,
    sieve_tol: float = SIEVE_TOLERANCE,
    indifference_tol: float = INDIFFERENCE_TOLERANCE,
    escalate: bool = True,
) -> MultiplierSpectrum:
    """All exact-period cycles for periods 1..n_max.

    With strict=False a failing period is recorded in `failures` and the
    remaining periods still run; otherwise the error propagates with the
    partial spectrum attached as `partial_spectrum`.
    """
    if n_max < 1:
        raise InsufficientDataError(f"n_max must be >= 1, got {n_max}")
    spectrum = MultiplierSpectrum(fingerprint=poly.fingerprint, degree=poly.degree)
    roots: dict[int, list[PeriodicRoot]] = {}
    errors: dict[int, NumericalError] = {}

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(_roots_job, poly, n, solver_name, budget, escalate): n
                for n in range(1, n_max + 1)
            }
            for future in as_completed(futures):
                n = futures[future]
                try:
                    _, found = future.result()
                    roots[n] = found
                except NumericalError as exc:
                    errors[n] = exc
    else:
        for n in range(1, n_max + 1):
            try:
                _, roots[n] = _roots_job(poly, n, solver_name, budget, escalate)
            except NumericalError as exc:
                errors[n] = exc

    for n in range(1, n_max + 1):
        if n in errors:
            spectrum.failures[n] = str(errors[n])
            continue
        if any(m in errors for m in divisors(n)):
            spectrum.failures[n] = "a divisor period failed"
            continue
        try:
            spectrum.orbits[n] = exact_period_orbits(
                poly,
                n,
                roots_by_period=roots,
                sieve_tol=sieve_tol,
                indifference_tol=indifference_tol,
            )
            spectrum.root_counts[n] = sum(r.multiplicity for r in roots[n])
        except NumericalError as exc:
            errors[n] = exc
            spectrum.failures[n] = str(exc)
        logger.info("period %d: %d cycles", n, len(spectrum.orbits.get(n, [])))

    if errors and strict:
        first = min(errors)
        exc = errors[first]
        exc.period = first
        exc.partial_spectrum = spectrum
        raise exc
    return spectrum


# ---------------------------------------------------------------------------
# Growth check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthReport:
    epsilon: float
    exponent: float
    ratios: dict[int, float]  # lambda_min(n) / n^exponent
    best_constant: float
    best_period: int
    slope: float  # least-squares slope of ln lambda_min against ln n
    upper_slope: float  # same, upper half of the tested periods
    max_period: int

    @property
    def holds(self) -> bool:
        return self.best_constant > 0

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "exponent": self.exponent,
            "ratios": {str(n): r for n, r in sorted(self.ratios.items())},
            "best_constant": self.best_constant,
            "best_period": self.best_period,
            "slope": self.slope,
            "upper_slope": self.upper_slope,
            "max_period": self.max_period,
            "holds_on_tested_range": self.holds,
        }


def _slope(periods: list[int], values: list[float]) -> float:
    return float(np.polyfit(np.log(periods), np.log(values), 1)[0])


def growth_check(spectrum: MultiplierSpectrum, epsilon: float) -> GrowthReport:
    """Largest C with lambda_min(n) >= C n^(5+eps) on the tested periods."""
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    if not any(spectrum.repelling(n) for n in spectrum.periods):
        raise EmptySpectrumError("spectrum has no repelling cycles")
    lam = {n: spectrum.lambda_min(n) for n in spectrum.periods}
    lam = {n: v for n, v in lam.items() if v is not None}
    if len(lam) < 3:
        raise InsufficientDataError(
            f"growth check needs 3 periods with repelling cycles, got {len(lam)}"
        )
    exponent = GROWTH_BASE_EXPONENT + epsilon
    ratios = {n: v / n ** exponent for n, v in lam.items()}
    best_period = min(ratios, key=lambda n: (ratios[n], n))
    periods = sorted(lam)
    upper = periods[len(periods) // 2:]
    if len(upper) < 2:
        upper = periods[-2:]
    return GrowthReport(
        epsilon=epsilon,
        exponent=exponent,
        ratios=ratios,
        best_constant=ratios[best_period],
        best_period=best_period,
        slope=_slope(periods, [lam[n] for n in periods]),
        upper_slope=_slope(upper, [lam[n] for n in upper]),
        max_period=max(spectrum.periods),
    )
