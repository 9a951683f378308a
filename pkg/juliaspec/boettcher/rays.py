"""External rays and the covering map psi from the upper half plane.

Convention: psi(t) is the point of angle -Re(t) mod 1 (in turns) at potential
2*pi*Im(t), so phi(psi(t)) = exp(-2*pi*i*t), psi(t + 1) = psi(t) and
P(psi(t)) = psi(d*t).

Points are pulled back from a high potential, where phi^-1 has an explicit
asymptotic form, by Newton on P^m(z) = phi^-1(...) at `steps` geometric levels per
factor of d. A level Newton cannot reach in one hop is split in log-potential,
up to MAX_SPLITS times, before the ray is reported truncated.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from juliaspec.boettcher.green import inverse_boettcher_far
from juliaspec.dynamics.orbit import iterate_array, iterate_with_derivative
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.errors import DomainError, RayDivergenceError

logger = logging.getLogger(__name__)

T_MIN = 0.02
STEPS_PER_LEVEL = 64
MAX_NEWTON = 5
MAX_SPLITS = 12
FINAL_NEWTON = 10
NEWTON_TOL = 1e-14
ACCEPT_TOL = 1e-9
FAR_POTENTIAL = 20.0
LANDING_TOL = 1e-6
MAX_ANGLE_ORBIT = 64

AngleLike = Union[Fraction, int, str]


def far_potential(poly: Polynomial) -> float:
    return FAR_POTENTIAL + math.log(max(1.0, poly.escape_radius))


def as_angle(theta: AngleLike | float) -> Fraction:
    """Exact angle in turns reduced to [0, 1); accepts '1/3', Fractions, ints, floats."""
    try:
        return Fraction(theta) % 1
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot read angle {theta!r}") from exc


@dataclass(frozen=True)
class HalfPlanePoint:
    re: Fraction
    im: float

    def __post_init__(self) -> None:
        re = self.re if isinstance(self.re, Fraction) else Fraction(self.re)
        im = float(self.im)
        if not (math.isfinite(im) and im > 0):
            raise DomainError(f"Im(t) must be > 0, got {im}")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def of(cls, t: Union[complex, HalfPlanePoint]) -> HalfPlanePoint:
        if isinstance(t, HalfPlanePoint):
            return t
        t = complex(t)
        return cls(Fraction(t.real), t.imag)

    @property
    def angle(self) -> Fraction:
        return (-self.re) % 1

    @property
    def potential(self) -> float:
        return 2 * math.pi * self.im

    def scaled(self, k: int) -> HalfPlanePoint:
        return HalfPlanePoint(self.re * k, self.im * k)

    def shifted(self, dx: Union[Fraction, float, int]) -> HalfPlanePoint:
        return HalfPlanePoint(self.re + Fraction(dx), self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), self.im)

    def __str__(self) -> str:
        return f"{float(self.re):g}{self.im:+g}i"


# ---------------------------------------------------------------------------
# Pull-back engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Descent:
    points: np.ndarray
    failed_at: np.ndarray  # schedule row of the first failure, -1 when none
    history: Optional[np.ndarray] = None


def _angle_table(angles: Sequence[Fraction], d: int, m_max: int) -> np.ndarray:
    """table[i, m] = d^m * angles[i] mod 1, reduced exactly before rounding."""
    table = np.empty((len(angles), m_max + 1))
    for i, theta in enumerate(angles):
        x = theta % 1
        for m in range(m_max + 1):
            table[i, m] = float(x)
            x = (x * d) % 1
    return table


def _targets(
    poly: Polynomial, table: np.ndarray, s: np.ndarray, s_far: float
) -> tuple[np.ndarray, np.ndarray]:
    """Iterate count m and the far-field point phi^-1 at potential s * d^m, per row of `table`."""
    d = poly.degree
    m = np.zeros(s.shape, dtype=int)
    low = s < s_far
    m[low] = np.ceil(np.log(s_far / s[low]) / math.log(d)).astype(int)
    lifted = s * np.power(float(d), m)
    w = np.exp(lifted + 2j * math.pi * table[np.arange(s.size), m])
    return m, inverse_boettcher_far(poly, w)


def _pull(
    poly: Polynomial, z: np.ndarray, m: np.ndarray, target: np.ndarray, iterations: int
) -> tuple[np.ndarray, np.ndarray]:
    """Newton on P^m(z) = target from z; returns the new points and which converged."""
    z = z.copy()
    done = np.zeros(z.shape, dtype=bool)
    last = np.full(z.shape, np.inf)
    for _ in range(iterations):
        idx = np.flatnonzero(~done)
        if idx.size == 0:
            break
        w, dw = iterate_array(poly, z[idx], m[idx])
        step = (w - target[idx]) / dw
        z[idx] -= step
        size = np.abs(step)
        last[idx] = size
        done[idx] = ~np.isfinite(size) | (size <= NEWTON_TOL * (1 + np.abs(z[idx])))
    ok = np.isfinite(z) & (last <= ACCEPT_TOL * (1 + np.abs(z)))
    return z, ok


def _bridge(
    poly: Polynomial,
    row: np.ndarray,
    z: complex,
    s_from: float,
    s_to: float,
    s_far: float,
    iterations: int,
) -> Optional[complex]:
    """Pull one point from s_from down to s_to, halving the step in log-potential on failure."""
    pending = [s_to]
    while pending:
        s = pending[-1]
        m, target = _targets(poly, row[None, :], np.array([s]), s_far)
        zk, ok = _pull(poly, np.array([z]), m, target, iterations)
        if ok[0]:
            z, s_from = complex(zk[0]), s
            pending.pop()
        elif len(pending) > MAX_SPLITS:
            return None
        else:
            pending.append(math.sqrt(s_from * s))
    return z


def _descend(
    poly: Polynomial,
    angles: Sequence[Fraction],
    schedule: np.ndarray,
    max_newton: int = MAX_NEWTON,
    keep_history: bool = False,
) -> _Descent:
    """Follow each angle down its column of potentials; row 0 must be at or above far_potential.

    A row that Newton cannot reach in one hop is bridged by subdividing the
    potential step, so the schedule only sets where points are recorded.
    """
    d = poly.degree
    s_far = far_potential(poly)
    rows, count = schedule.shape
    m_max = max(0, math.ceil(math.log(s_far / float(schedule.min())) / math.log(d))) + 1
    table = _angle_table(angles, d, m_max)

    _, z = _targets(poly, table, schedule[0], s_far)
    failed_at = np.full(count, -1)
    history = [z.copy()] if keep_history else None
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(1, rows):
            live = failed_at < 0
            if live.any():
                iterations = FINAL_NEWTON if k == rows - 1 else max_newton
                m, target = _targets(poly, table, schedule[k], s_far)
                zk, ok = _pull(poly, z, m, target, iterations)
                for i in np.flatnonzero(live & ~ok):
                    bridged = _bridge(
                        poly, table[i], complex(z[i]), float(schedule[k - 1, i]),
                        float(schedule[k, i]), s_far, iterations,
                    )
                    if bridged is None:
                        failed_at[i] = k
                    else:
                        zk[i], ok[i] = bridged, True
                z = np.where(live & ok, zk, z)
            if history is not None:
                history.append(z.copy())
    return _Descent(
        points=z,
        failed_at=failed_at,
        history=np.array(history) if history is not None else None,
    )


def _schedule_to(poly: Polynomial, potentials: np.ndarray, steps: int) -> np.ndarray:
    s_far = far_potential(poly)
    top = np.maximum(potentials, s_far)
    lowest = float(potentials.min())
    if lowest >= s_far:
        return potentials[None, :].copy()
    rows = math.ceil(steps * math.log(s_far / lowest) / math.log(poly.degree))
    frac = np.arange(rows + 1) / rows
    return top[None, :] * (potentials / top)[None, :] ** frac[:, None]


# ---------------------------------------------------------------------------
# psi
# ---------------------------------------------------------------------------

def psi_array(
    poly: Polynomial,
    ts: Sequence[Union[complex, HalfPlanePoint]],
    t_min: float = T_MIN,
    steps: int = STEPS_PER_LEVEL,
) -> np.ndarray:
    points = [HalfPlanePoint.of(t) for t in ts]
    if not points:
        return np.zeros(0, dtype=complex)
    for t in points:
        if t.im < t_min:
            raise DomainError(f"Im(t) = {t.im:g} is below t_min = {t_min:g}; use trace_ray")
    potentials = np.array([t.potential for t in points])
    result = _descend(poly, [t.angle for t in points], _schedule_to(poly, potentials, steps))
    failed = np.flatnonzero(result.failed_at >= 0)
    if failed.size:
        raise RayDivergenceError(f"pull-back failed for t = {points[int(failed[0])]}")
    return result.points


def psi(poly: Polynomial, t: Union[complex, HalfPlanePoint], t_min: float = T_MIN) -> complex:
    return complex(psi_array(poly, [t], t_min=t_min)[0])


# ---------------------------------------------------------------------------
# Rays
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExternalRay:
    angle: Fraction
    potentials: tuple[float, ...]
    points: tuple[complex, ...]
    landing: Optional[complex] = None
    status: str = "undecided"  # landed, undecided or truncated
    failure_depth: Optional[int] = None

    @property
    def truncated(self) -> bool:
        return self.failure_depth is not None

    @property
    def samples(self) -> list[tuple[float, complex]]:
        return list(zip(self.potentials, self.points))

    def rows(self) -> list[tuple[float, float, float]]:
        return [(s, z.real, z.imag) for s, z in self.samples]

    def to_dict(self) -> dict:
        return {
            "angle": f"{self.angle.numerator}/{self.angle.denominator}",
            "samples": len(self.points),
            "lowest_potential": self.potentials[-1] if self.potentials else None,
            "landing": self.landing,
            "status": self.status,
            "failure_depth": self.failure_depth,
        }


def angle_orbit(theta: Fraction, d: int, limit: int = MAX_ANGLE_ORBIT) -> Optional[tuple[int, int]]:
    """(preperiod, period) of theta under t -> d t mod 1, or None past `limit` steps."""
    seen: dict[Fraction, int] = {}
    x = theta % 1
    for k in range(limit + 1):
        if x in seen:
            return seen[x], k - seen[x]
        seen[x] = k
        x = (x * d) % 1
    return None


def _aitken(a: complex, b: complex, c: complex) -> complex:
    denom = (c - b) - (b - a)
    if abs(denom) < 1e-300:
        return c
    return c - (c - b) ** 2 / denom


def _polish_landing(poly: Polynomial, z: complex, pre: int, period: int) -> Optional[complex]:
    """Newton on P^(pre+period)(z) = P^pre(z); returns z only if it lands on a repelling cycle."""
    for _ in range(50):
        head = iterate_with_derivative(poly, z, pre, bailout=math.inf)
        full = iterate_with_derivative(poly, z, pre + period, bailout=math.inf)
        f = full.end - head.end
        fp = full.derivative - head.derivative
        if fp == 0 or not math.isfinite(abs(f)):
            return None
        step = f / fp
        z -= step
        if abs(step) <= 1e-15 * (1 + abs(z)):
            break
    head = iterate_with_derivative(poly, z, pre, bailout=math.inf)
    full = iterate_with_derivative(poly, z, pre + period, bailout=math.inf)
    if abs(full.end - head.end) > 1e-10 * (1 + abs(z)):
        return None
    cycle = iterate_with_derivative(poly, head.end, period, bailout=math.inf)
    if abs(cycle.derivative) <= 1 + 1e-8:
        return None
    return z


def _landing(
    poly: Polynomial,
    theta: Fraction,
    points: np.ndarray,
    steps: int,
    tol: float,
) -> tuple[Optional[complex], str]:
    orbit = angle_orbit(theta, poly.degree)
    gap = steps * (orbit[1] if orbit else 1)
    if len(points) < 2 * gap + 2:
        return None, "undecided"
    last = complex(points[-1])
    estimate = _aitken(complex(points[-1 - 2 * gap]), complex(points[-1 - gap]), last)
    spread = abs(estimate - last)
    if orbit is not None:
        polished = _polish_landing(poly, estimate, *orbit)
        if polished is not None and abs(polished - estimate) <= max(4 * spread, tol):
            return polished, "landed"
        return None, "undecided"
    previous = _aitken(complex(points[-2 - 2 * gap]), complex(points[-2 - gap]), complex(points[-2]))
    if abs(previous - estimate) <= tol:
        return estimate, "landed"
    return None, "undecided"


def trace_ray(
    poly: Polynomial,
    theta: AngleLike,
    s_hi: Optional[float] = None,
    s_lo: float = 1e-6,
    steps: int = STEPS_PER_LEVEL,
    max_newton: int = MAX_NEWTON,
    landing_tol: float = LANDING_TOL,
) -> ExternalRay:
    """Samples of the ray of angle theta at potentials s_hi * d^(-k/steps) down to s_lo."""
    theta = as_angle(theta)
    s_far = far_potential(poly)
    s_hi = s_far if s_hi is None else float(s_hi)
    if not (s_hi > s_lo > 0):
        raise DomainError(f"need s_hi > s_lo > 0, got s_hi={s_hi:g}, s_lo={s_lo:g}")
    log_d = math.log(poly.degree)

    count = math.ceil(steps * math.log(s_hi / s_lo) / log_d)
    recorded = s_hi * np.power(float(poly.degree), -np.arange(count + 1) / steps)
    recorded[-1] = s_lo
    if count >= 1 and recorded[-2] <= s_lo:
        recorded = recorded[:-1]
    if s_hi < s_far:
        lead = math.ceil(steps * math.log(s_far / s_hi) / log_d)
        approach = s_far * (s_hi / s_far) ** (np.arange(lead) / lead)
    else:
        approach = np.zeros(0)
    schedule = np.concatenate([approach, recorded])[:, None]

    result = _descend(poly, [theta], schedule, max_newton=max_newton, keep_history=True)
    trail = result.history[approach.size:, 0]
    potentials = recorded
    failure = int(result.failed_at[0])
    if failure >= 0:
        keep = max(failure - approach.size, 0)
        trail, potentials = trail[:keep], potentials[:keep]
        logger.warning(
            "ray %s truncated at potential %.3g", theta, schedule[failure, 0]
        )
        return ExternalRay(
            angle=theta,
            potentials=tuple(float(s) for s in potentials),
            points=tuple(complex(z) for z in trail),
            status="truncated",
            failure_depth=keep,
        )
    landing, status = _landing(poly, theta, trail, steps, landing_tol)
    logger.info("ray %s: %d samples, %s", theta, trail.size, status)
    return ExternalRay(
        angle=theta,
        potentials=tuple(float(s) for s in potentials),
        points=tuple(complex(z) for z in trail),
        landing=landing,
        status=status,
    )


def _trace_job(args: tuple) -> ExternalRay:
    poly, theta, s_hi, s_lo, steps, landing_tol = args
    return trace_ray(poly, theta, s_hi=s_hi, s_lo=s_lo, steps=steps, landing_tol=landing_tol)


def trace_rays(
    poly: Polynomial,
    thetas: Sequence[AngleLike],
    s_hi: Optional[float] = None,
    s_lo: float = 1e-6,
    steps: int = STEPS_PER_LEVEL,
    landing_tol: float = LANDING_TOL,
    workers: int = 1,
) -> list[ExternalRay]:
    """Trace several angles, in a process pool when workers > 1; order follows `thetas`."""
    jobs = [(poly, as_angle(t), s_hi, s_lo, steps, landing_tol) for t in thetas]
    if workers <= 1 or len(jobs) <= 1:
        return [_trace_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_trace_job, jobs))
