"""Forward orbits with chain-rule derivative accumulation."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.dynamics.types import LogComplex, Number, as_complex
from juliaspec.errors import DomainError

# Products are renormalised into a log-scale once they leave this band.
_RENORM_HIGH = 1e150
_RENORM_LOW = 1e-150


@dataclass(frozen=True)
class OrbitSegment:
    start: complex
    values: tuple[complex, ...]  # z_0 = start, ..., z_k
    log_derivative: LogComplex  # (P^k)'(start)
    escaped: bool = False

    @property
    def steps(self) -> int:
        return len(self.values) - 1

    @property
    def end(self) -> complex:
        return self.values[-1]

    @property
    def derivative(self) -> complex:
        return self.log_derivative.to_complex()


def iterate_with_derivative(
    poly: Polynomial,
    z: Number,
    n: int,
    bailout: Optional[float] = None,
) -> OrbitSegment:
    """Iterate n times, tracking (P^k)'(z) = prod P'(z_j).

    The orbit stops early once |z_k| exceeds `bailout` (the escape radius by
    default); `escaped` records that. Pass math.inf to never truncate.
    """
    if n < 0:
        raise DomainError(f"iteration count must be >= 0, got {n}")
    radius = poly.escape_radius if bailout is None else bailout
    current = as_complex(z)
    values = [current]
    acc = 1 + 0j
    log_scale = 0.0
    escaped = False
    for _ in range(n):
        if abs(current) > radius:
            escaped = True
            break
        acc *= poly.derivative_at(current)
        mag = abs(acc)
        if mag > _RENORM_HIGH or 0 < mag < _RENORM_LOW:
            log_scale += math.log(mag)
            acc /= mag
        current = poly(current)
        values.append(current)
        if not cmath.isfinite(current):
            escaped = True
            break
    escaped = escaped or abs(current) > radius
    if acc == 0:
        log_derivative = LogComplex(-math.inf, 0.0)
    else:
        log_derivative = LogComplex(log_scale + math.log(abs(acc)), cmath.phase(acc))
    return OrbitSegment(
        start=values[0],
        values=tuple(values),
        log_derivative=log_derivative,
        escaped=escaped,
    )


def iterate_array(
    poly: Polynomial,
    z: np.ndarray,
    n: int | np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised P^n and (P^n)' over an array of starting points.

    `n` may be an integer array giving a per-point iteration count. Values
    that overflow become inf/nan; callers filter with np.isfinite.
    """
    z = np.array(z, dtype=complex, copy=True)
    dz = np.ones_like(z)
    counts = np.broadcast_to(np.asarray(n), z.shape)
    top = int(counts.max()) if counts.size else 0
    uniform = bool(np.all(counts == top))
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(top):
            if uniform:
                dz *= poly.derivative_array(z)
                z = poly.evaluate_array(z)
            else:
                live = counts > k
                dz = np.where(live, dz * poly.derivative_array(z), dz)
                z = np.where(live, poly.evaluate_array(z), z)
    return z, dz
