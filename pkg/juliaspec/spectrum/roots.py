"""All solutions of P^n(z) = z with multiplicity, plus the escalation ladder."""

from __future__ import annotations

import logging
import math
from typing import NamedTuple, Optional

import mpmath
import numpy as np

from juliaspec.dynamics.orbit import iterate_array
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.errors import BudgetExceededError, DomainError, RootCountError, UndercountError
from juliaspec.spectrum.aberth_solver import CHUNK_ROWS, repulsion
from juliaspec.spectrum.base import PeriodicSolver
from juliaspec.spectrum.newton_solver import GridNewtonSolver, newton_periodic, seed_points

logger = logging.getLogger(__name__)

DEFAULT_ROOT_BUDGET = 2 ** 16
RESIDUAL_TOLERANCE = 1e-9
DEDUPE_RADIUS = 1e-7  # relative to the escape radius
FLAT_DERIVATIVE = 1e-6
CONTOUR_NODES = 128
EXTENDED_DPS = 30
EXTENDED_MAX_STARTS = 256
MERGE_RADIUS = 1e-4


class PeriodicRoot(NamedTuple):
    point: complex
    multiplicity: int


# ---------------------------------------------------------------------------
# Validation, de-duplication, multiplicity
# ---------------------------------------------------------------------------

def _residuals(poly: Polynomial, n: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, dw = iterate_array(poly, z, n)
    with np.errstate(invalid="ignore"):
        return np.abs(w - z), dw - 1


def validate(poly: Polynomial, n: int, z: np.ndarray, tol: float = RESIDUAL_TOLERANCE) -> np.ndarray:
    z = z[np.isfinite(z)]
    if z.size == 0:
        return z
    res, _ = _residuals(poly, n, z)
    return z[res <= tol * (1 + np.abs(z))]


def cluster(z: np.ndarray, radius: float) -> list[np.ndarray]:
    """Group points closer than `radius`; deterministic for a given input set."""
    if z.size == 0:
        return []
    z = z[np.lexsort((z.imag, z.real))]
    cells: dict[tuple[int, int], list[int]] = {}
    reps: list[complex] = []
    members: list[list[complex]] = []
    for point in z:
        key = (math.floor(point.real / radius), math.floor(point.imag / radius))
        found = None
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in cells.get((key[0] + dx, key[1] + dy), ()):
                    if abs(reps[idx] - point) <= radius:
                        found = idx
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            found = len(reps)
            reps.append(complex(point))
            members.append([])
            cells.setdefault(key, []).append(found)
        members[found].append(complex(point))
    return [np.array(m) for m in members]


def contour_count(
    poly: Polynomial,
    n: int,
    center: complex,
    radius: float,
    nodes: int = CONTOUR_NODES,
) -> tuple[int, complex]:
    """Argument-principle count of roots of P^n(z) - z inside a circle, and their centroid."""
    theta = 2 * math.pi * np.arange(nodes) / nodes
    offsets = radius * np.exp(1j * theta)
    z = center + offsets
    w, dw = iterate_array(poly, z, n)
    log_deriv = (dw - 1) / (w - z)
    count = complex(np.mean(log_deriv * offsets))
    m = int(round(count.real))
    if m <= 0:
        return 0, center
    first_moment = complex(np.mean(z * log_deriv * offsets))
    return m, first_moment / m


def _with_multiplicity(
    poly: Polynomial,
    n: int,
    groups: list[np.ndarray],
) -> list[PeriodicRoot]:
    if not groups:
        return []
    best = []
    for g in groups:
        res, _ = _residuals(poly, n, g)
        best.append(complex(g[int(np.argmin(res))]))
    centers = np.array(best)
    _, fprime = _residuals(poly, n, centers)
    scale = poly.escape_radius
    flat = np.abs(fprime) < FLAT_DERIVATIVE
    out = [PeriodicRoot(complex(c), 1) for c in centers[~flat]]
    # Copies of one multiple root can spread further than the dedupe radius.
    for group in cluster(centers[flat], MERGE_RADIUS * scale):
        c = complex(group[0])
        others = centers[np.abs(centers - c) > MERGE_RADIUS * scale]
        nearest = float(np.abs(others - c).min()) if others.size else scale
        radius = min(1e-2 * scale, 0.4 * nearest)
        m, centroid = contour_count(poly, n, c, radius)
        out.append(PeriodicRoot(centroid if m > 1 else c, max(m, 1)))
    return out


def _collect(poly: Polynomial, n: int, candidates: np.ndarray) -> list[PeriodicRoot]:
    groups = cluster(validate(poly, n, candidates), DEDUPE_RADIUS * poly.escape_radius)
    return sorted(_with_multiplicity(poly, n, groups), key=lambda r: (r.point.real, r.point.imag))


# ---------------------------------------------------------------------------
# Escalation stages
# ---------------------------------------------------------------------------

def deflated_newton(
    poly: Polynomial,
    n: int,
    known: list[PeriodicRoot],
    starts: np.ndarray,
    max_iter: int = 150,
    tol: float = 1e-14,
) -> np.ndarray:
    """Newton on F / prod (z - r_i)^m_i without forming the quotient."""
    anchors = np.repeat(
        np.array([r.point for r in known], dtype=complex),
        [r.multiplicity for r in known],
    )
    z = np.array(starts, dtype=complex, copy=True)
    active = np.ones(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(max_iter):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            zi = z[idx]
            w, dw = iterate_array(poly, zi, n)
            ratio = (dw - 1) / (w - zi) - repulsion(zi, anchors, skip_self=False)
            step = 1.0 / ratio
            new = zi - step
            dead = ~np.isfinite(new) | (np.abs(new) > 4 * poly.escape_radius)
            z[idx] = np.where(dead, np.nan, new)
            settled = dead | (np.abs(step) <= tol * (1 + np.abs(new)))
            active[idx[settled]] = False
    return z[np.isfinite(z)]


def extended_precision_polish(
    poly: Polynomial,
    n: int,
    starts: np.ndarray,
    dps: int = EXTENDED_DPS,
    max_iter: int = 60,
) -> np.ndarray:
    """Newton in mpmath arithmetic for the few starts that double precision loses."""
    coeffs = list(reversed(poly.coefficients))
    out = []
    with mpmath.workdps(dps):
        for s in starts:
            z = mpmath.mpc(complex(s))
            for _ in range(max_iter):
                w, dw = z, mpmath.mpc(1)
                for _ in range(n):
                    dw *= _poly_derivative_mp(coeffs, w)
                    w = mpmath.polyval(coeffs, w)
                f = w - z
                fp = dw - 1
                if fp == 0:
                    break
                step = f / fp
                z -= step
                if abs(step) <= mpmath.mpf(10) ** (-dps + 5) * (1 + abs(z)):
                    break
                if abs(z) > 4 * poly.escape_radius:
                    break
            out.append(complex(z))
    return np.array(out, dtype=complex)


def _poly_derivative_mp(coeffs_desc: list[complex], z):
    d = len(coeffs_desc) - 1
    return mpmath.polyval([c * (d - i) for i, c in enumerate(coeffs_desc[:-1])], z)


# ---------------------------------------------------------------------------
# Public entry point
# ---------------------------------------------------------------------------

def periodic_points(
    poly: Polynomial,
    n: int,
    solver: Optional[PeriodicSolver] = None,
    budget: int = DEFAULT_ROOT_BUDGET,
    escalate: bool = True,
) -> list[PeriodicRoot]:
    """Every solution of P^n(z) = z, multiplicities summing to d^n.

    Stages: solver, solver with 4x effort, deflated Newton from preimage
    seeds, extended-precision Newton. Raises UndercountError carrying what
    was found when the count is still short.
    """
    if n < 1:
        raise DomainError(f"period must be >= 1, got {n}")
    expected = poly.degree ** n
    if expected > budget:
        raise BudgetExceededError(f"root count for period {n}", expected, budget)
    solver = solver or GridNewtonSolver()

    candidates = solver.find_candidates(poly, n)
    roots = _collect(poly, n, candidates)
    stages = [
        ("wider search", lambda: solver.find_candidates(poly, n, effort=4)),
        ("deflation", lambda: deflated_newton(poly, n, roots, _deflation_starts(poly, n))),
        ("extended precision", lambda: extended_precision_polish(poly, n, _missing_starts(poly, n, roots))),
    ]
    for label, stage in stages:
        total = sum(r.multiplicity for r in roots)
        if total == expected or not escalate:
            break
        logger.info("period %d: %d of %d roots, escalating (%s)", n, total, expected, label)
        candidates = np.concatenate([candidates, stage()])
        roots = _collect(poly, n, candidates)

    total = sum(r.multiplicity for r in roots)
    if total < expected:
        raise UndercountError(n, roots, expected)
    if total > expected:
        raise RootCountError(n, roots, expected)
    return roots


def _deflation_starts(poly: Polynomial, n: int) -> np.ndarray:
    return seed_points(poly, n)


def _nearest_distance(points: np.ndarray, known: np.ndarray) -> np.ndarray:
    out = np.empty(points.shape)
    for start in range(0, points.size, CHUNK_ROWS):
        block = np.abs(points[start:start + CHUNK_ROWS, None] - known[None, :])
        out[start:start + CHUNK_ROWS] = block.min(axis=1)
    return out


def _missing_starts(poly: Polynomial, n: int, roots: list[PeriodicRoot]) -> np.ndarray:
    """Seeds whose double-precision Newton run did not land on a known root."""
    seeds = seed_points(poly, n)
    if roots:
        landed = newton_periodic(poly, n, seeds)
        known = np.array([r.point for r in roots])
        lost = np.ones(seeds.shape, dtype=bool)
        ok = np.flatnonzero(np.isfinite(landed))
        if ok.size:
            lost[ok] = _nearest_distance(landed[ok], known) > DEDUPE_RADIUS * poly.escape_radius
        seeds = seeds[lost]
    if seeds.size > EXTENDED_MAX_STARTS:
        logger.info("extended precision limited to %d of %d seeds", EXTENDED_MAX_STARTS, seeds.size)
        seeds = seeds[:EXTENDED_MAX_STARTS]
    return seeds
