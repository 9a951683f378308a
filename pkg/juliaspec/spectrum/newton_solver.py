"""Grid Newton solver for P^n(z) = z: many independent vectorised Newton runs."""

from __future__ import annotations

import logging
import math

import numpy as np

from juliaspec.dynamics.orbit import iterate_array
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.spectrum.base import PeriodicSolver
from juliaspec.tree.preimage import preimages_array

logger = logging.getLogger(__name__)

STARTS_PER_ROOT = 8
START_RADII = (0.5, 1.0, 1.5)  # multiples of the escape radius
GOLDEN_ANGLE = math.pi * (3 - math.sqrt(5))


def newton_periodic(
    poly: Polynomial,
    n: int,
    z: np.ndarray,
    max_iter: int = 200,
    tol: float = 1e-14,
) -> np.ndarray:
    """Run Newton on F(z) = P^n(z) - z from every start; diverged runs become nan."""
    z = np.array(z, dtype=complex, copy=True)
    cap = 4 * poly.escape_radius
    active = np.ones(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(max_iter):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            zi = z[idx]
            w, dw = iterate_array(poly, zi, n)
            step = (w - zi) / (dw - 1)
            size = np.abs(step)
            # Long steps are clipped to the escape disk scale.
            step = np.where(size > poly.escape_radius, step * (poly.escape_radius / size), step)
            new = zi - step
            dead = ~np.isfinite(new) | (np.abs(new) > cap)
            z[idx] = np.where(dead, np.nan, new)
            settled = dead | (size <= tol * (1 + np.abs(new)))
            active[idx[settled]] = False
    return z


def seed_points(poly: Polynomial, n: int) -> np.ndarray:
    """The d^n n-th preimages of a point well outside the filled Julia set."""
    level = np.array([2.0 * poly.escape_radius + 0j])
    for _ in range(n):
        level = preimages_array(poly, level).reshape(-1)
    return level


class GridNewtonSolver(PeriodicSolver):
    def __init__(
        self,
        starts_per_root: int = STARTS_PER_ROOT,
        max_iter: int = 200,
        use_preimage_seeds: bool = True,
    ) -> None:
        self.starts_per_root = starts_per_root
        self.max_iter = max_iter
        self.use_preimage_seeds = use_preimage_seeds

    @property
    def name(self) -> str:
        return "grid-newton"

    def launch_points(self, poly: Polynomial, n: int, effort: int = 1) -> np.ndarray:
        count = poly.degree ** n
        radius = poly.escape_radius
        per_circle = math.ceil(self.starts_per_root * count * effort / len(START_RADII))
        angles = 2 * math.pi * np.arange(per_circle) / per_circle
        circles = [
            scale * radius * np.exp(1j * (angles + k * GOLDEN_ANGLE / per_circle))
            for k, scale in enumerate(START_RADII)
        ]
        side = max(4, math.ceil(math.sqrt(2 * count * effort)))
        axis = np.linspace(-radius, radius, side)
        grid = (axis[:, None] + 1j * axis[None, :]).reshape(-1)
        grid = grid[np.abs(grid) <= radius]
        parts = circles + [grid]
        if self.use_preimage_seeds:
            parts.append(seed_points(poly, n))
        return np.concatenate(parts)

    def find_candidates(self, poly: Polynomial, n: int, effort: int = 1) -> np.ndarray:
        starts = self.launch_points(poly, n, effort)
        logger.debug("%s: period %d from %d starts", self.name, n, starts.size)
        z = newton_periodic(poly, n, starts, max_iter=self.max_iter * effort)
        return z[np.isfinite(z)]
