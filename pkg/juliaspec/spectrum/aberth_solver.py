"""Aberth–Ehrlich simultaneous iteration for all d^n roots of P^n(z) - z."""

from __future__ import annotations

import logging

import numpy as np

from juliaspec.dynamics.orbit import iterate_array
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.spectrum.base import PeriodicSolver
from juliaspec.spectrum.newton_solver import seed_points

logger = logging.getLogger(__name__)

CHUNK_ROWS = 512


def repulsion(z: np.ndarray, others: np.ndarray, skip_self: bool) -> np.ndarray:
    """sum_j 1/(z_k - others_j), skipping j == k when both arrays coincide."""
    out = np.empty(z.shape, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(0, z.size, CHUNK_ROWS):
            block = z[start:start + CHUNK_ROWS, None] - others[None, :]
            inv = 1.0 / block
            if skip_self:
                rows = np.arange(block.shape[0])
                inv[rows, start + rows] = 0
            inv[~np.isfinite(inv)] = 0
            out[start:start + CHUNK_ROWS] = inv.sum(axis=1)
    return out


class AberthSolver(PeriodicSolver):
    def __init__(self, max_iter: int = 300, tol: float = 1e-14, seed: int = 0) -> None:
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    @property
    def name(self) -> str:
        return "aberth"

    def initial_guesses(self, poly: Polynomial, n: int, effort: int = 1) -> np.ndarray:
        z = seed_points(poly, n)
        if effort > 1:
            rng = np.random.default_rng(self.seed + effort)
            spread = 1e-3 * poly.escape_radius * effort
            z = z + spread * (rng.standard_normal(z.size) + 1j * rng.standard_normal(z.size))
        return z

    def find_candidates(self, poly: Polynomial, n: int, effort: int = 1) -> np.ndarray:
        z = self.initial_guesses(poly, n, effort)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for it in range(self.max_iter * effort):
                w, dw = iterate_array(poly, z, n)
                ratio = (w - z) / (dw - 1)
                corr = ratio / (1 - ratio * repulsion(z, z, skip_self=True))
                corr = np.where(np.isfinite(corr), corr, 0)
                z = z - corr
                if np.all(np.abs(corr) <= self.tol * (1 + np.abs(z))):
                    logger.debug("aberth: period %d converged after %d sweeps", n, it + 1)
                    break
        return z[np.isfinite(z)]
