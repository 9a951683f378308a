"""Escape-rate (Green's) function and the Böttcher coordinate near infinity."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.dynamics.types import Number, as_complex

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 500


def bailout_radius(poly: Polynomial) -> float:
    """Large enough for the asymptotic formula, small enough that P(z) stays finite."""
    d = poly.degree
    return max(poly.escape_radius ** 2, min(1e10, 10.0 ** (250.0 / d)))


@dataclass(frozen=True)
class GreenValue:
    z: complex
    value: float
    gradient: float  # |grad G|
    iterations: int
    undecided: bool = False  # no escape within the iteration budget

    @property
    def distance_estimate(self) -> float:
        """G / |grad G|, comparable to the distance to the Julia set."""
        if self.undecided or self.gradient == 0:
            return 0.0
        return self.value / self.gradient


@dataclass(frozen=True)
class GreenField:
    values: np.ndarray
    gradients: np.ndarray
    iterations: np.ndarray
    escaped: np.ndarray


def green_array(
    poly: Polynomial,
    z: np.ndarray,
    max_iter: int = DEFAULT_MAX_ITER,
) -> GreenField:
    """Vectorised G(z) = lim d^-n ln|P^n(z)| together with |grad G|."""
    d = poly.degree
    bailout = bailout_radius(poly)
    shift = math.log(abs(poly.leading)) / (d - 1)
    z = np.array(z, dtype=complex, copy=True)
    log_dz = np.zeros(z.shape)
    values = np.zeros(z.shape)
    gradients = np.zeros(z.shape)
    iterations = np.full(z.shape, max_iter, dtype=int)
    done = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(max_iter + 1):
            mag = np.abs(z)
            newly = ~done & (mag > bailout)
            if newly.any():
                log_mag = np.log(mag[newly])
                values[newly] = (log_mag + shift) / d ** k
                gradients[newly] = np.exp(log_dz[newly] - log_mag - k * math.log(d))
                iterations[newly] = k
                done |= newly
            if k == max_iter or done.all():
                break
            live = ~done
            zl = z[live]
            log_dz[live] += np.log(np.abs(poly.derivative_array(zl)))
            z[live] = poly.evaluate_array(zl)
    return GreenField(values=values, gradients=gradients, iterations=iterations, escaped=done)


def green(poly: Polynomial, z: Number, max_iter: int = DEFAULT_MAX_ITER) -> GreenValue:
    point = as_complex(z)
    field = green_array(poly, np.array([point]), max_iter=max_iter)
    return GreenValue(
        z=point,
        value=float(field.values[0]),
        gradient=float(field.gradients[0]),
        iterations=int(field.iterations[0]),
        undecided=not bool(field.escaped[0]),
    )


# ---------------------------------------------------------------------------
# Böttcher coordinate
# ---------------------------------------------------------------------------

def boettcher_scale(poly: Polynomial) -> complex:
    """b with phi(z) = b z + O(1); principal (d-1)-th root of the leading coefficient."""
    return complex(poly.leading) ** (1.0 / (poly.degree - 1))


def boettcher_array(poly: Polynomial, z: np.ndarray, max_iter: int = 200) -> np.ndarray:
    """phi(z) via the telescoping product, valid for |z| beyond the escape radius.

    phi(P(z)) = phi(z)^d and phi(z) / (b z) -> 1 at infinity.
    """
    d = poly.degree
    a = poly.leading
    limit = 10.0 ** (250.0 / d)
    z = np.array(z, dtype=complex, copy=True)
    phi = boettcher_scale(poly) * z
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(max_iter):
            live = np.abs(z) <= limit
            if not live.any():
                break
            zl = z[live]
            nxt = poly.evaluate_array(zl)
            ratio = nxt / (a * zl ** d)
            phi[live] *= ratio ** (1.0 / d ** (k + 1))
            z[live] = nxt
    return phi


def boettcher(poly: Polynomial, z: Number) -> complex:
    return complex(boettcher_array(poly, np.array([as_complex(z)]))[0])


def inverse_boettcher_far(poly: Polynomial, w: np.ndarray) -> np.ndarray:
    """phi^-1(w) to O(1/|w|); used only at very high potential."""
    d = poly.degree
    b = boettcher_scale(poly)
    offset = poly.coefficients[d - 1] / (d * poly.leading)
    return np.asarray(w, dtype=complex) / b - offset


# ---------------------------------------------------------------------------
# Connectivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConnectivityReport:
    connected: bool
    critical: tuple[GreenValue, ...]

    def to_dict(self) -> dict:
        return {
            "connected": self.connected,
            "critical_points": [
                {"point": g.z, "green": g.value, "bounded": g.undecided}
                for g in self.critical
            ],
        }


def connectivity_check(poly: Polynomial, max_iter: int = DEFAULT_MAX_ITER) -> ConnectivityReport:
    """The Julia set is connected iff every critical orbit stays bounded."""
    values = tuple(green(poly, c, max_iter=max_iter) for c in poly.critical_points())
    connected = all(g.undecided for g in values)
    if not connected:
        logger.info("critical orbit escapes; Julia set is disconnected")
    return ConnectivityReport(connected=connected, critical=values)
