"""Numerical checks of the identities satisfied by psi: functional equation,
deck periodicity, the chain-rule identity and the fourth-power distortion bound."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from juliaspec.boettcher.rays import T_MIN, HalfPlanePoint, psi_array
from juliaspec.dynamics.orbit import iterate_with_derivative
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.errors import (
    DomainError,
    FiniteDifferenceError,
    OverflowRangeError,
    RayDivergenceError,
    ValidationError,
)

logger = logging.getLogger(__name__)

DERIVATIVE_STEP = 1e-5  # relative to Im(t)
IDENTITY_TOLERANCE = 1e-4
IDENTITY_MIN_IM = 0.05
FUNCTIONAL_TOLERANCE = 1e-6
MAX_POTENTIAL = 300.0
DISTORTION_POWER = 4
MIN_DISTORTION_SAMPLES = 100


def psi_derivative(
    poly: Polynomial,
    ts: list[HalfPlanePoint],
    step: float = DERIVATIVE_STEP,
    t_min: float = T_MIN,
) -> np.ndarray:
    """psi'(t) by central differences along the real direction, h = step * Im(t)."""
    probes: list[HalfPlanePoint] = []
    for t in ts:
        h = Fraction(step * t.im)
        probes += [t.shifted(h), t.shifted(-h)]
    try:
        values = psi_array(poly, probes, t_min=t_min)
    except RayDivergenceError as exc:
        raise FiniteDifferenceError(f"finite-difference sample failed: {exc}") from exc
    plus, minus = values[0::2], values[1::2]
    widths = np.array([2 * float(Fraction(step * t.im)) for t in ts])
    return (plus - minus) / widths


# ---------------------------------------------------------------------------
# Chain-rule identity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    t: HalfPlanePoint
    n: int
    lhs: complex  # (P^n)'(psi(t)) * psi'(t)
    rhs: complex  # d^n * psi'(d^n t)
    residual: float
    richardson: float  # relative change of psi' when the step is halved

    @property
    def passed(self) -> bool:
        return self.residual <= IDENTITY_TOLERANCE

    def to_dict(self) -> dict:
        return {
            "t": [float(self.t.re), self.t.im],
            "n": self.n,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "richardson": self.richardson,
            "verdict": "PASS" if self.passed else "FAIL",
        }


def verify_derivative_identity(
    poly: Polynomial,
    t: Union[complex, HalfPlanePoint],
    n: int,
    step: float = DERIVATIVE_STEP,
) -> IdentityReport:
    """Check (P^n)'(psi(t)) psi'(t) = d^n psi'(d^n t)."""
    t = HalfPlanePoint.of(t)
    d = poly.degree
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if t.im < IDENTITY_MIN_IM:
        raise DomainError(f"Im(t) = {t.im:g} is below {IDENTITY_MIN_IM}")
    if 2 * math.pi * d ** n * t.im > MAX_POTENTIAL:
        raise OverflowRangeError(
            f"d^n Im(t) = {d ** n * t.im:g} exceeds {MAX_POTENTIAL / (2 * math.pi):.3g}"
        )
    lifted = t.scaled(d ** n)
    full = psi_derivative(poly, [t, lifted], step=step)
    half = psi_derivative(poly, [t, lifted], step=step / 2)
    base = psi_array(poly, [t])[0]
    seg = iterate_with_derivative(poly, base, n, bailout=math.inf)
    lhs = seg.derivative * complex(full[0])
    rhs = d ** n * complex(full[1])
    residual = abs(lhs - rhs) / abs(rhs)
    richardson = float(np.max(np.abs(full - half) / np.abs(full)))
    if richardson > IDENTITY_TOLERANCE:
        logger.warning("psi' unstable under step halving at t=%s (%.2e)", t, richardson)
    return IdentityReport(t=t, n=n, lhs=lhs, rhs=rhs, residual=residual, richardson=richardson)


def identity_sweep(
    poly: Polynomial,
    count: int = 50,
    seed: int = 0,
    im_range: tuple[float, float] = (IDENTITY_MIN_IM, 0.5),
) -> list[IdentityReport]:
    """The chain-rule identity at `count` random (t, n), n limited so d^n t stays in range."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    d = poly.degree
    rng = np.random.default_rng(seed)
    reports: list[IdentityReport] = []
    for _ in range(count):
        x = rng.uniform(0.0, 1.0)
        y = rng.uniform(*im_range)
        n_top = max(1, int(math.log(MAX_POTENTIAL / (2 * math.pi * y)) / math.log(d)))
        n = int(rng.integers(1, n_top + 1))
        reports.append(verify_derivative_identity(poly, HalfPlanePoint(Fraction(x), float(y)), n))
    return reports


# ---------------------------------------------------------------------------
# Functional equation and deck periodicity on a grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PsiCheckReport:
    rows: int
    cols: int
    im_range: tuple[float, float]
    functional_residuals: np.ndarray  # (rows, cols)
    deck_residuals: np.ndarray

    @property
    def max_functional(self) -> float:
        return float(self.functional_residuals.max())

    @property
    def max_deck(self) -> float:
        return float(self.deck_residuals.max())

    @property
    def passed(self) -> bool:
        return self.max_functional < FUNCTIONAL_TOLERANCE

    def to_dict(self) -> dict:
        return {
            "grid": [self.rows, self.cols],
            "im_range": list(self.im_range),
            "max_functional_residual": self.max_functional,
            "max_deck_residual": self.max_deck,
            "functional_residuals": self.functional_residuals.tolist(),
            "verdict": "PASS" if self.passed else "FAIL",
        }


def psi_check_grid(
    poly: Polynomial,
    rows: int = 16,
    cols: int = 16,
    im_range: tuple[float, float] = (IDENTITY_MIN_IM, 0.5),
) -> PsiCheckReport:
    """|P(psi(t)) - psi(d t)| / (1 + |psi(d t)|) and |psi(t+1) - psi(t)| over a grid in H."""
    if rows < 1 or cols < 1:
        raise ValidationError(f"grid must be at least 1x1, got {rows}x{cols}")
    d = poly.degree
    heights = np.linspace(im_range[0], im_range[1], rows)
    grid = [HalfPlanePoint(Fraction(j, cols), float(y)) for y in heights for j in range(cols)]
    batch = grid + [t.scaled(d) for t in grid] + [t.shifted(1) for t in grid]
    values = psi_array(poly, batch)
    size = len(grid)
    base, lifted, shifted = values[:size], values[size:2 * size], values[2 * size:]
    functional = np.abs(poly.evaluate_array(base) - lifted) / (1 + np.abs(lifted))
    deck = np.abs(shifted - base) / (1 + np.abs(base))
    return PsiCheckReport(
        rows=rows,
        cols=cols,
        im_range=(float(im_range[0]), float(im_range[1])),
        functional_residuals=functional.reshape(rows, cols),
        deck_residuals=deck.reshape(rows, cols),
    )


# ---------------------------------------------------------------------------
# Distortion probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistortionReport:
    d_hat: float
    t: HalfPlanePoint  # attaining pair
    t_prime: HalfPlanePoint
    samples: int
    rejected: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "d_hat": self.d_hat,
            "attained_at": {
                "t": [float(self.t.re), self.t.im],
                "t_prime": [float(self.t_prime.re), self.t_prime.im],
            },
            "samples": self.samples,
            "rejected": self.rejected,
            "seed": self.seed,
        }


def distortion_pairs(
    samples: int, seed: int, t_min: float = T_MIN
) -> tuple[list[tuple[float, float, float]], int]:
    """(x, h, s) with t = x + ih, t' = t + s and h <= s <= 1/2, drawn sequentially."""
    rng = np.random.default_rng(seed)
    pairs: list[tuple[float, float, float]] = []
    rejected = 0
    while len(pairs) < samples:
        h, s = rng.uniform(t_min, 0.6, size=2)
        x = rng.uniform(0.0, 1.0)
        if not (h <= s <= 0.5):
            rejected += 1
            continue
        pairs.append((float(x), float(h), float(s)))
    return pairs, rejected


def distortion_probe(
    poly: Polynomial,
    samples: int = 1000,
    seed: int = 0,
    t_min: float = T_MIN,
) -> DistortionReport:
    """Largest |psi'(t)|/|psi'(t')| * (h/s)^4 over random horizontal pairs."""
    if samples < MIN_DISTORTION_SAMPLES:
        raise ValidationError(f"need at least {MIN_DISTORTION_SAMPLES} samples, got {samples}")
    pairs, rejected = distortion_pairs(samples, seed, t_min)
    left = [HalfPlanePoint(Fraction(x), h) for x, h, _ in pairs]
    right = [t.shifted(s) for t, (_, _, s) in zip(left, pairs)]
    deriv = np.abs(psi_derivative(poly, left + right, t_min=t_min))
    ratio = deriv[:samples] / deriv[samples:]
    ratio = np.maximum(ratio, 1 / ratio)
    h = np.array([p[1] for p in pairs])
    s = np.array([p[2] for p in pairs])
    scores = ratio * (h / s) ** DISTORTION_POWER
    best = int(np.argmax(scores))
    logger.info("distortion probe: D=%.6g from %d pairs (%d rejected)", scores[best], samples, rejected)
    return DistortionReport(
        d_hat=float(scores[best]),
        t=left[best],
        t_prime=right[best],
        samples=samples,
        rejected=rejected,
        seed=seed,
    )
