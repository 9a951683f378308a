"""Backward orbits: preimage solves, the preimage tree and its summability report."""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from juliaspec.boettcher.green import green
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.dynamics.types import Number, as_complex
from juliaspec.errors import (
    BasePointError,
    BudgetExceededError,
    FingerprintMismatchError,
    InsufficientDataError,
    RootSolverError,
)

logger = logging.getLogger(__name__)

DEFAULT_TREE_BUDGET = 2 ** 16
MIN_BASE_GREEN = 1e-6
RESIDUAL_TOLERANCE = 1e-10
RATIO_MARGIN = 1e-3
RAABE_MARGIN = 0.1
POLISH_STEPS = 3


# ---------------------------------------------------------------------------
# Preimage solves
# ---------------------------------------------------------------------------

def _quadratic_roots(poly: Polynomial, w: np.ndarray) -> np.ndarray:
    c, b, a = poly.coefficients
    disc = np.sqrt(b * b - 4 * a * (c - w))
    # Pick the sign that avoids cancellation in -b -/+ sqrt(disc).
    flip = (np.conj(b) * disc).real < 0
    disc = np.where(flip, -disc, disc)
    q = -0.5 * (b + disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = q / a
        second = np.where(q != 0, (c - w) / q, -b / (2 * a))
    return np.stack([first, second], axis=-1)


def _companion_roots(poly: Polynomial, w: np.ndarray) -> np.ndarray:
    d = poly.degree
    monic = np.array(poly.coefficients[:-1], dtype=complex) / poly.leading
    mats = np.zeros((w.size, d, d), dtype=complex)
    mats[:, 1:, :-1] = np.eye(d - 1)
    mats[:, :, -1] = -monic
    mats[:, 0, -1] = -(monic[0] - w / poly.leading)
    return np.linalg.eigvals(mats)


def preimages_array(poly: Polynomial, w: np.ndarray) -> np.ndarray:
    """All d solutions of P(z) = w for every w; shape (len(w), d).

    Each row is sorted by argument. Raises RootSolverError naming the first
    target whose residual cannot be brought below tolerance.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if poly.degree == 2:
        roots = _quadratic_roots(poly, w)
    else:
        roots = _companion_roots(poly, w)
    target = w[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(POLISH_STEPS):
            deriv = poly.derivative_array(roots)
            step = (poly.evaluate_array(roots) - target) / deriv
            roots = np.where(np.isfinite(step) & (deriv != 0), roots - step, roots)
    residual = np.abs(poly.evaluate_array(roots) - target)
    bad = ~(residual <= RESIDUAL_TOLERANCE * (1 + np.abs(target)))
    if bad.any():
        row = int(np.flatnonzero(bad.any(axis=1))[0])
        raise RootSolverError(complex(w[row]), float(residual[row].max()))
    order = np.argsort(np.angle(roots), axis=1, kind="stable")
    return np.take_along_axis(roots, order, axis=1)


def preimages(poly: Polynomial, w: Number) -> list[complex]:
    return [complex(z) for z in preimages_array(poly, np.array([as_complex(w)]))[0]]


# ---------------------------------------------------------------------------
# Preimage tree
# ---------------------------------------------------------------------------

class PreimageNode(NamedTuple):
    point: complex
    log_derivative: float  # ln|(P^n)'(point)|
    parent: int  # index into the previous level; -1 at the root


@dataclass(eq=False)
class PreimageLevel:
    depth: int
    points: np.ndarray
    log_derivatives: np.ndarray
    parents: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[PreimageNode]:
        for z, ld, p in zip(self.points, self.log_derivatives, self.parents):
            yield PreimageNode(complex(z), float(ld), int(p))

    @property
    def min_log_derivative(self) -> float:
        return float(self.log_derivatives.min())

    @property
    def omega(self) -> float:
        """min |(P^n)'| over the level."""
        low = self.min_log_derivative
        return 0.0 if low == -math.inf else math.exp(low)


@dataclass(eq=False)
class PreimageTree(Sequence):
    fingerprint: str
    degree: int
    base_point: complex
    base_green: float
    levels: list[PreimageLevel] = field(default_factory=list)

    def __getitem__(self, index):
        return self.levels[index]

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


def build_tree(
    poly: Polynomial,
    w0: Number,
    n_max: int,
    budget: int = DEFAULT_TREE_BUDGET,
    min_green: float = MIN_BASE_GREEN,
) -> PreimageTree:
    """Levels 0..n_max of the backward orbit of w0; level n has d^n nodes."""
    d = poly.degree
    if n_max < 0:
        raise InsufficientDataError(f"tree depth must be >= 0, got {n_max}")
    if d ** n_max > budget:
        raise BudgetExceededError("preimage tree level size", d ** n_max, budget)
    base = as_complex(w0)
    g = green(poly, base)
    if g.undecided or g.value < min_green:
        raise BasePointError(
            f"base point {base} has G = {g.value:.3e} < {min_green:g}; choose a point outside K"
        )

    levels = [
        PreimageLevel(
            depth=0,
            points=np.array([base]),
            log_derivatives=np.zeros(1),
            parents=np.array([-1]),
        )
    ]
    for depth in range(1, n_max + 1):
        prev = levels[-1]
        children = preimages_array(poly, prev.points).reshape(-1)
        parents = np.repeat(np.arange(len(prev)), d)
        with np.errstate(divide="ignore"):
            local = np.log(np.abs(poly.derivative_array(children)))
        levels.append(
            PreimageLevel(
                depth=depth,
                points=children,
                log_derivatives=local + prev.log_derivatives[parents],
                parents=parents,
            )
        )
        logger.debug("tree level %d: %d nodes, omega=%.6g", depth, len(children), levels[-1].omega)
    return PreimageTree(
        fingerprint=poly.fingerprint,
        degree=d,
        base_point=base,
        base_green=g.value,
        levels=levels,
    )


# ---------------------------------------------------------------------------
# Summability
# ---------------------------------------------------------------------------

class Verdict(enum.Enum):
    SATISFIED = "satisfied"
    NOT_SATISFIED = "not-satisfied"
    INAPPLICABLE = "inapplicable"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SummabilityReport:
    omegas: tuple[Optional[float], ...]  # index 0 is depth 1; None where omega = 0
    partial_sums: tuple[Optional[float], ...]
    tail_ratios: tuple[Optional[float], ...]  # omega_n / omega_(n+1)
    envelope: tuple[Optional[float], ...]  # min over m >= n
    violations: tuple[int, ...]  # depths n with omega_(n+1) < omega_n
    raabe: tuple[Optional[float], ...]
    verdict: Verdict
    rule: str
    inapplicable: tuple[int, ...] = ()  # depths with omega = 0

    def to_dict(self) -> dict:
        return {
            "omega": list(self.omegas),
            "partial_sums": list(self.partial_sums),
            "tail_ratios": list(self.tail_ratios),
            "monotone_envelope": list(self.envelope),
            "monotonicity_violations": list(self.violations),
            "raabe": list(self.raabe),
            "inapplicable_levels": list(self.inapplicable),
            "verdict": str(self.verdict),
            "rule": self.rule,
        }


def summability_from_omegas(
    omegas: Sequence[float],
    ratio_margin: float = RATIO_MARGIN,
    raabe_margin: float = RAABE_MARGIN,
) -> SummabilityReport:
    """Summability of sum 1/omega_n for omega_1..omega_N (depth 0 excluded).

    The tail ratios must stay below 1 - ratio_margin and the Raabe values
    n(omega_(n+1)/omega_n - 1) above 1 + raabe_margin on the last third of
    the levels. Ratios alone accept omega_n = n at any reachable depth.
    """
    n = len(omegas)
    if n < 3:
        raise InsufficientDataError(f"need at least 3 levels beyond the root, got {n}")
    values: list[Optional[float]] = [w if w > 0 else None for w in omegas]

    sums: list[Optional[float]] = []
    running: Optional[float] = 0.0
    for w in values:
        running = None if (w is None or running is None) else running + 1.0 / w
        sums.append(running)

    ratios: list[Optional[float]] = []
    raabe: list[Optional[float]] = []
    for k in range(n - 1):
        a, b = values[k], values[k + 1]
        if a is None or b is None:
            ratios.append(None)
            raabe.append(None)
        else:
            ratios.append(a / b)
            raabe.append((k + 1) * (b / a - 1.0))

    envelope: list[Optional[float]] = [None] * n
    low = math.inf
    for k in range(n - 1, -1, -1):
        if values[k] is None:
            low = math.inf
            continue
        low = min(low, values[k])
        envelope[k] = low

    violations = tuple(
        k + 1
        for k in range(n - 1)
        if values[k] is not None and values[k + 1] is not None and values[k + 1] < values[k]
    )

    window = max(1, math.ceil(len(ratios) / 3))
    rule = (
        f"satisfied iff max omega_n/omega_(n+1) over the last {window} ratios "
        f"is below 1 - {ratio_margin:g} and min n(omega_(n+1)/omega_n - 1) over them "
        f"exceeds 1 + {raabe_margin:g}"
    )
    if any(v is None for v in values):
        verdict = Verdict.INAPPLICABLE
        logger.info("omega_n vanishes at some depth; summability inapplicable")
    elif (
        max(ratios[-window:]) < 1.0 - ratio_margin
        and min(raabe[-window:]) > 1.0 + raabe_margin
    ):
        verdict = Verdict.SATISFIED
    else:
        verdict = Verdict.NOT_SATISFIED
    return SummabilityReport(
        omegas=tuple(values),
        partial_sums=tuple(sums),
        tail_ratios=tuple(ratios),
        envelope=tuple(envelope),
        violations=violations,
        raabe=tuple(raabe),
        verdict=verdict,
        rule=rule,
        inapplicable=tuple(k + 1 for k, w in enumerate(values) if w is None),
    )


def summability_report(
    levels: Sequence[PreimageLevel],
    ratio_margin: float = RATIO_MARGIN,
    raabe_margin: float = RAABE_MARGIN,
) -> SummabilityReport:
    return summability_from_omegas(
        [lvl.omega for lvl in levels if lvl.depth >= 1], ratio_margin, raabe_margin
    )


def check_same_polynomial(tree: PreimageTree, fingerprint: str) -> None:
    if tree.fingerprint != fingerprint:
        raise FingerprintMismatchError(
            f"tree built for {tree.fingerprint}, spectrum for {fingerprint}"
        )
