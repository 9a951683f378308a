"""Continued fractions of rotation numbers and Brjuno sums."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath
import numpy as np
import sympy

from juliaspec.errors import DomainError, ValidationError

logger = logging.getLogger(__name__)

DIVERGENCE_THRESHOLD = 50.0
TAIL_TOLERANCE = 1e-6
DECAY_RATIO = 0.9
DECAY_WINDOW = 5
RATIONAL_CAP = 10 ** 6
RATIONAL_TOLERANCE = 1e-9
RATIONAL_KAPPA = 1e-3
MAX_DEPTH = 60
DEFAULT_DPS = 60
FLOAT_ERROR = 2.0 ** -52

Alpha = Union[Fraction, float, int, "mpmath.mpf"]


class BrjunoFlag(enum.Enum):
    CONVERGENT = "brjuno-convergent"
    DIVERGENT = "brjuno-divergent"
    UNDECIDED = "undecided"
    ROOT_OF_UNITY = "root-of-unity"

    def __str__(self) -> str:
        return self.value


def parse_alpha(text: str, dps: int = DEFAULT_DPS) -> Alpha:
    """'3/7' and '0.125' stay exact; other expressions ('(sqrt(5)-1)/2') become mpf."""
    text = text.strip()
    try:
        return Fraction(text)
    except ValueError:
        pass
    try:
        expr = sympy.sympify(text.replace("^", "**"))
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValidationError(f"cannot parse rotation number {text!r}") from exc
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    if not (expr.is_number and expr.is_real):
        raise DomainError(f"rotation number must be real, got {text!r}")
    with mpmath.workdps(dps):
        return mpmath.mpf(sympy.N(expr, dps + 10))


def liouville_number(exponents: Sequence[int], base: int = 10) -> Fraction:
    """sum base^-e over the exponents, exactly."""
    return sum((Fraction(1, base ** e) for e in exponents), Fraction(0))


def rational_approximation(
    alpha: float,
    max_denominator: int = RATIONAL_CAP,
    tol: float = RATIONAL_TOLERANCE,
    kappa: float = RATIONAL_KAPPA,
) -> Optional[Fraction]:
    """p/q with q <= max_denominator and |alpha - p/q| <= min(tol, kappa/q^2), if any."""
    guess = Fraction(alpha).limit_denominator(max_denominator)
    gap = abs(float(Fraction(alpha) - guess))
    if gap <= min(tol, kappa / guess.denominator ** 2):
        return guess
    return None


# ---------------------------------------------------------------------------
# Gauss map
# ---------------------------------------------------------------------------

def _gauss_exact(x: Fraction, depth: int) -> tuple[list[int], bool]:
    quotients: list[int] = []
    while len(quotients) < depth and x != 0:
        y = 1 / x
        a = math.floor(y)
        quotients.append(a)
        x = y - a
    return quotients, x == 0


def _gauss_mp(x, depth: int, error: float, dps: int) -> tuple[list[int], Optional[int]]:
    """Quotients while the floor stays unambiguous given the propagated error."""
    quotients: list[int] = []
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        err = mpmath.mpf(error)
        while len(quotients) < depth:
            if x == 0:
                return quotients, None
            y = 1 / x
            err = err / (x * x)
            a = int(mpmath.floor(y))
            frac = y - a
            if err >= min(frac, 1 - frac) or err > TAIL_TOLERANCE:
                return quotients, len(quotients) + 1
            quotients.append(a)
            x = frac
    return quotients, None


def convergents(quotients: Sequence[int]) -> tuple[list[int], list[int]]:
    """p_n, q_n for n = 1..N of [0; a_1, ..., a_N]."""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    ps, qs = [], []
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        ps.append(p)
        qs.append(q)
    return ps, qs


def _brjuno_term(q_next: int, q: int) -> float:
    """ln(q_next) / q for arbitrarily large integers."""
    if q_next <= 1:
        return 0.0
    return math.exp(math.log(math.log(q_next)) - math.log(q))


# ---------------------------------------------------------------------------
# Rotation data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotationData:
    alpha: float
    partial_quotients: tuple[int, ...]
    numerators: tuple[int, ...]
    denominators: tuple[int, ...]
    brjuno_sums: tuple[float, ...]
    flag: BrjunoFlag
    rational: Optional[Fraction] = None
    terminated: bool = False  # the continued fraction ended exactly
    precision_limited_at: Optional[int] = None
    thresholds: dict = field(default_factory=dict)

    @property
    def continued_fraction(self) -> tuple[int, ...]:
        return (0,) + self.partial_quotients

    @property
    def depth(self) -> int:
        return len(self.partial_quotients)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "partial_quotients": list(self.partial_quotients),
            "denominators": list(self.denominators),
            "brjuno_sums": list(self.brjuno_sums),
            "flag": str(self.flag),
            "rational": None if self.rational is None else f"{self.rational.numerator}/{self.rational.denominator}",
            "terminated": self.terminated,
            "precision_limited_at": self.precision_limited_at,
            "thresholds": dict(self.thresholds),
        }


def _decide(sums: list[float], divergence: float, tail_tol: float, decay: float) -> BrjunoFlag:
    if sums and sums[-1] > divergence:
        return BrjunoFlag.DIVERGENT
    increments = np.diff([0.0] + sums)[-DECAY_WINDOW:]
    if increments.size < DECAY_WINDOW or np.any(increments <= 0):
        return BrjunoFlag.UNDECIDED
    ratio = float(np.exp(np.polyfit(np.arange(DECAY_WINDOW), np.log(increments), 1)[0]))
    tail = float(increments[-1]) * ratio / (1 - ratio) if ratio < 1 else math.inf
    if ratio < decay and tail < tail_tol:
        return BrjunoFlag.CONVERGENT
    return BrjunoFlag.UNDECIDED


def brjuno_data(
    alpha: Alpha,
    depth: int = 40,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
    tail_tolerance: float = TAIL_TOLERANCE,
    decay_ratio: float = DECAY_RATIO,
    rational_cap: int = RATIONAL_CAP,
    dps: int = DEFAULT_DPS,
) -> RotationData:
    """Continued fraction of alpha mod 1 with Brjuno partial sums and a flag.

    Fractions are expanded exactly. Floats and mpf values go through the Gauss
    map in mpmath with the input error propagated; expansion stops with
    `precision_limited_at` set once a quotient is no longer determined.
    """
    if not 1 <= depth <= MAX_DEPTH:
        raise ValidationError(f"depth must be in 1..{MAX_DEPTH}, got {depth}")
    thresholds = {
        "divergence": divergence_threshold,
        "tail": tail_tolerance,
        "decay_ratio": decay_ratio,
        "rational_cap": rational_cap,
    }
    rational: Optional[Fraction] = None
    limited: Optional[int] = None
    if isinstance(alpha, (Fraction, int)):
        exact = Fraction(alpha) % 1
        quotients, terminated = _gauss_exact(exact, depth)
        if exact.denominator <= rational_cap:
            rational = exact
        value = float(exact)
    else:
        if isinstance(alpha, float):
            approx = rational_approximation(alpha % 1.0, rational_cap)
            if approx is not None:
                return brjuno_data(approx, depth, divergence_threshold, tail_tolerance, decay_ratio, rational_cap, dps)
            error = FLOAT_ERROR
        else:
            error = 10.0 ** (-dps + 2)
        with mpmath.workdps(dps):
            reduced = mpmath.mpf(alpha) % 1
            value = float(reduced)
        quotients, limited = _gauss_mp(reduced, depth, error, dps)
        terminated = False
        if limited is not None:
            logger.info("continued fraction of %.17g precision-limited at depth %d", value, limited)

    numerators, denominators = convergents(quotients)
    qs = [1] + denominators
    sums: list[float] = []
    running = 0.0
    for n in range(len(denominators)):
        running += _brjuno_term(qs[n + 1], qs[n])
        sums.append(running)

    if rational is not None:
        flag = BrjunoFlag.ROOT_OF_UNITY
    elif terminated:
        flag = BrjunoFlag.DIVERGENT if sums and sums[-1] > divergence_threshold else BrjunoFlag.UNDECIDED
    else:
        flag = _decide(sums, divergence_threshold, tail_tolerance, decay_ratio)
    return RotationData(
        alpha=value,
        partial_quotients=tuple(quotients),
        numerators=tuple(numerators),
        denominators=tuple(denominators),
        brjuno_sums=tuple(sums),
        flag=flag,
        rational=rational,
        terminated=terminated,
        precision_limited_at=limited,
        thresholds=thresholds,
    )
