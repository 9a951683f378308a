from __future__ import annotations

import cmath
import enum
import math
from typing import NamedTuple, Union

# Above this the exp() of a log-magnitude overflows a double.
MAX_LOG_ABS = 709.0


class OrbitKind(enum.Enum):
    ATTRACTING = "attracting"
    INDIFFERENT = "indifferent"
    REPELLING = "repelling"

    @classmethod
    def from_modulus(cls, modulus: float, tol: float = 1e-8) -> OrbitKind:
        if abs(modulus - 1.0) <= tol:
            return cls.INDIFFERENT
        return cls.REPELLING if modulus > 1.0 else cls.ATTRACTING

    def __str__(self) -> str:
        return self.value


class ComplexPoint(NamedTuple):
    re: float
    im: float
    escaped: bool = False  # set once a computation left the finite range

    @classmethod
    def of(cls, z: complex) -> ComplexPoint:
        if not cmath.isfinite(z):
            return cls(math.inf, math.inf, True)
        return cls(z.real, z.imag)

    def to_complex(self) -> complex:
        return complex(self.re, self.im)


Number = Union[complex, float, int, ComplexPoint]


def as_complex(z: Number) -> complex:
    if isinstance(z, ComplexPoint):
        return z.to_complex()
    return complex(z)


class LogComplex(NamedTuple):
    """A complex number stored as (ln|w|, arg w); zero has log_abs = -inf."""

    log_abs: float
    arg: float

    @classmethod
    def of(cls, w: complex) -> LogComplex:
        if w == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(w)), cmath.phase(w))

    def times(self, other: LogComplex) -> LogComplex:
        arg = math.remainder(self.arg + other.arg, 2 * math.pi)
        return LogComplex(self.log_abs + other.log_abs, arg)

    def __abs__(self) -> float:
        if self.log_abs > MAX_LOG_ABS:
            return math.inf
        return math.exp(self.log_abs)

    @property
    def finite(self) -> bool:
        return self.log_abs <= MAX_LOG_ABS

    def to_complex(self) -> complex:
        if self.log_abs == -math.inf:
            return 0j
        if not self.finite:
            return complex(math.inf, math.inf)
        return cmath.rect(math.exp(self.log_abs), self.arg)
