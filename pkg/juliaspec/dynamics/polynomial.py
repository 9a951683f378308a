"""Polynomial maps of degree >= 2: construction, parsing, evaluation."""

from __future__ import annotations

import ast
import cmath
import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from tokenize import TokenError
from typing import Optional

import numpy as np
import sympy
from numpy.polynomial import polynomial as npoly
from sympy.polys.polyerrors import BasePolynomialError
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication_application,
    parse_expr,
    standard_transformations,
)

from juliaspec.dynamics.types import ComplexPoint, Number, as_complex
from juliaspec.errors import DegeneratePolynomialError, PolynomialSyntaxError

ZERO_TOLERANCE = 1e-12  # relative, for the leading coefficient
ZERO_FLOOR = 1e-150

_TRANSFORMATIONS = standard_transformations + (
    implicit_multiplication_application,
    convert_xor,
)
_Z = sympy.Symbol("z")


@dataclass(frozen=True)
class Polynomial:
    """P(z) = sum a_i z^i with coefficients in ascending order."""

    coefficients: tuple[complex, ...]

    def __post_init__(self) -> None:
        coeffs = [complex(a) for a in self.coefficients]
        if not all(cmath.isfinite(a) for a in coeffs):
            raise DegeneratePolynomialError("coefficients must be finite")
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if len(coeffs) < 3:
            raise DegeneratePolynomialError(
                f"degree {max(len(coeffs) - 1, 0)} < 2"
            )
        scale = max(abs(a) for a in coeffs)
        if abs(coeffs[-1]) < max(ZERO_TOLERANCE * scale, ZERO_FLOOR):
            raise DegeneratePolynomialError(
                f"leading coefficient {coeffs[-1]} is numerically zero"
            )
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> complex:
        return self.coefficients[-1]

    @cached_property
    def fingerprint(self) -> str:
        payload = repr(tuple((a.real, a.imag) for a in self.coefficients))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @cached_property
    def escape_radius(self) -> float:
        """|z| > R implies |P(z)| > |z| and the orbit escapes."""
        lower = sum(abs(a) for a in self.coefficients[:-1])
        return 2.0 * max(1.0, (1.0 + lower) / abs(self.leading))

    @cached_property
    def derivative_coefficients(self) -> tuple[complex, ...]:
        return tuple(i * a for i, a in enumerate(self.coefficients) if i > 0)

    # -- scalar evaluation ---------------------------------------------------

    def __call__(self, z: complex) -> complex:
        acc = 0j
        for a in reversed(self.coefficients):
            acc = acc * z + a
        return acc

    def derivative_at(self, z: complex) -> complex:
        acc = 0j
        for a in reversed(self.derivative_coefficients):
            acc = acc * z + a
        return acc

    # -- array evaluation ----------------------------------------------------

    def evaluate_array(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        with np.errstate(over="ignore", invalid="ignore"):
            for a in reversed(self.coefficients):
                acc = acc * z + a
        return acc

    def derivative_array(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        with np.errstate(over="ignore", invalid="ignore"):
            for a in reversed(self.derivative_coefficients):
                acc = acc * z + a
        return acc

    # -- derived maps --------------------------------------------------------

    def conjugate(self, a: complex, b: complex = 0j) -> Polynomial:
        """Return Q = h^-1 o P o h for the affine map h(z) = a z + b."""
        a, b = complex(a), complex(b)
        if a == 0:
            raise DegeneratePolynomialError("conjugating map must have a != 0")
        composed = np.zeros(1, dtype=complex)
        for coef in reversed(self.coefficients):
            composed = npoly.polyadd(npoly.polymul(composed, [b, a]), [coef])
        composed = npoly.polysub(composed, [b]) / a
        return Polynomial(tuple(complex(c) for c in composed))

    def critical_points(self) -> tuple[complex, ...]:
        roots = np.roots(list(reversed(self.derivative_coefficients)))
        return tuple(sorted((complex(r) for r in roots), key=lambda w: (w.real, w.imag)))

    def __str__(self) -> str:
        return format_polynomial(self)


def evaluate(poly: Polynomial, z: Number) -> ComplexPoint:
    """P(z) as a ComplexPoint; `escaped` is set when the value overflowed."""
    try:
        value = poly(as_complex(z))
    except OverflowError:
        return ComplexPoint(math.inf, math.inf, True)
    return ComplexPoint.of(value)


# ---------------------------------------------------------------------------
# Parsing and formatting
# ---------------------------------------------------------------------------

def parse_complex(text: str) -> complex:
    """Parse 're,im' or a complex literal such as '0.3+0.1i'."""
    text = text.strip()
    if "," in text:
        re_part, im_part = text.split(",", 1)
        try:
            return complex(float(re_part), float(im_part))
        except ValueError as exc:
            raise PolynomialSyntaxError(f"cannot parse complex value {text!r}") from exc
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise PolynomialSyntaxError(f"cannot parse complex value {text!r}") from exc


def _parse_bindings(text: str) -> dict[str, complex]:
    bindings: dict[str, complex] = {}
    for item in text.split(";"):
        if not item.strip():
            continue
        if "=" not in item:
            raise PolynomialSyntaxError(f"expected name=value, got {item.strip()!r}")
        name, value = item.split("=", 1)
        bindings[name.strip()] = parse_complex(value)
    return bindings


def parse_polynomial(text: str, c: Optional[complex] = None) -> Polynomial:
    """Parse a polynomial literal.

    Accepted forms: an ascending coefficient list such as '[-2, 0, 1]', or an
    expression in z such as 'z^2 - 2' or '2z^3 + (0.3+0.1i)z'. Parameters
    may be bound after a semicolon: 'z^2 + c; c = 0.25,0'.
    """
    text = text.strip()
    if not text:
        raise PolynomialSyntaxError("empty polynomial")
    if text.startswith("["):
        try:
            values = ast.literal_eval(text)
            return Polynomial(tuple(complex(v) for v in values))
        except (ValueError, SyntaxError, TypeError) as exc:
            raise PolynomialSyntaxError(f"bad coefficient list {text!r}") from exc

    expr_text, _, binding_text = text.partition(";")
    bindings = _parse_bindings(binding_text)
    if c is not None:
        bindings.setdefault("c", complex(c))
    local = {"z": _Z, "i": sympy.I}
    local.update({name: sympy.sympify(value) for name, value in bindings.items()})
    try:
        expr = parse_expr(expr_text, local_dict=local, transformations=_TRANSFORMATIONS)
        poly = sympy.Poly(sympy.expand(expr), _Z)
    except (sympy.SympifyError, SyntaxError, TypeError, TokenError, BasePolynomialError) as exc:
        raise PolynomialSyntaxError(f"cannot parse polynomial {expr_text!r}") from exc
    if poly.free_symbols - {_Z}:
        names = ", ".join(sorted(str(s) for s in poly.free_symbols - {_Z}))
        raise PolynomialSyntaxError(f"unbound parameter(s): {names}")
    coeffs = [complex(sympy.N(a, 30)) for a in reversed(poly.all_coeffs())]
    return Polynomial(tuple(coeffs))


def _format_coefficient(a: complex) -> str:
    if a.imag == 0:
        return f"{a.real:g}"
    return f"({a.real:g}{a.imag:+g}i)"


def format_polynomial(poly: Polynomial) -> str:
    """Format like 'z^2 - 2'; complex coefficients are parenthesised."""
    terms: list[str] = []
    for power in range(poly.degree, -1, -1):
        a = poly.coefficients[power]
        if a == 0:
            continue
        sign = "+"
        if a.imag == 0 and a.real < 0:
            sign, a = "-", -a
        monomial = "" if power == 0 else ("z" if power == 1 else f"z^{power}")
        coef = _format_coefficient(a)
        if monomial and coef == "1":
            body = monomial
        elif monomial:
            body = f"{coef}*{monomial}"
        else:
            body = coef
        terms.append(f"{sign} {body}")
    text = " ".join(terms)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]
