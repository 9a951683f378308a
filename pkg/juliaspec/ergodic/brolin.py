"""Random backward iteration toward the balanced measure, and the Lyapunov
exponent, dimension ratio and Ruelle bound estimated from its samples."""

from __future__ import annotations

import cmath
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.dynamics.types import Number, as_complex
from juliaspec.errors import ExceptionalPointError, InsufficientDataError, ValidationError
from juliaspec.tree.preimage import preimages

logger = logging.getLogger(__name__)

DEFAULT_BURN = 200
MIN_BURN = 50
MIN_SAMPLES = 10_000
BATCHES = 32


def _quadratic_step(poly: Polynomial):
    c, b, a = poly.coefficients

    def step(z: complex, choice: int) -> complex:
        root = cmath.sqrt(b * b - 4 * a * (c - z))
        return (-b + root) / (2 * a) if choice == 0 else (-b - root) / (2 * a)

    return step


def _general_step(poly: Polynomial):
    def step(z: complex, choice: int) -> complex:
        return preimages(poly, z)[choice]

    return step


def brolin_sample(
    poly: Polynomial,
    z0: Number,
    burn: int = DEFAULT_BURN,
    count: int = 100_000,
    seed: int = 0,
) -> np.ndarray:
    """A random backward orbit of z0, the first `burn` points discarded.

    Each step picks one of the d preimages uniformly, a double preimage
    counting twice.
    """
    if burn < MIN_BURN:
        raise ValidationError(f"burn must be >= {MIN_BURN}, got {burn}")
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    z = as_complex(z0)
    first = preimages(poly, z)
    if all(abs(w - z) <= 1e-12 * (1 + abs(z)) for w in first):
        raise ExceptionalPointError(f"{z} is its own only preimage")

    d = poly.degree
    step = _quadratic_step(poly) if d == 2 else _general_step(poly)
    choices = np.random.default_rng(seed).integers(0, d, size=burn + count)
    out = np.empty(count, dtype=complex)
    for k, choice in enumerate(choices.tolist()):
        z = step(z, choice)
        if k >= burn:
            out[k - burn] = z
    return out


@dataclass(frozen=True)
class ErgodicEstimate:
    chi: float
    stderr: float
    h_ref: float
    hd_ratio: float
    samples: int
    seeds: tuple[int, ...] = ()
    excluded: int = 0  # samples with P'(z) = 0

    def to_dict(self) -> dict:
        return {
            "chi": self.chi,
            "stderr": self.stderr,
            "h_ref": self.h_ref,
            "hd_ratio": self.hd_ratio,
            "samples": self.samples,
            "seeds": list(self.seeds),
            "excluded": self.excluded,
        }


def _log_derivatives(poly: Polynomial, samples: np.ndarray) -> tuple[np.ndarray, int]:
    deriv = np.abs(poly.derivative_array(np.asarray(samples, dtype=complex)))
    keep = deriv > 0
    return np.log(deriv[keep]), int((~keep).sum())


def _batch_means(values: np.ndarray, batches: int = BATCHES) -> np.ndarray:
    return np.array([chunk.mean() for chunk in np.array_split(values, batches)])


def _make_estimate(
    poly: Polynomial,
    chi: float,
    stderr: float,
    samples: int,
    seeds: tuple[int, ...],
    excluded: int,
) -> ErgodicEstimate:
    h_ref = math.log(poly.degree)
    if chi < h_ref / 2:
        logger.warning("chi = %.6g is below h/2 = %.6g; sampler may be broken", chi, h_ref / 2)
    return ErgodicEstimate(
        chi=chi,
        stderr=stderr,
        h_ref=h_ref,
        hd_ratio=h_ref / chi if chi > 0 else math.inf,
        samples=samples,
        seeds=seeds,
        excluded=excluded,
    )


def lyapunov_estimate(
    poly: Polynomial,
    samples: Sequence[complex] | np.ndarray,
    seeds: tuple[int, ...] = (),
    min_samples: int = MIN_SAMPLES,
) -> ErgodicEstimate:
    """chi = mean ln|P'| with a 32-batch-means standard error."""
    samples = np.asarray(samples, dtype=complex)
    if samples.size < min_samples:
        raise InsufficientDataError(f"need at least {min_samples} samples, got {samples.size}")
    logs, excluded = _log_derivatives(poly, samples)
    if excluded:
        logger.info("excluded %d samples on a critical point", excluded)
    means = _batch_means(logs)
    stderr = float(means.std(ddof=1) / math.sqrt(means.size))
    return _make_estimate(poly, float(logs.mean()), stderr, int(samples.size), seeds, excluded)


# ---------------------------------------------------------------------------
# Independent streams
# ---------------------------------------------------------------------------

def _stream_job(poly: Polynomial, z0: complex, burn: int, count: int, seed: int) -> tuple[int, np.ndarray, int]:
    logs, excluded = _log_derivatives(poly, brolin_sample(poly, z0, burn=burn, count=count, seed=seed))
    return seed, _batch_means(logs), excluded


def lyapunov_streams(
    poly: Polynomial,
    z0: Number,
    seeds: Sequence[int],
    burn: int = DEFAULT_BURN,
    count: int = 100_000,
    workers: int = 1,
) -> ErgodicEstimate:
    """Pool equal-length streams; the estimate is independent of worker count."""
    if not seeds:
        raise ValidationError("need at least one seed")
    if count * len(seeds) < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples in total")
    z0 = as_complex(z0)
    results: dict[int, tuple[np.ndarray, int]] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_stream_job, poly, z0, burn, count, s) for s in seeds]
            for future in as_completed(futures):
                seed, means, excluded = future.result()
                results[seed] = (means, excluded)
    else:
        for s in seeds:
            seed, means, excluded = _stream_job(poly, z0, burn, count, s)
            results[seed] = (means, excluded)

    # Stream order fixed by the seed list, not by completion.
    means = np.concatenate([results[s][0] for s in seeds])
    excluded = sum(results[s][1] for s in seeds)
    stderr = float(means.std(ddof=1) / math.sqrt(means.size))
    return _make_estimate(
        poly, float(means.mean()), stderr, count * len(seeds), tuple(seeds), excluded
    )


# ---------------------------------------------------------------------------
# Ruelle inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RuelleVerdict:
    passed: bool
    margin: float  # chi - h/2

    def to_dict(self) -> dict:
        return {"pass": self.passed, "margin": self.margin}


def ruelle_check(estimate: ErgodicEstimate) -> RuelleVerdict:
    """PASS iff chi + 3 stderr >= h/2."""
    half = estimate.h_ref / 2
    return RuelleVerdict(
        passed=estimate.chi + 3 * estimate.stderr >= half,
        margin=estimate.chi - half,
    )
