"""Cross-check of multiplier growth against the omega_n lower bound of a preimage tree."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from juliaspec.errors import FingerprintMismatchError, ValidationError
from juliaspec.spectrum.orbits import GrowthReport, MultiplierSpectrum, growth_check
from juliaspec.tree.preimage import (
    RAABE_MARGIN,
    RATIO_MARGIN,
    PreimageTree,
    SummabilityReport,
    check_same_polynomial,
    summability_report,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineReport:
    epsilon: float
    exponent: float  # 1 + eps/3
    growth: GrowthReport
    summability: SummabilityReport
    ratios: dict[int, Optional[float]]  # omega_n / n^exponent
    best_constant: Optional[float]  # C2*
    best_depth: Optional[int]

    @property
    def consistent(self) -> bool:
        """Both constants positive on the tested range."""
        return self.growth.holds and bool(self.best_constant) and self.best_constant > 0

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "omega_exponent": self.exponent,
            "c_star": self.growth.best_constant,
            "c2_star": self.best_constant,
            "c2_star_depth": self.best_depth,
            "omega_ratios": {str(n): r for n, r in sorted(self.ratios.items())},
            "growth": self.growth.to_dict(),
            "summability": self.summability.to_dict(),
            "consistent_on_tested_range": self.consistent,
        }


def theorem_pipeline_report(
    spectrum: MultiplierSpectrum,
    tree: PreimageTree,
    epsilon: float,
    growth: Optional[GrowthReport] = None,
    ratio_margin: float = RATIO_MARGIN,
    raabe_margin: float = RAABE_MARGIN,
) -> PipelineReport:
    """C* from the spectrum next to C2* = min_n omega_n / n^(1+eps/3) from the tree."""
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    if spectrum.degree != tree.degree:
        raise FingerprintMismatchError(
            f"spectrum has degree {spectrum.degree}, tree has degree {tree.degree}"
        )
    check_same_polynomial(tree, spectrum.fingerprint)
    if growth is None:
        growth = growth_check(spectrum, epsilon)
    exponent = 1.0 + epsilon / 3.0
    ratios: dict[int, Optional[float]] = {}
    for level in tree.levels[1:]:
        w = level.omega
        ratios[level.depth] = w / level.depth ** exponent if w > 0 else None

    finite = {n: r for n, r in ratios.items() if r is not None}
    best_depth = min(finite, key=lambda n: (finite[n], n)) if finite else None
    best = finite[best_depth] if best_depth is not None else None
    logger.info(
        "C*=%.6g at n=%d, C2*=%s",
        growth.best_constant,
        growth.best_period,
        "n/a" if best is None else f"{best:.6g}",
    )
    return PipelineReport(
        epsilon=epsilon,
        exponent=exponent,
        growth=growth,
        summability=summability_report(tree.levels, ratio_margin, raabe_margin),
        ratios=ratios,
        best_constant=best,
        best_depth=best_depth,
    )
