from __future__ import annotations

import abc

import numpy as np

from juliaspec.dynamics.polynomial import Polynomial


class PeriodicSolver(abc.ABC):
    @abc.abstractmethod
    def find_candidates(self, poly: Polynomial, n: int, effort: int = 1) -> np.ndarray:
        """Return approximate solutions of P^n(z) = z.

        `effort` scales the work spent; escalation calls it with larger values.
        Candidates may repeat and may include stragglers; callers validate.
        """

    @property
    def name(self) -> str:
        return self.__class__.__name__
