"""Shared result and configuration types for the evidence estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["EstimatorError", "EvidenceEstimate", "TemperatureLadder"]


class EstimatorError(RuntimeError):
    """Raised when an estimator cannot produce a finite, trustworthy value."""


@dataclass
class EvidenceEstimate:
    """A log-evidence value with its method tag and diagnostics."""

    method: str
    log_evidence: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.log_evidence):
            raise EstimatorError(
                f"{self.method} produced a non-finite log evidence: {self.log_evidence}"
            )


@dataclass(frozen=True)
class TemperatureLadder:
    """Strictly monotone sequence of temperatures spanning [0, 1].

    Ascending ladders (0 up to 1) drive thermodynamic integration;
    descending ladders (1 down to 0) drive annealing.  Both endpoints
    must be exact.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValueError("a temperature ladder needs at least two rungs")
        diffs = np.diff(vals)
        if np.all(diffs > 0):
            lo, hi = vals[0], vals[-1]
        elif np.all(diffs < 0):
            lo, hi = vals[-1], vals[0]
        else:
            raise ValueError(f"temperatures must be strictly monotone, got {vals}")
        if lo != 0.0 or hi != 1.0:
            raise ValueError(
                f"ladder endpoints must be exactly 0 and 1, got [{lo}, {hi}]"
            )

    @classmethod
    def power(cls, n_rungs: int, exponent: float = 5.0,
              descending: bool = False) -> "TemperatureLadder":
        """Rungs (i / (n_rungs - 1)) ** exponent; the power skews rungs
        toward the prior end, where the integrand changes fastest."""
        if n_rungs < 2:
            raise ValueError(f"need at least two rungs, got {n_rungs}")
        if exponent <= 0.0:
            raise ValueError(f"exponent must be positive, got {exponent}")
        grid = [(i / (n_rungs - 1)) ** exponent for i in range(n_rungs)]
        grid[0], grid[-1] = 0.0, 1.0
        if descending:
            grid.reverse()
        return cls(tuple(grid))

    @property
    def ascending(self) -> bool:
        return self.values[0] < self.values[-1]

    @property
    def smallest_positive(self) -> float:
        return min(v for v in self.values if v > 0.0)

    def __len__(self) -> int:
        return len(self.values)
