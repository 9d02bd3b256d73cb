"""Model interface shared by every likelihood/prior pair in the package.

A model owns its data and hyperparameters and evaluates normalized log
densities.  Everything downstream (samplers, estimators, oracles) works
through this interface; optional capabilities such as derivatives or an
analytic evidence are discovered by probing for the methods that
implement them.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["ModelError", "PriorAxis", "Model"]

# Optional capability -> method(s) whose presence advertises it.
_CAPABILITY_METHODS = {
    "derivatives": ("log_joint_gradient", "log_joint_hessian"),
    "analytic-evidence": ("analytic_log_evidence",),
    "prior-axes": ("prior_axes",),
    "batch-evaluation": ("log_likelihood_batch", "log_joint_batch"),
    "exact-posterior-sampling": ("sample_posterior",),
}


class ModelError(ValueError):
    """Raised for invalid model configuration or evaluation points."""


@dataclass(frozen=True)
class PriorAxis:
    """One-dimensional description of a prior marginal.

    Used by the quadrature oracle to place integration bounds.  `sd` may
    be None when the marginal has no finite standard deviation; the
    quantile function must always be usable.
    """

    mean: float
    sd: float | None
    positive: bool
    quantile: Callable[[float], float]


class Model(abc.ABC):
    """Bayesian model with a normalized joint density over its parameters."""

    dimension: int
    label: str

    @abc.abstractmethod
    def log_prior(self, theta: np.ndarray) -> float:
        """Normalized log prior density; -inf outside the support."""

    @abc.abstractmethod
    def log_likelihood(self, theta: np.ndarray) -> float:
        """Log likelihood of the data; -inf outside the support."""

    @abc.abstractmethod
    def sample_prior(self, rng) -> np.ndarray:
        """One draw from the prior."""

    def _check_theta(self, theta) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(theta, dtype=float))
        if arr.shape != (self.dimension,):
            raise ModelError(
                f"{type(self).__name__} expects {self.dimension} parameters, "
                f"got shape {arr.shape}"
            )
        if np.any(np.isnan(arr)):
            raise ModelError(f"parameter vector contains NaN: {arr!r}")
        return arr

    def log_joint(self, theta) -> float:
        """Log of likelihood times prior.

        NaN parameters are an error; points outside the prior support
        return -inf without evaluating the likelihood.
        """
        arr = self._check_theta(theta)
        lp = self.log_prior(arr)
        if lp == -math.inf:
            return -math.inf
        ll = self.log_likelihood(arr)
        value = lp + ll
        if math.isnan(value):
            raise ModelError(
                f"log joint evaluated to NaN at {arr!r} "
                f"(log prior {lp}, log likelihood {ll})"
            )
        return value

    def sample_prior_batch(self, rng, size: int) -> np.ndarray:
        """Matrix of prior draws, one per row.  Subclasses may vectorize."""
        return np.stack([self.sample_prior(rng) for _ in range(size)])

    def capabilities(self) -> frozenset[str]:
        """Names of the optional interfaces this model implements."""
        caps = set()
        for name, methods in _CAPABILITY_METHODS.items():
            if all(callable(getattr(self, m, None)) for m in methods):
                caps.add(name)
        return frozenset(caps)
