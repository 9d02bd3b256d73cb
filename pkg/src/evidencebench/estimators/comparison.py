"""Model comparison on top of log-evidence values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import log_sum_exp
from .base import EvidenceEstimate

__all__ = ["BayesFactor", "bayes_factor", "posterior_model_probabilities"]


def _log_evidence_of(value) -> float:
    if isinstance(value, EvidenceEstimate):
        return value.log_evidence
    out = float(value)
    if math.isnan(out):
        raise ValueError("log evidence must not be NaN")
    return out


@dataclass(frozen=True)
class BayesFactor:
    """Evidence ratio of a numerator model over a denominator model."""

    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def bayes_factor(numerator, denominator) -> BayesFactor:
    """Bayes factor from two log evidences (floats or estimates)."""
    return BayesFactor(_log_evidence_of(numerator) - _log_evidence_of(denominator))


def posterior_model_probabilities(log_evidences, prior_probabilities=None) -> np.ndarray:
    """Posterior probability of each model given its evidence and prior.

    Priors default to uniform; they must be nonnegative and sum to one.
    A zero prior zeroes the posterior regardless of the evidence.
    """
    log_ev = np.asarray(
        [_log_evidence_of(v) for v in log_evidences], dtype=float
    )
    if log_ev.size == 0:
        raise ValueError("need at least one model")
    if prior_probabilities is None:
        priors = np.full(log_ev.size, 1.0 / log_ev.size)
    else:
        priors = np.asarray(prior_probabilities, dtype=float)
    if priors.shape != log_ev.shape:
        raise ValueError(
            f"got {log_ev.size} evidences but {priors.size} prior probabilities"
        )
    if np.any(priors < 0.0) or np.any(~np.isfinite(priors)):
        raise ValueError("prior probabilities must be finite and nonnegative")
    if np.all(priors == 0.0):
        raise ValueError("prior probabilities are all zero")
    total = float(priors.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"prior probabilities must sum to 1, got {total}")

    with np.errstate(divide="ignore"):
        log_weights = log_ev + np.log(priors)
    norm = log_sum_exp(log_weights)
    return np.exp(log_weights - norm)
