"""Harmonic mean of the likelihood over posterior draws.

The estimator is log N - log sum exp(-loglik).  It is consistent but
notoriously unstable: its variance is driven by the smallest likelihoods
in the sample, and it is included here as the cautionary baseline.
"""

from __future__ import annotations

import math

import numpy as np

from ..core import log_sum_exp
from .base import EstimatorError, EvidenceEstimate

__all__ = ["harmonic_mean"]


def harmonic_mean(log_likelihoods) -> EvidenceEstimate:
    """Evidence from the harmonic mean identity over posterior draws.

    Every log likelihood must be finite; a -inf entry would make the
    reciprocal likelihood infinite and the estimate meaningless, so it
    is rejected rather than skipped.
    """
    arr = np.asarray(log_likelihoods, dtype=float).ravel()
    if arr.size == 0:
        raise EstimatorError("harmonic mean needs at least one log likelihood")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise EstimatorError(
            f"non-finite log likelihood at position {bad[0]} "
            f"(value {arr[bad[0]]}); harmonic mean undefined"
        )
    log_evidence = math.log(arr.size) - log_sum_exp(-arr)
    return EvidenceEstimate(
        method="harmonic-mean",
        log_evidence=log_evidence,
        diagnostics={
            "n_samples": int(arr.size),
            "loglik_min": float(arr.min()),
            "loglik_max": float(arr.max()),
        },
    )
