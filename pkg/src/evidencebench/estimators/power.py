"""Thermodynamic integration over power posteriors.

The log evidence equals the integral over t in [0, 1] of the expected
log likelihood under the tempered posterior at t.  Each ladder rung is
sampled with its own chain and the integral is closed with the
trapezoid rule over the rung means.
"""

from __future__ import annotations

import math

import numpy as np

from ..samplers import ChainConfig, kernel_factory as default_kernel_factory, run_chain
from .base import EstimatorError, EvidenceEstimate, TemperatureLadder

__all__ = ["power_posteriors", "trapezoid_log_evidence"]


def trapezoid_log_evidence(temperatures, mean_logliks) -> float:
    """Trapezoid-rule integral of the rung means over the ladder."""
    t = np.asarray(temperatures, dtype=float)
    e = np.asarray(mean_logliks, dtype=float)
    if t.shape != e.shape or t.ndim != 1 or t.size < 2:
        raise EstimatorError("need matching 1-D temperatures and rung means")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise EstimatorError("temperatures must increase strictly")
    return float(np.sum(dt * 0.5 * (e[1:] + e[:-1])))


def power_posteriors(
    model,
    ladder: TemperatureLadder,
    chain_config: ChainConfig,
    rng,
    kernel_factory=None,
    warm_start: str = "mean",
) -> EvidenceEstimate:
    """Evidence from thermodynamic integration.

    `ladder` must ascend from exactly 0 to exactly 1; each rung runs an
    independent chain under `chain_config`, warm-started from the
    previous rung's kept states (their average by default, or the final
    state with warm_start="last").
    """
    if not ladder.ascending:
        raise EstimatorError(
            "thermodynamic integration requires an ascending ladder (0 up to 1)"
        )
    if warm_start not in ("mean", "last"):
        raise EstimatorError(f"unknown warm start policy {warm_start!r}")
    factory = kernel_factory or default_kernel_factory(model)
    t1 = ladder.smallest_positive

    init = np.asarray(model.prior_mean(), dtype=float)
    rungs = []
    means = []
    variances = []
    for t in ladder.values:
        kernel = factory(t, t1)
        result = run_chain(kernel, init, chain_config, rng)
        loglik = np.asarray(model.log_likelihood_batch(result.states), dtype=float)
        if not np.all(np.isfinite(loglik)):
            raise EstimatorError(
                f"non-finite log likelihood in the rung at temperature {t:.6g}"
            )
        mean = float(loglik.mean())
        # Naive scaling; serial correlation in the chain is not corrected.
        se = float(loglik.std(ddof=1) / math.sqrt(loglik.shape[0])) \
            if loglik.shape[0] > 1 else float("inf")
        rungs.append({
            "t": float(t),
            "mean_loglik": mean,
            "se_loglik": se,
            "acceptance": None if result.acceptance is None
            else [float(a) for a in np.atleast_1d(result.acceptance)],
        })
        means.append(mean)
        variances.append(se ** 2)
        init = result.states.mean(axis=0) if warm_start == "mean" \
            else result.states[-1]

    log_evidence = trapezoid_log_evidence(ladder.values, means)

    # Trapezoid weight of each rung mean, for the naive standard error.
    t = np.asarray(ladder.values)
    weights = np.zeros(t.size)
    weights[:-1] += 0.5 * np.diff(t)
    weights[1:] += 0.5 * np.diff(t)
    naive_se = float(np.sqrt(np.sum(weights ** 2 * np.asarray(variances))))

    return EvidenceEstimate(
        method="power-posteriors",
        log_evidence=log_evidence,
        diagnostics={
            "rungs": rungs,
            "warm_start": warm_start,
            "naive_se": naive_se,
            "n_rungs": len(ladder),
        },
    )
