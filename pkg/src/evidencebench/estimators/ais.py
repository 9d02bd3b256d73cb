"""Annealed importance sampling along a descending temperature ladder.

Particles start as prior draws (the t = 0 endpoint) and are pushed
toward the posterior through the tempered bridge, accumulating the log
weight sum_k (t_{k-1} - t_k) * loglik between kernel moves.  The mean
of the importance weights is an unbiased estimate of the evidence.
"""

from __future__ import annotations

import numpy as np

from ..core import log_mean_exp, log_sum_exp
from ..samplers import kernel_factory as default_kernel_factory
from .base import EstimatorError, EvidenceEstimate, TemperatureLadder

__all__ = ["annealed_importance_sampling"]


def annealed_importance_sampling(
    model,
    ladder: TemperatureLadder,
    n_samples: int,
    rng,
    kernel_factory=None,
    sweeps: int = 1,
) -> EvidenceEstimate:
    """Evidence from annealed importance sampling.

    `ladder` must descend from exactly 1 to exactly 0.  `sweeps` kernel
    sweeps are applied at every intermediate temperature.  All particles
    advance together, so kernels only need their batched sweep.
    """
    if ladder.ascending:
        raise EstimatorError(
            "annealing requires a descending ladder (1 down to 0); "
            "reverse the rungs"
        )
    if n_samples < 2:
        raise EstimatorError(f"need at least two particles, got {n_samples}")
    if sweeps < 1:
        raise EstimatorError(f"sweeps must be >= 1, got {sweeps}")
    factory = kernel_factory or default_kernel_factory(model)
    t = ladder.values
    t1 = ladder.smallest_positive

    particles = model.sample_prior_batch(rng, n_samples)
    log_weights = np.zeros(n_samples)
    acceptance = []
    m = len(t) - 1
    for k in range(m, 0, -1):
        loglik = model.log_likelihood_batch(particles)
        bad = np.flatnonzero(~np.isfinite(loglik))
        if bad.size:
            raise EstimatorError(
                f"particle {bad[0]} has non-finite log likelihood at "
                f"temperature {t[k]:.6g}"
            )
        log_weights += (t[k - 1] - t[k]) * loglik
        if k - 1 >= 1:
            kernel = factory(t[k - 1], t1)
            for _ in range(sweeps):
                particles, acc = kernel.sweep_batch(particles, rng)
                if acc is not None:
                    acceptance.append(float(np.mean(acc)))

    if not np.all(np.isfinite(log_weights)):
        bad = int(np.flatnonzero(~np.isfinite(log_weights))[0])
        raise EstimatorError(f"particle {bad} accumulated a non-finite log weight")

    log_evidence = log_mean_exp(log_weights)
    norm = np.exp(log_weights - log_sum_exp(log_weights))
    ess = 1.0 / float(np.sum(norm ** 2))
    weight_variance = float(n_samples * np.sum(norm ** 2) - 1.0)
    return EvidenceEstimate(
        method="ais",
        log_evidence=log_evidence,
        diagnostics={
            "n_samples": int(n_samples),
            "n_rungs": len(t),
            "sweeps": int(sweeps),
            "ess": ess,
            "normalized_weight_variance": weight_variance,
            "mean_acceptance": float(np.mean(acceptance)) if acceptance else None,
        },
    )
