"""Nested sampling of the evidence integral.

The prior volume enclosed by rising likelihood contours shrinks by a
factor exp(-1/N) per iteration in expectation, turning the evidence
into a one-dimensional sum over discarded points:

    a += L_i * (X_{i-1} - X_i),   X_i = exp(-i / N).

The discarded point is replaced by a draw from the prior constrained to
the current likelihood level, obtained either by cloning a survivor and
applying constrained random-walk moves, or by plain rejection sampling
from the prior for cheap low-dimensional models.
"""

from __future__ import annotations

import math

import numpy as np

from ..core import log_mean_exp
from .base import EstimatorError, EvidenceEstimate

__all__ = ["nested_sampling"]


def nested_sampling(
    model,
    n_live: int,
    rng,
    epsilon: float = 1e-8,
    n_moves: int = 20,
    replacement: str = "random-walk",
    max_iterations: int | None = None,
) -> EvidenceEstimate:
    """Nested-sampling estimate of the log evidence.

    Iterates until the next contribution falls below `epsilon` times the
    accumulated evidence, then adds the mean live likelihood over the
    remaining prior volume.  With "random-walk" replacement the proposal
    scale per coordinate is the spread of the current live set; moves
    that fall below the likelihood floor or lower the prior density by
    more than the Metropolis ratio are rejected.  A replacement whose
    moves are all rejected keeps the clone and is counted as a stall.
    """
    if n_live < 2:
        raise EstimatorError(f"need at least two live points, got {n_live}")
    if not 0.0 < epsilon < 1.0:
        raise EstimatorError(f"epsilon must lie in (0, 1), got {epsilon}")
    if replacement not in ("random-walk", "prior-rejection"):
        raise EstimatorError(f"unknown replacement strategy {replacement!r}")
    if n_moves < 1:
        raise EstimatorError(f"n_moves must be >= 1, got {n_moves}")
    if max_iterations is None:
        max_iterations = 100 * n_live

    live = model.sample_prior_batch(rng, n_live)
    loglik = np.asarray(model.log_likelihood_batch(live), dtype=float)
    log_prior = np.array([model.log_prior(live[i]) for i in range(n_live)])
    if np.any(np.isnan(loglik)):
        raise EstimatorError("prior draw produced a NaN log likelihood")

    log_epsilon = math.log(epsilon)
    # log(X_{i-1} - X_i) = -(i-1)/N + log(1 - exp(-1/N))
    log_shrink = math.log1p(-math.exp(-1.0 / n_live))
    accumulator = -math.inf
    previous_level = -math.inf
    stalls = 0
    accepted_moves = 0
    total_moves = 0
    iteration = 0

    while iteration < max_iterations:
        iteration += 1
        worst = int(np.argmin(loglik))
        level = float(loglik[worst])
        if level < previous_level:
            raise EstimatorError(
                f"internal invariant violated: likelihood level fell from "
                f"{previous_level} to {level} at iteration {iteration}"
            )
        previous_level = level
        contribution = level + (-(iteration - 1) / n_live) + log_shrink
        stop = accumulator > -math.inf and contribution < log_epsilon + accumulator
        accumulator = np.logaddexp(accumulator, contribution)
        if stop:
            break

        if replacement == "prior-rejection":
            theta, new_ll, new_lp = _rejection_replace(model, level, rng)
        else:
            theta, new_ll, new_lp, accepted = _random_walk_replace(
                model, live, log_prior, worst, level, n_moves, rng
            )
            accepted_moves += accepted
            total_moves += n_moves
            if accepted == 0:
                stalls += 1
        live[worst] = theta
        loglik[worst] = new_ll
        log_prior[worst] = new_lp
    else:
        raise EstimatorError(
            f"no termination within {max_iterations} iterations; "
            f"accumulated {accumulator:.6g}, current level {previous_level:.6g}"
        )

    # Remaining prior volume X_I spread over the live set.
    end_correction = log_mean_exp(loglik) - iteration / n_live
    log_evidence = float(np.logaddexp(accumulator, end_correction))
    diagnostics = {
        "n_live": int(n_live),
        "iterations": int(iteration),
        "end_correction": float(end_correction),
        "final_level": previous_level,
        "replacement": replacement,
    }
    if replacement == "random-walk":
        diagnostics["stalls"] = int(stalls)
        diagnostics["move_acceptance"] = (
            accepted_moves / total_moves if total_moves else None
        )
        if stalls:
            diagnostics["warning"] = (
                f"{stalls} replacements accepted no moves; the live set "
                f"may contain duplicates"
            )
    return EvidenceEstimate(
        method="nested-sampling",
        log_evidence=log_evidence,
        diagnostics=diagnostics,
    )


def _random_walk_replace(model, live, log_prior, worst, level, n_moves, rng):
    """Clone a random survivor and evolve it under the likelihood floor."""
    n_live = live.shape[0]
    source = int(rng.integers(n_live - 1))
    if source >= worst:
        source += 1
    theta = live[source].copy()
    ll = float(model.log_likelihood(theta))
    lp = float(log_prior[source])

    scales = np.std(live, axis=0)
    floor = 1e-12 * (1.0 + np.abs(live.mean(axis=0)))
    scales = np.maximum(scales, floor)

    accepted = 0
    for _ in range(n_moves):
        proposal = theta + scales * rng.standard_normal(theta.shape[0])
        lp_new = model.log_prior(proposal)
        if lp_new == -math.inf:
            continue
        ll_new = float(model.log_likelihood(proposal))
        if ll_new < level:
            continue
        if math.log(rng.uniform()) < lp_new - lp:
            theta, ll, lp = proposal, ll_new, lp_new
            accepted += 1
    return theta, ll, lp, accepted


def _rejection_replace(model, level, rng, max_draws: int = 100000):
    """Draw from the prior until the likelihood clears the floor."""
    for _ in range(max_draws):
        theta = model.sample_prior(rng)
        ll = float(model.log_likelihood(theta))
        if ll > level:
            return theta, ll, float(model.log_prior(theta))
    raise EstimatorError(
        f"prior rejection sampling found no point above level {level:.6g} "
        f"in {max_draws} draws; use random-walk replacement"
    )
