"""Gaussian approximation to the evidence around a posterior mode.

The log evidence is approximated by

    log pi(y) ~ l(mode) + (d/2) log(2 pi) - (1/2) log det(-H(mode))

where l is the log joint and H its Hessian.  The mode comes either from
damped Newton ascent (`laplace`) or from the best point of a posterior
sample (`laplace_at_map`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import CoreMathError, logdet_spd, solve_spd
from .base import EstimatorError, EvidenceEstimate

__all__ = ["NewtonConfig", "laplace", "laplace_at_map"]

_SADDLE_MESSAGE = "saddle or ridge at convergence"


@dataclass(frozen=True)
class NewtonConfig:
    """Damped Newton settings.

    Convergence requires both a small change in the log joint between
    accepted steps (`tol`) and a small gradient sup-norm (`grad_tol`).
    """

    tol: float = 1e-8
    grad_tol: float = 1e-6
    max_iterations: int = 200
    initial_step: float = 1.0
    max_halvings: int = 60

    def __post_init__(self):
        if self.tol <= 0.0 or self.grad_tol <= 0.0:
            raise EstimatorError("tolerances must be positive")
        if self.max_iterations < 1:
            raise EstimatorError("max_iterations must be >= 1")
        if not 0.0 < self.initial_step <= 1.0:
            raise EstimatorError("initial_step must lie in (0, 1]")


def _gaussian_volume(model, theta: np.ndarray, log_joint_value: float) -> tuple[float, float]:
    """Laplace log evidence and log det of -H at a candidate mode."""
    hess = model.log_joint_hessian(theta)
    try:
        logdet_neg_h = logdet_spd(-hess)
    except CoreMathError as exc:
        raise EstimatorError(
            f"{_SADDLE_MESSAGE}: -Hessian is not positive definite at "
            f"{np.array2string(theta, precision=6)} ({exc})"
        ) from exc
    d = theta.shape[0]
    return log_joint_value + 0.5 * d * math.log(2.0 * math.pi) - 0.5 * logdet_neg_h, logdet_neg_h


def laplace(model, init=None, config: NewtonConfig | None = None) -> EvidenceEstimate:
    """Laplace approximation with the mode found by damped Newton ascent.

    Starts from `init` (the prior mean by default).  Each step solves
    against the negative Hessian, falling back to a scaled gradient step
    if that matrix is not positive definite away from the mode, and
    halves the step until the log joint improves.
    """
    config = config or NewtonConfig()
    theta = np.asarray(init, dtype=float) if init is not None \
        else np.asarray(model.prior_mean(), dtype=float)
    value = model.log_joint(theta)
    if not math.isfinite(value):
        raise EstimatorError(
            f"initial point has non-finite log joint: {np.array2string(theta, precision=6)}"
        )

    last_change = math.inf
    total_halvings = 0
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        grad = model.log_joint_gradient(theta)
        grad_norm = float(np.max(np.abs(grad)))
        if abs(last_change) < config.tol and grad_norm < config.grad_tol:
            iterations -= 1
            break

        hess = model.log_joint_hessian(theta)
        try:
            direction = solve_spd(-hess, grad)
        except CoreMathError:
            direction = grad / max(1.0, grad_norm)

        gamma = config.initial_step
        improved = False
        for _ in range(config.max_halvings):
            candidate = theta + gamma * direction
            new_value = model.log_joint(candidate)
            if math.isfinite(new_value) and new_value > value:
                improved = True
                break
            gamma *= 0.5
            total_halvings += 1
        if not improved:
            if grad_norm < config.grad_tol:
                # No representable improvement left; the mode is resolved
                # to machine precision.
                iterations -= 1
                break
            raise EstimatorError(
                f"step halving failed to improve the log joint at "
                f"{np.array2string(theta, precision=6)} (gradient norm {grad_norm:.3g})"
            )
        last_change = new_value - value
        theta, value = candidate, new_value
    else:
        raise EstimatorError(
            f"Newton ascent did not converge in {config.max_iterations} iterations "
            f"(last gradient norm {float(np.max(np.abs(model.log_joint_gradient(theta)))):.3g})"
        )

    log_evidence, logdet_neg_h = _gaussian_volume(model, theta, value)
    return EvidenceEstimate(
        method="laplace",
        log_evidence=log_evidence,
        diagnostics={
            "mode": theta.tolist(),
            "log_joint_at_mode": value,
            "iterations": iterations,
            "step_halvings": total_halvings,
            "final_grad_norm": float(np.max(np.abs(model.log_joint_gradient(theta)))),
            "logdet_neg_hessian": logdet_neg_h,
        },
    )


def laplace_at_map(model, samples: np.ndarray) -> EvidenceEstimate:
    """Laplace approximation anchored at the best point of a sample.

    The sample is scanned for the highest log joint; curvature is then
    evaluated there with no further refinement, so the quality of the
    estimate follows the quality of the sample.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 1:
        raise EstimatorError("samples must form a nonempty matrix, one draw per row")
    batch = getattr(model, "log_joint_batch", None)
    if batch is not None:
        values = np.asarray(batch(samples), dtype=float)
    else:
        values = np.fromiter(
            (model.log_joint(samples[i]) for i in range(samples.shape[0])),
            dtype=float, count=samples.shape[0],
        )
    best = int(np.argmax(values))
    theta = samples[best]
    value = float(values[best])
    if not math.isfinite(value):
        raise EstimatorError("no sample point has a finite log joint")

    log_evidence, logdet_neg_h = _gaussian_volume(model, theta, value)
    return EvidenceEstimate(
        method="laplace-map",
        log_evidence=log_evidence,
        diagnostics={
            "mode": theta.tolist(),
            "log_joint_at_mode": value,
            "n_samples": int(samples.shape[0]),
            "argmax_index": best,
            "logdet_neg_hessian": logdet_neg_h,
        },
    )
