"""Evidence from the candidate-point identity.

For any parameter value theta* with positive posterior density,

    log pi(y) = log pi(y | theta*) + log pi(theta*) - log pi(theta* | y),

so the whole problem reduces to estimating the posterior ordinate
pi(theta* | y).  That ordinate is factorized over an ordered sequence of
parameter blocks; each factor is a Rao-Blackwell average of the block's
full-conditional density over draws with the later blocks held fixed at
their starred values.  The final factor in the factorization comes from
the main run, middle factors from reduced runs, and the first factor is
the full conditional itself, evaluated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import lgamma
from typing import Callable

import numpy as np

from ..core import log_mean_exp
from ..samplers import (
    ChainConfig,
    LinearRegressionGibbs,
    GaussianMeanPrecisionGibbs,
    NormalGammaGibbs,
    RegressionCoefficientGibbs,
    TransitionKernel,
    run_chain,
)
from .base import EstimatorError, EvidenceEstimate

__all__ = [
    "ChibBlock",
    "ChibPlan",
    "chib",
    "chib_plan_for",
    "gaussian_mean_precision_chib_plan",
    "normal_gamma_chib_plan",
    "linear_regression_chib_plan",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ChibBlock:
    """One scalar block of the ordinate factorization.

    rb_log_density(value, states) averages the block's full-conditional
    density at `value` over full-parameter state rows; with a single row
    it is the exact conditional density.  default_star maps the already
    fixed later blocks to this block's anchor value.
    """

    name: str
    index: int
    rb_log_density: Callable[[float, np.ndarray], float]
    default_star: Callable[[dict], float]


@dataclass(frozen=True)
class ChibPlan:
    """Ordinate factorization plus the kernels that sample its factors.

    `blocks` is ordered so that blocks[-1] is conditioned only on the
    data (estimated from the main run) and blocks[0] on everything else
    (evaluated exactly).  `reduced_sampler(stars, config, rng)` must
    return full-parameter draws with the starred blocks held fixed; it
    is only required when the factorization has middle blocks.
    """

    blocks: tuple[ChibBlock, ...]
    main_kernel: Callable[[], TransitionKernel]
    main_init: np.ndarray
    reduced_sampler: Callable[[dict, ChainConfig, object], np.ndarray] | None = None


def chib(
    model,
    plan: ChibPlan,
    main_config: ChainConfig,
    rng,
    reduced_config: ChainConfig | None = None,
    n_candidates: int = 128,
    rb_states_cap: int = 20000,
    star_override: dict | None = None,
) -> EvidenceEstimate:
    """Candidate-point evidence estimate following a block plan.

    The anchor for the last block is chosen by maximizing its estimated
    ordinate over a thinned candidate set (the maximization runs on a
    capped subset of states; the returned ordinate always uses all of
    them).  `star_override` substitutes explicit anchor values by block
    name; the identity holds at any interior point, so this only affects
    Monte Carlo error.
    """
    star_override = star_override or {}
    main_result = run_chain(plan.main_kernel(), plan.main_init, main_config, rng)
    main_states = main_result.states

    n_blocks = len(plan.blocks)
    stars: dict[str, float] = {}
    ordinates: dict[str, float] = {}
    for k in range(n_blocks - 1, -1, -1):
        block = plan.blocks[k]
        if k == n_blocks - 1:
            run_states = main_states
        elif k >= 1:
            if plan.reduced_sampler is None:
                raise EstimatorError(
                    f"plan for {type(model).__name__} lacks a reduced sampler "
                    f"needed for block {block.name!r}"
                )
            run_states = plan.reduced_sampler(
                stars, reduced_config or main_config, rng
            )
        else:
            # First factor: exact conditional given every other block.
            row = np.array(plan.main_init, dtype=float)
            for other in plan.blocks[1:]:
                row[other.index] = stars[other.name]
            run_states = row[None, :]

        if block.name in star_override:
            star = float(star_override[block.name])
        elif k == n_blocks - 1:
            star = _argmax_rb_star(block, main_states, n_candidates, rb_states_cap)
        else:
            star = float(block.default_star(stars))

        ordinate = block.rb_log_density(star, run_states)
        if not math.isfinite(ordinate):
            raise EstimatorError(
                f"posterior ordinate for block {block.name!r} underflowed at "
                f"value {star:.6g}; the run has too few samples near the anchor"
            )
        stars[block.name] = star
        ordinates[block.name] = ordinate

    theta_star = np.array(plan.main_init, dtype=float)
    for block in plan.blocks:
        theta_star[block.index] = stars[block.name]
    log_evidence = model.log_joint(theta_star) - sum(ordinates.values())
    return EvidenceEstimate(
        method="chib",
        log_evidence=log_evidence,
        diagnostics={
            "stars": dict(stars),
            "ordinates": dict(ordinates),
            "n_main_states": int(main_states.shape[0]),
            "n_candidates": int(n_candidates),
        },
    )


def _argmax_rb_star(block: ChibBlock, states: np.ndarray,
                    n_candidates: int, rb_states_cap: int) -> float:
    col = states[:, block.index]
    cand_idx = np.unique(
        np.round(np.linspace(0, col.shape[0] - 1, min(n_candidates, col.shape[0])))
        .astype(int)
    )
    candidates = np.unique(col[cand_idx])
    stride = max(1, math.ceil(states.shape[0] / rb_states_cap))
    subset = states[::stride]
    scores = [block.rb_log_density(c, subset) for c in candidates]
    return float(candidates[int(np.argmax(scores))])


# -- plans for the built-in model families ----------------------------------


def _gamma_rb(shape: float, rates_of: Callable[[np.ndarray], np.ndarray]):
    def rb(value: float, states: np.ndarray) -> float:
        if value <= 0.0:
            return -math.inf
        rates = rates_of(states)
        logpdfs = shape * np.log(rates) - lgamma(shape) \
            + (shape - 1.0) * math.log(value) - rates * value
        return log_mean_exp(logpdfs)
    return rb


def _normal_rb(params_of: Callable[[np.ndarray], tuple]):
    def rb(value: float, states: np.ndarray) -> float:
        mean, prec = params_of(states)
        logpdfs = 0.5 * (np.log(prec) - _LOG_2PI) - 0.5 * prec * (value - mean) ** 2
        return log_mean_exp(logpdfs)
    return rb


def gaussian_mean_precision_chib_plan(model) -> ChibPlan:
    """Two-block factorization pi(mu* | tau*, y) pi(tau* | y)."""
    shape = 0.5 * (model.n + model.a0)

    def tau_rates(states):
        mu = states[:, 0]
        sq = model.sum_y_sq - 2.0 * mu * model.sum_y + model.n * mu ** 2
        return 0.5 * (sq + model.b0)

    def mu_params(states):
        tau = states[:, 1]
        prec = model.n * tau + model.nu
        mean = (tau * model.sum_y + model.nu * model.xi) / prec
        return mean, prec

    def mu_star(stars):
        tau = stars["tau"]
        return (tau * model.sum_y + model.nu * model.xi) / (model.n * tau + model.nu)

    return ChibPlan(
        blocks=(
            ChibBlock("mu", 0, _normal_rb(mu_params), mu_star),
            ChibBlock("tau", 1, _gamma_rb(shape, tau_rates), lambda s: float("nan")),
        ),
        main_kernel=lambda: GaussianMeanPrecisionGibbs(model, 1.0),
        main_init=model.prior_mean(),
    )


def normal_gamma_chib_plan(model) -> ChibPlan:
    """Two-block factorization for the conjugate normal-gamma model."""
    shape = model.a0 + 0.5 * (model.n + 1.0)

    def tau_rates(states):
        mu = states[:, 0]
        sq = model.sum_y_sq - 2.0 * mu * model.sum_y + model.n * mu ** 2
        return model.b0 + 0.5 * (sq + model.tau0 * (mu - model.mu0) ** 2)

    def mu_params(states):
        tau = states[:, 1]
        return model.mu_n, (model.tau0 + model.n) * tau

    return ChibPlan(
        blocks=(
            ChibBlock("mu", 0, _normal_rb(mu_params), lambda s: model.mu_n),
            ChibBlock("tau", 1, _gamma_rb(shape, tau_rates), lambda s: float("nan")),
        ),
        main_kernel=lambda: NormalGammaGibbs(model, 1.0),
        main_init=model.prior_mean(),
    )


def linear_regression_chib_plan(model) -> ChibPlan:
    """Three-block factorization
    pi(b1* | b0*, tau*, y) pi(b0* | tau*, y) pi(tau* | y).

    The slope factor is exact because it conditions on everything else,
    so no degenerate final reduced run is needed; the intercept factor
    averages its scalar conditional over a reduced coefficient run with
    the precision fixed.
    """
    shape = 0.5 * (model.n + model.n_coefficients + model.a0)
    m_hat = model.posterior_coef_mean
    m00, m01, m11 = model.M[0, 0], model.M[0, 1], model.M[1, 1]

    def tau_rates(states):
        beta = states[:, :2]
        rss = model.yty - 2.0 * (beta @ model.Xty) \
            + np.einsum("ij,jk,ik->i", beta, model.XtX, beta)
        diff = beta - model.coef_prior_mean[None, :]
        quad = np.einsum("ij,jk,ik->i", diff, model.Q0, diff)
        return 0.5 * (rss + quad + model.b0)

    def b0_params(states):
        mean = m_hat[0] - (m01 / m00) * (states[:, 1] - m_hat[1])
        return mean, states[:, 2] * m00

    def b1_params(states):
        mean = m_hat[1] - (m01 / m11) * (states[:, 0] - m_hat[0])
        return mean, states[:, 2] * m11

    def reduced_sampler(stars, config, rng):
        kernel = RegressionCoefficientGibbs(model, stars["tau"])
        result = run_chain(kernel, m_hat, config, rng)
        tau_col = np.full(result.states.shape[0], stars["tau"])
        return np.column_stack([result.states, tau_col])

    return ChibPlan(
        blocks=(
            ChibBlock("beta1", 1, _normal_rb(b1_params), lambda s: m_hat[1]),
            ChibBlock("beta0", 0, _normal_rb(b0_params), lambda s: m_hat[0]),
            ChibBlock("tau", 2, _gamma_rb(shape, tau_rates), lambda s: float("nan")),
        ),
        main_kernel=lambda: LinearRegressionGibbs(model, 1.0),
        main_init=np.concatenate([m_hat, [model.a0 / model.b0]]),
        reduced_sampler=reduced_sampler,
    )


def chib_plan_for(model) -> ChibPlan:
    """Dispatch to the plan builder for the model's family."""
    from ..models import (
        GaussianLinearRegressionModel,
        GaussianMeanPrecisionModel,
        NormalGammaModel,
    )

    if isinstance(model, GaussianMeanPrecisionModel):
        return gaussian_mean_precision_chib_plan(model)
    if isinstance(model, NormalGammaModel):
        return normal_gamma_chib_plan(model)
    if isinstance(model, GaussianLinearRegressionModel):
        return linear_regression_chib_plan(model)
    raise EstimatorError(
        f"no ordinate factorization available for {type(model).__name__}"
    )
