"""Markov transition kernels and chain drivers.

Each kernel targets a model's posterior raised to a temperature t in
[0, 1]: the product of the prior and the likelihood to the power t, so
t = 1 is the posterior and t = 0 the prior.  Kernels implement two entry
points: ``run`` advances a single chain and returns every visited state,
and ``sweep_batch`` applies one update sweep to a matrix of independent
states, which is what the sequential estimators vectorize over.

Conjugate-model kernels pre-draw their randomness in blocks and advance
with scalar recursions; given equal seeds their output is reproducible
bit for bit.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .core import cholesky_spd, solve_spd
from .models.base import ModelError
from .models.conjugate import GaussianMeanPrecisionModel, NormalGammaModel
from .models.logistic import LogisticRegressionModel
from .models.regression import GaussianLinearRegressionModel

__all__ = [
    "SamplerError",
    "ChainConfig",
    "ChainResult",
    "TransitionKernel",
    "GaussianMeanPrecisionGibbs",
    "NormalGammaGibbs",
    "LinearRegressionGibbs",
    "RegressionCoefficientGibbs",
    "LogisticRandomWalk",
    "rw_metropolis_sweep",
    "make_kernel",
    "kernel_factory",
    "run_chain",
]


class SamplerError(RuntimeError):
    """Raised for invalid kernel configuration or chain initialization."""


def _check_temperature(t: float) -> float:
    if not (0.0 <= t <= 1.0):
        raise SamplerError(f"temperature must lie in [0, 1], got {t}")
    return float(t)


@dataclass(frozen=True)
class ChainConfig:
    """Length, burn-in fraction, and thinning stride of a chain run."""

    iterations: int
    burn_in_fraction: float = 0.2
    thinning: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise SamplerError(f"iterations must be >= 1, got {self.iterations}")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise SamplerError(
                f"burn_in_fraction must lie in [0, 1), got {self.burn_in_fraction}"
            )
        if self.thinning < 1:
            raise SamplerError(f"thinning must be >= 1, got {self.thinning}")
        if self.n_kept < 1:
            raise SamplerError("configuration keeps no states")

    @property
    def n_burn(self) -> int:
        return int(self.iterations * self.burn_in_fraction)

    @property
    def n_kept(self) -> int:
        return len(range(self.n_burn, self.iterations, self.thinning))


@dataclass
class ChainResult:
    """Kept states plus acceptance rates (None for rejection-free kernels)."""

    states: np.ndarray
    acceptance: np.ndarray | None


class TransitionKernel(abc.ABC):
    """Markov kernel invariant for a tempered posterior."""

    dimension: int
    t: float

    @abc.abstractmethod
    def run(self, init: np.ndarray, n: int, rng) -> tuple[np.ndarray, np.ndarray | None]:
        """Advance n steps from init; returns (states, acceptance).

        ``states`` holds all n visited states, one per row, excluding
        init itself.  ``acceptance`` is the per-coordinate acceptance
        fraction, or None when every update is accepted by construction.
        """

    @abc.abstractmethod
    def sweep_batch(self, states: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray | None]:
        """One update sweep applied to each row of a state matrix."""

    def _check_init(self, init) -> np.ndarray:
        arr = np.asarray(init, dtype=float).ravel()
        if arr.shape != (self.dimension,):
            raise SamplerError(
                f"initial state must have {self.dimension} components, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise SamplerError(f"initial state must be finite, got {arr!r}")
        return arr


class GaussianMeanPrecisionGibbs(TransitionKernel):
    """Gibbs sweep for the independent-prior Gaussian model.

    Updates the mean from its normal conditional under the incoming
    precision, then the precision from its gamma conditional under the
    new mean.  Tempering scales the data terms by t; at t = 0 the sweep
    draws from the prior.
    """

    dimension = 2

    def __init__(self, model: GaussianMeanPrecisionModel, t: float = 1.0):
        self.model = model
        self.t = _check_temperature(t)
        m = model
        self._shape = 0.5 * (self.t * m.n + m.a0)

    def _mu_params(self, tau: float) -> tuple[float, float]:
        m = self.model
        prec = self.t * m.n * tau + m.nu
        mean = (self.t * tau * m.sum_y + m.nu * m.xi) / prec
        return mean, prec

    def _tau_rate(self, mu: float) -> float:
        m = self.model
        sq = m.sum_y_sq - 2.0 * mu * m.sum_y + m.n * mu * mu
        return 0.5 * (self.t * sq + m.b0)

    def run(self, init, n, rng):
        arr = self._check_init(init)
        tau = float(arr[1])
        if tau <= 0.0:
            raise SamplerError(f"chain initialized outside support: precision {tau}")
        z = rng.standard_normal(n)
        g = rng.gamma(self._shape, 1.0, size=n)
        out = np.empty((n, 2))
        for i in range(n):
            mean, prec = self._mu_params(tau)
            mu = mean + z[i] / math.sqrt(prec)
            tau = g[i] / self._tau_rate(mu)
            out[i, 0] = mu
            out[i, 1] = tau
        return out, None

    def sweep_batch(self, states, rng):
        m = self.model
        tau = states[:, 1]
        prec = self.t * m.n * tau + m.nu
        mean = (self.t * tau * m.sum_y + m.nu * m.xi) / prec
        mu = mean + rng.standard_normal(tau.shape[0]) / np.sqrt(prec)
        sq = m.sum_y_sq - 2.0 * mu * m.sum_y + m.n * mu * mu
        rate = 0.5 * (self.t * sq + m.b0)
        tau = rng.gamma(self._shape, 1.0, size=tau.shape[0]) / rate
        return np.column_stack([mu, tau]), None


class NormalGammaGibbs(TransitionKernel):
    """Gibbs sweep for the conjugate normal-gamma model.

    The full conditionals follow from the joint with the coupled prior:
    mu | tau has precision tau (tau0 + t n), and tau | mu is gamma with
    shape a0 + (t n + 1)/2, the extra half coming from the prior's
    dependence on tau.
    """

    dimension = 2

    def __init__(self, model: NormalGammaModel, t: float = 1.0):
        self.model = model
        self.t = _check_temperature(t)
        m = model
        self._mu_mean = (self.t * m.n * m.ybar + m.tau0 * m.mu0) / (self.t * m.n + m.tau0)
        self._mu_prec_per_tau = m.tau0 + self.t * m.n
        self._shape = m.a0 + 0.5 * (self.t * m.n + 1.0)

    def _tau_rate(self, mu: float) -> float:
        m = self.model
        sq = m.sum_y_sq - 2.0 * mu * m.sum_y + m.n * mu * mu
        return m.b0 + 0.5 * (self.t * sq + m.tau0 * (mu - m.mu0) ** 2)

    def run(self, init, n, rng):
        arr = self._check_init(init)
        tau = float(arr[1])
        if tau <= 0.0:
            raise SamplerError(f"chain initialized outside support: precision {tau}")
        z = rng.standard_normal(n)
        g = rng.gamma(self._shape, 1.0, size=n)
        out = np.empty((n, 2))
        for i in range(n):
            mu = self._mu_mean + z[i] / math.sqrt(self._mu_prec_per_tau * tau)
            tau = g[i] / self._tau_rate(mu)
            out[i, 0] = mu
            out[i, 1] = tau
        return out, None

    def sweep_batch(self, states, rng):
        m = self.model
        tau = states[:, 1]
        size = tau.shape[0]
        mu = self._mu_mean \
            + rng.standard_normal(size) / np.sqrt(self._mu_prec_per_tau * tau)
        sq = m.sum_y_sq - 2.0 * mu * m.sum_y + m.n * mu * mu
        rate = m.b0 + 0.5 * (self.t * sq + m.tau0 * (mu - m.mu0) ** 2)
        tau = rng.gamma(self._shape, 1.0, size=size) / rate
        return np.column_stack([mu, tau]), None


class LinearRegressionGibbs(TransitionKernel):
    """Gibbs sweep for the conjugate linear regression model.

    The coefficient conditional is bivariate normal with mean fixed
    within a temperature and covariance (tau M_t)^-1, so a single
    Cholesky factor serves the whole run.
    """

    dimension = 3

    def __init__(self, model: GaussianLinearRegressionModel, t: float = 1.0):
        self.model = model
        self.t = _check_temperature(t)
        m = model
        m_t = self.t * m.XtX + m.Q0
        self._coef_mean = solve_spd(
            m_t, self.t * m.Xty + m.Q0 @ m.coef_prior_mean
        )
        # beta = mean + L^-T z / sqrt(tau) has covariance (tau M_t)^-1.
        self._scale = np.linalg.inv(cholesky_spd(m_t)).T
        self._shape = 0.5 * (self.t * m.n + m.n_coefficients + m.a0)

    def _tau_rate(self, beta: np.ndarray) -> float:
        m = self.model
        rss = m.yty - 2.0 * float(beta @ m.Xty) + float(beta @ m.XtX @ beta)
        diff = beta - m.coef_prior_mean
        return 0.5 * (self.t * rss + float(diff @ m.Q0 @ diff) + m.b0)

    def run(self, init, n, rng):
        arr = self._check_init(init)
        tau = float(arr[2])
        if tau <= 0.0:
            raise SamplerError(f"chain initialized outside support: precision {tau}")
        z = rng.standard_normal((n, 2))
        g = rng.gamma(self._shape, 1.0, size=n)
        m = self.model
        m0, m1 = self._coef_mean
        a00, a01 = self._scale[0]
        a10, a11 = self._scale[1]
        xty0, xty1 = m.Xty
        xx00, xx01, xx11 = m.XtX[0, 0], m.XtX[0, 1], m.XtX[1, 1]
        q0, q1 = m.Q0[0, 0], m.Q0[1, 1]
        p0, p1 = m.coef_prior_mean
        out = np.empty((n, 3))
        for i in range(n):
            s = 1.0 / math.sqrt(tau)
            b0 = m0 + (a00 * z[i, 0] + a01 * z[i, 1]) * s
            b1 = m1 + (a10 * z[i, 0] + a11 * z[i, 1]) * s
            rss = m.yty - 2.0 * (b0 * xty0 + b1 * xty1) \
                + (xx00 * b0 * b0 + 2.0 * xx01 * b0 * b1 + xx11 * b1 * b1)
            quad = q0 * (b0 - p0) ** 2 + q1 * (b1 - p1) ** 2
            tau = g[i] / (0.5 * (self.t * rss + quad + m.b0))
            out[i, 0] = b0
            out[i, 1] = b1
            out[i, 2] = tau
        return out, None

    def sweep_batch(self, states, rng):
        m = self.model
        tau = states[:, 2]
        size = tau.shape[0]
        z = rng.standard_normal((size, 2))
        beta = self._coef_mean[None, :] + (z @ self._scale.T) / np.sqrt(tau)[:, None]
        rss = m.yty - 2.0 * (beta @ m.Xty) + np.einsum("ij,jk,ik->i", beta, m.XtX, beta)
        diff = beta - m.coef_prior_mean[None, :]
        quad = np.einsum("ij,jk,ik->i", diff, m.Q0, diff)
        rate = 0.5 * (self.t * rss + quad + m.b0)
        tau = rng.gamma(self._shape, 1.0, size=size) / rate
        return np.column_stack([beta, tau]), None


class RegressionCoefficientGibbs(TransitionKernel):
    """Scalar Gibbs over the two regression coefficients with the noise
    precision held fixed.

    Supports reduced runs of the candidate-ordinate estimator: the
    target is the bivariate normal beta | tau*, y, swept one coordinate
    at a time.
    """

    dimension = 2

    def __init__(self, model: GaussianLinearRegressionModel, tau_star: float):
        if tau_star <= 0.0:
            raise SamplerError(f"precision must be positive, got {tau_star}")
        self.model = model
        self.t = 1.0
        self.tau_star = float(tau_star)
        self._mean = model.posterior_coef_mean
        self._m = model.M

    def run(self, init, n, rng):
        arr = self._check_init(init)
        b0, b1 = float(arr[0]), float(arr[1])
        z = rng.standard_normal((n, 2))
        m0, m1 = self._mean
        m00, m01, m11 = self._m[0, 0], self._m[0, 1], self._m[1, 1]
        sd0 = 1.0 / math.sqrt(self.tau_star * m00)
        sd1 = 1.0 / math.sqrt(self.tau_star * m11)
        out = np.empty((n, 2))
        for i in range(n):
            b0 = m0 - (m01 / m00) * (b1 - m1) + sd0 * z[i, 0]
            b1 = m1 - (m01 / m11) * (b0 - m0) + sd1 * z[i, 1]
            out[i, 0] = b0
            out[i, 1] = b1
        return out, None

    def sweep_batch(self, states, rng):
        z = rng.standard_normal(states.shape)
        m0, m1 = self._mean
        m00, m01, m11 = self._m[0, 0], self._m[0, 1], self._m[1, 1]
        b0 = m0 - (m01 / m00) * (states[:, 1] - m1) \
            + z[:, 0] / np.sqrt(self.tau_star * m00)
        b1 = m1 - (m01 / m11) * (b0 - m0) + z[:, 1] / np.sqrt(self.tau_star * m11)
        return np.column_stack([b0, b1]), None


class LogisticRandomWalk(TransitionKernel):
    """Single-site random-walk Metropolis for the logistic model.

    The proposal standard deviation per coordinate is
    (t^alpha * proposal_precision)^(-1/2) with alpha chosen so that the
    proposal matches the prior scale at the smallest positive ladder
    temperature; t is clamped there so the t = 0 rung proposes on the
    prior scale too.  The linear predictor is updated incrementally, so
    a coordinate update costs one pass over the data.
    """

    def __init__(self, model: LogisticRegressionModel, t: float = 1.0,
                 t1: float | None = None, proposal_precision: float = 2.0):
        self.model = model
        self.t = _check_temperature(t)
        if proposal_precision <= 0.0:
            raise SamplerError(
                f"proposal_precision must be positive, got {proposal_precision}"
            )
        self.dimension = model.dimension
        self.proposal_precision = float(proposal_precision)
        if t1 is None or t1 >= 1.0:
            alpha = 0.0
            t1 = 1.0
        elif t1 <= 0.0:
            raise SamplerError(f"smallest positive temperature must be > 0, got {t1}")
        else:
            alpha = math.log(model.tau_prior / proposal_precision) / math.log(t1)
        self.alpha = alpha
        t_eff = max(self.t, t1)
        self.proposal_sd = (t_eff ** alpha * proposal_precision) ** -0.5

    def _log_target_parts(self, theta: np.ndarray) -> tuple[float, float]:
        ll = self.model.log_likelihood(theta)
        return ll, self.model.log_prior(theta)

    def run(self, init, n, rng):
        theta = self._check_init(init).copy()
        m = self.model
        eta = m.X @ theta
        ll = m.log_likelihood_from_eta(eta)
        if not math.isfinite(ll):
            raise SamplerError(f"chain initialized outside support: {theta!r}")
        d = self.dimension
        z = rng.standard_normal((n, d)) * self.proposal_sd
        log_u = np.log(rng.uniform(size=(n, d)))
        tau_p = m.tau_prior
        out = np.empty((n, d))
        accepts = np.zeros(d)
        for i in range(n):
            for j in range(d):
                delta = z[i, j]
                new_eta = eta + delta * m.X[:, j]
                new_ll = m.log_likelihood_from_eta(new_eta)
                old = theta[j]
                new = old + delta
                d_prior = -0.5 * tau_p * (new * new - old * old)
                if log_u[i, j] < self.t * (new_ll - ll) + d_prior:
                    theta[j] = new
                    eta = new_eta
                    ll = new_ll
                    accepts[j] += 1
            out[i] = theta
        return out, accepts / n

    def sweep_batch(self, states, rng):
        m = self.model
        states = states.copy()
        size, d = states.shape
        eta = states @ m.X.T
        ll = eta @ m.y - np.logaddexp(0.0, eta).sum(axis=1)
        accepts = np.zeros(d)
        tau_p = m.tau_prior
        for j in range(d):
            delta = self.proposal_sd * rng.standard_normal(size)
            new_eta = eta + np.outer(delta, m.X[:, j])
            new_ll = new_eta @ m.y - np.logaddexp(0.0, new_eta).sum(axis=1)
            old = states[:, j]
            new = old + delta
            d_prior = -0.5 * tau_p * (new * new - old * old)
            accept = np.log(rng.uniform(size=size)) < self.t * (new_ll - ll) + d_prior
            states[accept, j] = new[accept]
            eta[accept] = new_eta[accept]
            ll[accept] = new_ll[accept]
            accepts[j] = accept.mean()
        return states, accepts


def rw_metropolis_sweep(theta, log_density, proposal_sds, rng,
                        log_density_value=None):
    """One single-site random-walk Metropolis sweep over all coordinates.

    Reference implementation against a black-box log density; returns
    (theta, accepts, log_density_value).  Each coordinate consumes one
    normal and one uniform draw whether or not the proposal is accepted.
    """
    theta = np.array(theta, dtype=float)
    sds = np.broadcast_to(np.asarray(proposal_sds, dtype=float), theta.shape)
    logp = log_density(theta) if log_density_value is None else log_density_value
    if not math.isfinite(logp):
        raise SamplerError(f"chain initialized outside support: {theta!r}")
    accepts = np.zeros(theta.shape[0], dtype=bool)
    for j in range(theta.shape[0]):
        step = sds[j] * rng.standard_normal()
        log_u = math.log(rng.uniform())
        proposal = theta.copy()
        proposal[j] += step
        logp_new = log_density(proposal)
        if log_u < logp_new - logp:
            theta = proposal
            logp = logp_new
            accepts[j] = True
    return theta, accepts, logp


def make_kernel(model, t: float = 1.0, t1: float | None = None,
                proposal_precision: float = 2.0) -> TransitionKernel:
    """Posterior-tempering kernel appropriate to the model family."""
    if isinstance(model, GaussianMeanPrecisionModel):
        return GaussianMeanPrecisionGibbs(model, t)
    if isinstance(model, NormalGammaModel):
        return NormalGammaGibbs(model, t)
    if isinstance(model, GaussianLinearRegressionModel):
        return LinearRegressionGibbs(model, t)
    if isinstance(model, LogisticRegressionModel):
        return LogisticRandomWalk(model, t, t1=t1,
                                  proposal_precision=proposal_precision)
    raise ModelError(f"no transition kernel registered for {type(model).__name__}")


def kernel_factory(model, proposal_precision: float = 2.0):
    """Callable (t, t1) -> kernel used by the temperature-ladder estimators."""

    def factory(t: float, t1: float | None = None) -> TransitionKernel:
        return make_kernel(model, t, t1=t1, proposal_precision=proposal_precision)

    return factory


def run_chain(kernel: TransitionKernel, init, config: ChainConfig, rng) -> ChainResult:
    """Drive a kernel and return the post-burn-in, thinned states."""
    states, acceptance = kernel.run(np.asarray(init, dtype=float), config.iterations, rng)
    kept = states[config.n_burn::config.thinning]
    return ChainResult(states=kept, acceptance=acceptance)
