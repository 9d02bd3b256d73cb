"""Gaussian models with conjugate or semi-conjugate priors.

Both models observe iid Gaussian data with unknown mean and precision,
parameterized as theta = (mu, tau).  They differ in the prior:

* `GaussianMeanPrecisionModel` places independent priors on the mean
  (normal) and the precision (gamma).  The posterior is not available
  in closed form, which makes the model a useful sampling benchmark.
* `NormalGammaModel` couples them through the conjugate normal-gamma
  prior, so the evidence and posterior are exact and every estimator
  can be checked against them.
"""

from __future__ import annotations

import math
from math import lgamma

import numpy as np
from scipy import stats

from .base import Model, ModelError, PriorAxis

__all__ = ["GaussianMeanPrecisionModel", "NormalGammaModel"]

_LOG_2PI = math.log(2.0 * math.pi)


def _validate_data(y) -> np.ndarray:
    arr = np.asarray(y, dtype=float).ravel()
    if arr.size and not np.all(np.isfinite(arr)):
        raise ModelError("observations must be finite")
    return arr


def _require_positive(**values) -> None:
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0.0):
            raise ModelError(f"hyperparameter {name} must be positive, got {value}")


class GaussianMeanPrecisionModel(Model):
    """iid N(mu, 1/tau) data; mu ~ N(xi, 1/nu) independent of
    tau ~ Gamma(a0/2, rate b0/2)."""

    dimension = 2

    def __init__(self, y, xi: float, nu: float, a0: float, b0: float,
                 label: str = "gaussian-mean-precision"):
        _require_positive(nu=nu, a0=a0, b0=b0)
        self.y = _validate_data(y)
        self.xi = float(xi)
        self.nu = float(nu)
        self.a0 = float(a0)
        self.b0 = float(b0)
        self.label = label
        self.n = self.y.size
        self.sum_y = float(self.y.sum())
        self.sum_y_sq = float(np.dot(self.y, self.y))

    # -- density evaluations ------------------------------------------------

    def _sum_sq(self, mu: float) -> float:
        return self.sum_y_sq - 2.0 * mu * self.sum_y + self.n * mu * mu

    def log_prior(self, theta) -> float:
        mu, tau = theta
        if tau <= 0.0:
            return -math.inf
        half_a, half_b = 0.5 * self.a0, 0.5 * self.b0
        normal = 0.5 * (math.log(self.nu) - _LOG_2PI) \
            - 0.5 * self.nu * (mu - self.xi) ** 2
        gamma = half_a * math.log(half_b) - lgamma(half_a) \
            + (half_a - 1.0) * math.log(tau) - half_b * tau
        return normal + gamma

    def log_likelihood(self, theta) -> float:
        mu, tau = theta
        if tau <= 0.0:
            return -math.inf
        if self.n == 0:
            return 0.0
        return 0.5 * self.n * (math.log(tau) - _LOG_2PI) - 0.5 * tau * self._sum_sq(mu)

    def log_prior_batch(self, thetas: np.ndarray) -> np.ndarray:
        mu, tau = thetas[:, 0], thetas[:, 1]
        out = np.full(mu.shape, -np.inf)
        ok = tau > 0.0
        half_a, half_b = 0.5 * self.a0, 0.5 * self.b0
        out[ok] = (
            0.5 * (math.log(self.nu) - _LOG_2PI)
            - 0.5 * self.nu * (mu[ok] - self.xi) ** 2
            + half_a * math.log(half_b) - lgamma(half_a)
            + (half_a - 1.0) * np.log(tau[ok]) - half_b * tau[ok]
        )
        return out

    def log_likelihood_batch(self, thetas: np.ndarray) -> np.ndarray:
        mu, tau = thetas[:, 0], thetas[:, 1]
        out = np.full(mu.shape, -np.inf)
        ok = tau > 0.0
        if self.n == 0:
            out[ok] = 0.0
            return out
        sq = self.sum_y_sq - 2.0 * mu[ok] * self.sum_y + self.n * mu[ok] ** 2
        out[ok] = 0.5 * self.n * (np.log(tau[ok]) - _LOG_2PI) - 0.5 * tau[ok] * sq
        return out

    def log_joint_batch(self, thetas: np.ndarray) -> np.ndarray:
        lp = self.log_prior_batch(thetas)
        out = np.full(lp.shape, -np.inf)
        ok = lp > -np.inf
        if np.any(ok):
            out[ok] = lp[ok] + self.log_likelihood_batch(thetas[ok])
        return out

    # -- derivatives of the log joint ---------------------------------------

    def log_joint_gradient(self, theta) -> np.ndarray:
        mu, tau = self._check_theta(theta)
        if tau <= 0.0:
            raise ModelError(f"precision must be positive, got {tau}")
        d_mu = tau * (self.sum_y - self.n * mu) - self.nu * (mu - self.xi)
        d_tau = (0.5 * (self.n + self.a0) - 1.0) / tau \
            - 0.5 * (self._sum_sq(mu) + self.b0)
        return np.array([d_mu, d_tau])

    def log_joint_hessian(self, theta) -> np.ndarray:
        mu, tau = self._check_theta(theta)
        if tau <= 0.0:
            raise ModelError(f"precision must be positive, got {tau}")
        cross = self.sum_y - self.n * mu
        return np.array([
            [-(self.n * tau + self.nu), cross],
            [cross, -(0.5 * (self.n + self.a0) - 1.0) / tau ** 2],
        ])

    # -- sampling and support geometry --------------------------------------

    def sample_prior(self, rng) -> np.ndarray:
        mu = rng.normal(self.xi, self.nu ** -0.5)
        tau = rng.gamma(0.5 * self.a0, 2.0 / self.b0)
        return np.array([mu, tau])

    def sample_prior_batch(self, rng, size: int) -> np.ndarray:
        mu = rng.normal(self.xi, self.nu ** -0.5, size=size)
        tau = rng.gamma(0.5 * self.a0, 2.0 / self.b0, size=size)
        return np.column_stack([mu, tau])

    def prior_mean(self) -> np.ndarray:
        return np.array([self.xi, self.a0 / self.b0])

    def prior_axes(self) -> list[PriorAxis]:
        sd_mu = self.nu ** -0.5
        shape, rate = 0.5 * self.a0, 0.5 * self.b0
        mu_dist = stats.norm(loc=self.xi, scale=sd_mu)
        tau_dist = stats.gamma(a=shape, scale=1.0 / rate)
        return [
            PriorAxis(self.xi, sd_mu, False, mu_dist.ppf),
            PriorAxis(shape / rate, math.sqrt(shape) / rate, True, tau_dist.ppf),
        ]


class NormalGammaModel(Model):
    """iid N(mu, 1/tau) data with the conjugate prior
    mu | tau ~ N(mu0, 1/(tau0 tau)), tau ~ Gamma(a0, rate b0).

    The posterior is normal-gamma with parameters (mu_n, tau_n, a_n, b_n)
    and the evidence has a closed form, so the model doubles as an exact
    reference for every estimator in the package.
    """

    dimension = 2

    def __init__(self, y, mu0: float, tau0: float, a0: float, b0: float,
                 label: str = "normal-gamma"):
        _require_positive(tau0=tau0, a0=a0, b0=b0)
        self.y = _validate_data(y)
        self.mu0 = float(mu0)
        self.tau0 = float(tau0)
        self.a0 = float(a0)
        self.b0 = float(b0)
        self.label = label
        self.n = self.y.size
        self.sum_y = float(self.y.sum())
        self.sum_y_sq = float(np.dot(self.y, self.y))
        self.ybar = self.sum_y / self.n if self.n else 0.0
        self.sse = self.sum_y_sq - self.n * self.ybar ** 2 if self.n else 0.0

        # Posterior update.
        self.tau_n = self.tau0 + self.n
        self.mu_n = (self.tau0 * self.mu0 + self.n * self.ybar) / self.tau_n
        self.a_n = self.a0 + 0.5 * self.n
        self.b_n = self.b0 + 0.5 * self.sse \
            + self.tau0 * self.n * (self.ybar - self.mu0) ** 2 / (2.0 * self.tau_n)

    # -- density evaluations ------------------------------------------------

    def _sum_sq(self, mu: float) -> float:
        return self.sum_y_sq - 2.0 * mu * self.sum_y + self.n * mu * mu

    def log_prior(self, theta) -> float:
        mu, tau = theta
        if tau <= 0.0:
            return -math.inf
        normal = 0.5 * (math.log(self.tau0 * tau) - _LOG_2PI) \
            - 0.5 * self.tau0 * tau * (mu - self.mu0) ** 2
        gamma = self.a0 * math.log(self.b0) - lgamma(self.a0) \
            + (self.a0 - 1.0) * math.log(tau) - self.b0 * tau
        return normal + gamma

    def log_likelihood(self, theta) -> float:
        mu, tau = theta
        if tau <= 0.0:
            return -math.inf
        if self.n == 0:
            return 0.0
        return 0.5 * self.n * (math.log(tau) - _LOG_2PI) - 0.5 * tau * self._sum_sq(mu)

    def log_prior_batch(self, thetas: np.ndarray) -> np.ndarray:
        mu, tau = thetas[:, 0], thetas[:, 1]
        out = np.full(mu.shape, -np.inf)
        ok = tau > 0.0
        out[ok] = (
            0.5 * (np.log(self.tau0 * tau[ok]) - _LOG_2PI)
            - 0.5 * self.tau0 * tau[ok] * (mu[ok] - self.mu0) ** 2
            + self.a0 * math.log(self.b0) - lgamma(self.a0)
            + (self.a0 - 1.0) * np.log(tau[ok]) - self.b0 * tau[ok]
        )
        return out

    def log_likelihood_batch(self, thetas: np.ndarray) -> np.ndarray:
        mu, tau = thetas[:, 0], thetas[:, 1]
        out = np.full(mu.shape, -np.inf)
        ok = tau > 0.0
        if self.n == 0:
            out[ok] = 0.0
            return out
        sq = self.sum_y_sq - 2.0 * mu[ok] * self.sum_y + self.n * mu[ok] ** 2
        out[ok] = 0.5 * self.n * (np.log(tau[ok]) - _LOG_2PI) - 0.5 * tau[ok] * sq
        return out

    def log_joint_batch(self, thetas: np.ndarray) -> np.ndarray:
        lp = self.log_prior_batch(thetas)
        out = np.full(lp.shape, -np.inf)
        ok = lp > -np.inf
        if np.any(ok):
            out[ok] = lp[ok] + self.log_likelihood_batch(thetas[ok])
        return out

    # -- derivatives of the log joint ---------------------------------------

    def log_joint_gradient(self, theta) -> np.ndarray:
        mu, tau = self._check_theta(theta)
        if tau <= 0.0:
            raise ModelError(f"precision must be positive, got {tau}")
        d_mu = tau * (self.sum_y - self.n * mu) - self.tau0 * tau * (mu - self.mu0)
        d_tau = (self.a0 + 0.5 * (self.n + 1.0) - 1.0) / tau - self.b0 \
            - 0.5 * self.tau0 * (mu - self.mu0) ** 2 - 0.5 * self._sum_sq(mu)
        return np.array([d_mu, d_tau])

    def log_joint_hessian(self, theta) -> np.ndarray:
        mu, tau = self._check_theta(theta)
        if tau <= 0.0:
            raise ModelError(f"precision must be positive, got {tau}")
        cross = (self.sum_y - self.n * mu) - self.tau0 * (mu - self.mu0)
        return np.array([
            [-tau * (self.tau0 + self.n), cross],
            [cross, -(self.a0 + 0.5 * (self.n + 1.0) - 1.0) / tau ** 2],
        ])

    # -- exact quantities ----------------------------------------------------

    def analytic_log_evidence(self) -> float:
        return (
            lgamma(self.a_n) - lgamma(self.a0)
            + self.a0 * math.log(self.b0) - self.a_n * math.log(self.b_n)
            + 0.5 * (math.log(self.tau0) - math.log(self.tau_n))
            - 0.5 * self.n * _LOG_2PI
        )

    def sample_posterior(self, rng, size: int) -> np.ndarray:
        """Exact iid posterior draws: tau from its gamma marginal, then
        mu from its conditional normal."""
        tau = rng.gamma(self.a_n, 1.0 / self.b_n, size=size)
        mu = rng.normal(self.mu_n, (self.tau_n * tau) ** -0.5)
        return np.column_stack([mu, tau])

    # -- sampling and support geometry --------------------------------------

    def sample_prior(self, rng) -> np.ndarray:
        tau = rng.gamma(self.a0, 1.0 / self.b0)
        mu = rng.normal(self.mu0, (self.tau0 * tau) ** -0.5)
        return np.array([mu, tau])

    def sample_prior_batch(self, rng, size: int) -> np.ndarray:
        tau = rng.gamma(self.a0, 1.0 / self.b0, size=size)
        mu = rng.normal(self.mu0, (self.tau0 * tau) ** -0.5)
        return np.column_stack([mu, tau])

    def prior_mean(self) -> np.ndarray:
        return np.array([self.mu0, self.a0 / self.b0])

    def prior_axes(self) -> list[PriorAxis]:
        # Marginally, mu is Student t with 2 a0 degrees of freedom.
        df = 2.0 * self.a0
        scale = math.sqrt(self.b0 / (self.a0 * self.tau0))
        sd_mu = scale * math.sqrt(df / (df - 2.0)) if df > 2.0 else None
        mu_dist = stats.t(df=df, loc=self.mu0, scale=scale)
        tau_dist = stats.gamma(a=self.a0, scale=1.0 / self.b0)
        return [
            PriorAxis(self.mu0, sd_mu, False, mu_dist.ppf),
            PriorAxis(self.a0 / self.b0, math.sqrt(self.a0) / self.b0, True,
                      tau_dist.ppf),
        ]
