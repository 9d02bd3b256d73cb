"""Gaussian linear regression with a conjugate g-type prior.

The design matrix has an intercept column and one centered covariate
column, so theta = (beta0, beta1, tau) with tau the noise precision.
The coefficient prior is beta | tau ~ N(m0, (tau Q0)^-1) with diagonal
Q0, and tau ~ Gamma(a0/2, rate b0/2), which keeps true evidence exactly
computable by integrating the coefficients and precision analytically.
"""

from __future__ import annotations

import math
from math import lgamma

import numpy as np
from scipy import stats

from ..core import logdet_spd, solve_spd
from .base import Model, ModelError, PriorAxis

__all__ = ["GaussianLinearRegressionModel"]

_LOG_2PI = math.log(2.0 * math.pi)


class GaussianLinearRegressionModel(Model):
    """y_i = beta0 + beta1 (c_i - cbar) + eps_i with Gaussian noise.

    The covariate is centered at its sample mean, putting the intercept
    on the scale of the response mean.  Hyperparameters: prior
    coefficient mean `coef_prior_mean`, prior precision multipliers
    (r0, s0) for intercept and slope, and gamma parameters (a0, b0) for
    the noise precision tau ~ Gamma(a0/2, rate b0/2).
    """

    dimension = 3
    n_coefficients = 2

    def __init__(self, y, covariate, coef_prior_mean, r0: float, s0: float,
                 a0: float, b0: float, label: str = "linear-regression"):
        for name, value in (("r0", r0), ("s0", s0), ("a0", a0), ("b0", b0)):
            if not (math.isfinite(value) and value > 0.0):
                raise ModelError(f"hyperparameter {name} must be positive, got {value}")
        self.y = np.asarray(y, dtype=float).ravel()
        covariate = np.asarray(covariate, dtype=float).ravel()
        if self.y.shape != covariate.shape:
            raise ModelError(
                f"response and covariate lengths differ: {self.y.size} vs {covariate.size}"
            )
        if self.y.size and not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(covariate))):
            raise ModelError("observations must be finite")
        self.label = label
        self.n = self.y.size
        centered = covariate - covariate.mean() if self.n else covariate
        self.X = np.column_stack([np.ones(self.n), centered])
        self.coef_prior_mean = np.asarray(coef_prior_mean, dtype=float).ravel()
        if self.coef_prior_mean.shape != (2,):
            raise ModelError("coef_prior_mean must have two entries")
        self.Q0 = np.diag([float(r0), float(s0)])
        self.a0 = float(a0)
        self.b0 = float(b0)

        # Sufficient statistics for likelihood and posterior algebra.
        self.XtX = self.X.T @ self.X
        self.Xty = self.X.T @ self.y
        self.yty = float(np.dot(self.y, self.y))
        self.M = self.XtX + self.Q0
        self.posterior_coef_mean = solve_spd(
            self.M, self.Xty + self.Q0 @ self.coef_prior_mean
        )

    # -- density evaluations ------------------------------------------------

    def _residual_sq(self, beta: np.ndarray) -> float:
        # ||y - X beta||^2 via sufficient statistics.
        return self.yty - 2.0 * float(beta @ self.Xty) + float(beta @ self.XtX @ beta)

    def _prior_quad(self, beta: np.ndarray) -> float:
        diff = beta - self.coef_prior_mean
        return float(diff @ self.Q0 @ diff)

    def log_prior(self, theta) -> float:
        beta, tau = np.asarray(theta[:2], dtype=float), theta[2]
        if tau <= 0.0:
            return -math.inf
        half_a, half_b = 0.5 * self.a0, 0.5 * self.b0
        d = self.n_coefficients
        logdet_q0 = float(np.log(np.diag(self.Q0)).sum())
        normal = 0.5 * (d * math.log(tau) + logdet_q0 - d * _LOG_2PI) \
            - 0.5 * tau * self._prior_quad(beta)
        gamma = half_a * math.log(half_b) - lgamma(half_a) \
            + (half_a - 1.0) * math.log(tau) - half_b * tau
        return normal + gamma

    def log_likelihood(self, theta) -> float:
        beta, tau = np.asarray(theta[:2], dtype=float), theta[2]
        if tau <= 0.0:
            return -math.inf
        if self.n == 0:
            return 0.0
        return 0.5 * self.n * (math.log(tau) - _LOG_2PI) \
            - 0.5 * tau * self._residual_sq(beta)

    def log_prior_batch(self, thetas: np.ndarray) -> np.ndarray:
        beta, tau = thetas[:, :2], thetas[:, 2]
        out = np.full(tau.shape, -np.inf)
        ok = tau > 0.0
        if np.any(ok):
            diff = beta[ok] - self.coef_prior_mean
            quad = np.einsum("ij,jk,ik->i", diff, self.Q0, diff)
            half_a, half_b = 0.5 * self.a0, 0.5 * self.b0
            d = self.n_coefficients
            logdet_q0 = float(np.log(np.diag(self.Q0)).sum())
            out[ok] = (
                0.5 * (d * np.log(tau[ok]) + logdet_q0 - d * _LOG_2PI)
                - 0.5 * tau[ok] * quad
                + half_a * math.log(half_b) - lgamma(half_a)
                + (half_a - 1.0) * np.log(tau[ok]) - half_b * tau[ok]
            )
        return out

    def log_likelihood_batch(self, thetas: np.ndarray) -> np.ndarray:
        beta, tau = thetas[:, :2], thetas[:, 2]
        out = np.full(tau.shape, -np.inf)
        ok = tau > 0.0
        if np.any(ok):
            if self.n == 0:
                out[ok] = 0.0
                return out
            b = beta[ok]
            resid = self.yty - 2.0 * (b @ self.Xty) \
                + np.einsum("ij,jk,ik->i", b, self.XtX, b)
            out[ok] = 0.5 * self.n * (np.log(tau[ok]) - _LOG_2PI) \
                - 0.5 * tau[ok] * resid
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
        arr = self._check_theta(theta)
        beta, tau = arr[:2], arr[2]
        if tau <= 0.0:
            raise ModelError(f"precision must be positive, got {tau}")
        pull = (self.Xty - self.XtX @ beta) - self.Q0 @ (beta - self.coef_prior_mean)
        d_beta = tau * pull
        d_tau = (0.5 * (self.n + self.n_coefficients + self.a0) - 1.0) / tau \
            - 0.5 * (self._residual_sq(beta) + self._prior_quad(beta) + self.b0)
        return np.concatenate([d_beta, [d_tau]])

    def log_joint_hessian(self, theta) -> np.ndarray:
        arr = self._check_theta(theta)
        beta, tau = arr[:2], arr[2]
        if tau <= 0.0:
            raise ModelError(f"precision must be positive, got {tau}")
        h = np.zeros((3, 3))
        h[:2, :2] = -tau * self.M
        cross = (self.Xty - self.XtX @ beta) - self.Q0 @ (beta - self.coef_prior_mean)
        h[:2, 2] = cross
        h[2, :2] = cross
        h[2, 2] = -(0.5 * (self.n + self.n_coefficients + self.a0) - 1.0) / tau ** 2
        return h

    # -- exact quantities ----------------------------------------------------

    def analytic_log_evidence(self) -> float:
        """Closed-form log evidence.

        Both the coefficients and the precision integrate out of the
        Gaussian-gamma joint.  Working with z = y - X m0 keeps the
        formula correct for a nonzero prior coefficient mean.
        """
        if self.n == 0:
            return 0.0
        z = self.y - self.X @ self.coef_prior_mean
        xtz = self.X.T @ z
        quad = float(z @ z) - float(xtz @ solve_spd(self.M, xtz))
        half_a, half_b = 0.5 * self.a0, 0.5 * self.b0
        return (
            -0.5 * self.n * _LOG_2PI
            + 0.5 * (float(np.log(np.diag(self.Q0)).sum()) - logdet_spd(self.M))
            + half_a * math.log(half_b) - lgamma(half_a)
            + lgamma(0.5 * (self.n + self.a0))
            - 0.5 * (self.n + self.a0) * math.log(0.5 * quad + half_b)
        )

    # -- sampling and support geometry --------------------------------------

    def sample_prior(self, rng) -> np.ndarray:
        tau = rng.gamma(0.5 * self.a0, 2.0 / self.b0)
        sd = (tau * np.diag(self.Q0)) ** -0.5
        beta = self.coef_prior_mean + sd * rng.standard_normal(2)
        return np.concatenate([beta, [tau]])

    def sample_prior_batch(self, rng, size: int) -> np.ndarray:
        tau = rng.gamma(0.5 * self.a0, 2.0 / self.b0, size=size)
        sd = (tau[:, None] * np.diag(self.Q0)[None, :]) ** -0.5
        beta = self.coef_prior_mean[None, :] + sd * rng.standard_normal((size, 2))
        return np.column_stack([beta, tau])

    def prior_mean(self) -> np.ndarray:
        return np.concatenate([self.coef_prior_mean, [self.a0 / self.b0]])

    def prior_axes(self) -> list[PriorAxis]:
        # Each coefficient is marginally Student t with a0 degrees of freedom.
        axes = []
        for j in range(2):
            q = self.Q0[j, j]
            scale = math.sqrt(self.b0 / (self.a0 * q))
            sd = scale * math.sqrt(self.a0 / (self.a0 - 2.0)) if self.a0 > 2.0 else None
            dist = stats.t(df=self.a0, loc=self.coef_prior_mean[j], scale=scale)
            axes.append(PriorAxis(self.coef_prior_mean[j], sd, False, dist.ppf))
        shape, rate = 0.5 * self.a0, 0.5 * self.b0
        tau_dist = stats.gamma(a=shape, scale=1.0 / rate)
        axes.append(PriorAxis(shape / rate, math.sqrt(shape) / rate, True, tau_dist.ppf))
        return axes
