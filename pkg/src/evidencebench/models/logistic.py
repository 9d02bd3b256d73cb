"""Bayesian logistic regression with a spherical Gaussian prior."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from .base import Model, ModelError, PriorAxis

__all__ = ["standardize_covariates", "LogisticRegressionModel"]

_LOG_2PI = math.log(2.0 * math.pi)


def standardize_covariates(raw, names=None):
    """Center each column at its mean and scale to unit sample standard
    deviation (n - 1 divisor).

    Returns (standardized, means, sds).  A constant column cannot be
    scaled and raises, naming the offending column.
    """
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ModelError("covariates must form a matrix with at least two rows")
    if not np.all(np.isfinite(arr)):
        raise ModelError("covariates must be finite")
    means = arr.mean(axis=0)
    sds = arr.std(axis=0, ddof=1)
    for j, sd in enumerate(sds):
        if sd == 0.0:
            name = names[j] if names is not None else f"column {j}"
            raise ModelError(f"covariate {name} is constant and cannot be standardized")
    return (arr - means) / sds, means, sds


class LogisticRegressionModel(Model):
    """Bernoulli responses with logit link on standardized covariates.

    The design matrix is an intercept column followed by the covariates,
    each standardized to zero mean and unit sample standard deviation.
    All coefficients share the prior theta ~ N(0, I / tau_prior), whose
    normalizing constant uses the full parameter count, intercept
    included.
    """

    def __init__(self, y, covariates, tau_prior: float,
                 covariate_names=None, label: str = "logistic-regression"):
        if not (math.isfinite(tau_prior) and tau_prior > 0.0):
            raise ModelError(f"hyperparameter tau_prior must be positive, got {tau_prior}")
        y = np.asarray(y, dtype=float).ravel()
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise ModelError("responses must be 0 or 1")
        standardized, self.covariate_means, self.covariate_sds = \
            standardize_covariates(covariates, covariate_names)
        if standardized.shape[0] != y.size:
            raise ModelError(
                f"response and covariate row counts differ: "
                f"{y.size} vs {standardized.shape[0]}"
            )
        self.y = y
        self.X = np.column_stack([np.ones(y.size), standardized])
        self.n = y.size
        self.dimension = self.X.shape[1]
        self.tau_prior = float(tau_prior)
        self.covariate_names = list(covariate_names) if covariate_names else None
        self.label = label

    # -- density evaluations ------------------------------------------------

    def log_prior(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        d = self.dimension
        return 0.5 * d * (math.log(self.tau_prior) - _LOG_2PI) \
            - 0.5 * self.tau_prior * float(theta @ theta)

    def log_likelihood(self, theta) -> float:
        eta = self.X @ np.asarray(theta, dtype=float)
        return self.log_likelihood_from_eta(eta)

    def log_likelihood_from_eta(self, eta: np.ndarray) -> float:
        """Bernoulli log likelihood given the linear predictor.

        Kernels that track eta incrementally call this directly to avoid
        recomputing the matrix product.
        """
        return float(self.y @ eta - np.logaddexp(0.0, eta).sum())

    def log_prior_batch(self, thetas: np.ndarray) -> np.ndarray:
        d = self.dimension
        return 0.5 * d * (math.log(self.tau_prior) - _LOG_2PI) \
            - 0.5 * self.tau_prior * np.einsum("ij,ij->i", thetas, thetas)

    def log_likelihood_batch(self, thetas: np.ndarray) -> np.ndarray:
        out = np.empty(thetas.shape[0])
        # Chunked so the eta matrix stays modest for long chains.
        chunk = max(1, 2_000_000 // max(self.n, 1))
        for start in range(0, thetas.shape[0], chunk):
            block = thetas[start:start + chunk]
            eta = block @ self.X.T
            out[start:start + block.shape[0]] = \
                eta @ self.y - np.logaddexp(0.0, eta).sum(axis=1)
        return out

    def log_joint_batch(self, thetas: np.ndarray) -> np.ndarray:
        return self.log_prior_batch(thetas) + self.log_likelihood_batch(thetas)

    # -- derivatives of the log joint ---------------------------------------

    def log_joint_gradient(self, theta) -> np.ndarray:
        theta = self._check_theta(theta)
        p = 1.0 / (1.0 + np.exp(-(self.X @ theta)))
        return self.X.T @ (self.y - p) - self.tau_prior * theta

    def log_joint_hessian(self, theta) -> np.ndarray:
        theta = self._check_theta(theta)
        p = 1.0 / (1.0 + np.exp(-(self.X @ theta)))
        w = p * (1.0 - p)
        return -(self.X.T * w) @ self.X - self.tau_prior * np.eye(self.dimension)

    # -- sampling and support geometry --------------------------------------

    def sample_prior(self, rng) -> np.ndarray:
        return rng.normal(0.0, self.tau_prior ** -0.5, size=self.dimension)

    def sample_prior_batch(self, rng, size: int) -> np.ndarray:
        return rng.normal(0.0, self.tau_prior ** -0.5, size=(size, self.dimension))

    def prior_mean(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def prior_axes(self) -> list[PriorAxis]:
        sd = self.tau_prior ** -0.5
        dist = stats.norm(loc=0.0, scale=sd)
        return [PriorAxis(0.0, sd, False, dist.ppf) for _ in range(self.dimension)]
