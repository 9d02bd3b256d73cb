"""Evidence estimators and the comparison helpers built on them."""

from .ais import annealed_importance_sampling
from .base import EstimatorError, EvidenceEstimate, TemperatureLadder
from .chib import (
    ChibBlock,
    ChibPlan,
    chib,
    chib_plan_for,
    gaussian_mean_precision_chib_plan,
    linear_regression_chib_plan,
    normal_gamma_chib_plan,
)
from .comparison import BayesFactor, bayes_factor, posterior_model_probabilities
from .harmonic import harmonic_mean
from .laplace import NewtonConfig, laplace, laplace_at_map
from .nested import nested_sampling
from .power import power_posteriors, trapezoid_log_evidence

__all__ = [
    "EstimatorError",
    "EvidenceEstimate",
    "TemperatureLadder",
    "NewtonConfig",
    "laplace",
    "laplace_at_map",
    "harmonic_mean",
    "ChibBlock",
    "ChibPlan",
    "chib",
    "chib_plan_for",
    "gaussian_mean_precision_chib_plan",
    "normal_gamma_chib_plan",
    "linear_regression_chib_plan",
    "annealed_importance_sampling",
    "nested_sampling",
    "power_posteriors",
    "trapezoid_log_evidence",
    "BayesFactor",
    "bayes_factor",
    "posterior_model_probabilities",
]
