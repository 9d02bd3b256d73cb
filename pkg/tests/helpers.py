"""Property checks shared between the unit tests and the timed property suite.

Everything here runs on synthetic data only; no bundled dataset is touched.
Each check raises AssertionError on failure and returns None.
"""

from __future__ import annotations

import math

import numpy as np

from evidencebench.core import (
    RngStream,
    derive_stream_id,
    log_mean_exp,
    log_sum_exp,
    logdet_spd,
    solve_spd,
)
from evidencebench.estimators import (
    TemperatureLadder,
    annealed_importance_sampling,
    chib,
    chib_plan_for,
    harmonic_mean,
    nested_sampling,
    power_posteriors,
)
from evidencebench.models import (
    GaussianLinearRegressionModel,
    GaussianMeanPrecisionModel,
    LogisticRegressionModel,
    NormalGammaModel,
)
from evidencebench.models.base import Model
from evidencebench.oracles import quadrature_log_evidence
from evidencebench.samplers import (
    ChainConfig,
    TransitionKernel,
    make_kernel,
    rw_metropolis_sweep,
)

REFERENCE_SEED = 20124553


def make_reference_normal_gamma() -> NormalGammaModel:
    """The frozen seeded instance used across estimator tests."""
    rng = RngStream(REFERENCE_SEED, derive_stream_id("normal-gamma-demo"))
    y = rng.normal(0.0, 1.0, size=100)
    return NormalGammaModel(y, 0.0, 1.0, 2.0, 2.0, label="normal-gamma-demo")


def make_small_normal_gamma(n: int = 12, seed: int = 7) -> NormalGammaModel:
    y = RngStream(seed, 1).normal(0.5, 1.2, size=n)
    return NormalGammaModel(y, 0.25, 2.0, 3.0, 2.5, label="normal-gamma-small")


def make_gaussian_mean_precision(n: int = 12, seed: int = 8) -> GaussianMeanPrecisionModel:
    y = RngStream(seed, 2).normal(-0.3, 0.8, size=n)
    return GaussianMeanPrecisionModel(y, 0.1, 1.5, 3.0, 2.0, label="gmp-small")


def make_synthetic_regression(n: int = 24, seed: int = 9) -> GaussianLinearRegressionModel:
    rng = RngStream(seed, 3)
    covariate = rng.normal(10.0, 2.0, size=n)
    y = 5.0 + 2.0 * (covariate - covariate.mean()) + rng.normal(0.0, 1.5, size=n)
    return GaussianLinearRegressionModel(
        y, covariate, np.array([5.0, 2.0]), 0.5, 0.5, 4.0, 6.0, label="regression-small"
    )


def make_synthetic_logistic(n: int = 60, k: int = 2, seed: int = 10,
                            tau_prior: float = 1.0) -> LogisticRegressionModel:
    rng = RngStream(seed, 4)
    raw = rng.normal(0.0, 3.0, size=(n, k))
    eta = 0.4 + (raw - raw.mean(axis=0)) @ np.linspace(0.8, 1.2, k)
    y = (rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    if y.min() == y.max():  # guard against a degenerate draw
        y[0] = 1.0 - y[0]
    return LogisticRegressionModel(y, raw, tau_prior, label="logistic-small")


def all_family_models():
    return [
        make_gaussian_mean_precision(),
        make_small_normal_gamma(),
        make_synthetic_regression(),
        make_synthetic_logistic(),
    ]


class ConstantLikelihoodModel(Model):
    """Standard-normal prior with likelihood identically exp(c)."""

    dimension = 1
    label = "constant-likelihood"

    def __init__(self, c: float = 0.0):
        self.c = float(c)

    def log_prior(self, theta):
        theta = self._check_theta(theta)
        return float(-0.5 * theta[0] ** 2 - 0.5 * math.log(2.0 * math.pi))

    def log_likelihood(self, theta):
        self._check_theta(theta)
        return self.c

    def log_likelihood_batch(self, thetas):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        return np.full(thetas.shape[0], self.c)

    def sample_prior(self, rng):
        return np.array([rng.normal()])

    def sample_prior_batch(self, rng, size):
        return rng.normal(size=(size, 1))

    def prior_mean(self):
        return np.zeros(1)


class ConstantLikelihoodKernel(TransitionKernel):
    """Random-walk kernel for ConstantLikelihoodModel at any temperature.

    The tempered target is the prior regardless of t because the likelihood
    contributes a constant.
    """

    def __init__(self, model: ConstantLikelihoodModel, t: float = 1.0):
        self._model = model
        self.dimension = model.dimension
        self.t = t

    def _log_density(self, theta):
        return self.t * self._model.c + self._model.log_prior(theta)

    def run(self, init, n, rng):
        theta = self._check_init(init)
        states = np.empty((n, self.dimension))
        logp = None
        accepted = np.zeros(self.dimension)
        for i in range(n):
            theta, accepts, logp = rw_metropolis_sweep(
                theta, self._log_density, 1.0, rng, log_density_value=logp
            )
            accepted += accepts
            states[i] = theta
        return states, accepted / n

    def sweep_batch(self, states, rng):
        states = np.array(states, dtype=float)
        accepted = np.zeros(self.dimension)
        for i in range(states.shape[0]):
            states[i], accepts, _ = rw_metropolis_sweep(
                states[i], self._log_density, 1.0, rng
            )
            accepted += accepts
        return states, accepted / states.shape[0]


def constant_kernel_factory(model: ConstantLikelihoodModel):
    def factory(t: float, t1=None) -> ConstantLikelihoodKernel:
        return ConstantLikelihoodKernel(model, t)

    return factory


# ---------------------------------------------------------------------------
# core numerics


def check_log_sum_exp_properties():
    rng = RngStream(3, 11)
    x = rng.normal(0.0, 5.0, size=200)
    base = log_sum_exp(x)
    direct = math.log(np.sum(np.exp(x)))
    assert abs(base - direct) < 1e-12 * max(1.0, abs(direct))
    # shift invariance
    assert abs(log_sum_exp(x + 123.0) - (base + 123.0)) < 1e-9
    # permutation invariance
    assert log_sum_exp(np.sort(x)) == log_sum_exp(np.sort(x)[::-1])
    # extreme magnitudes must not overflow
    assert abs(log_sum_exp(np.array([1e308, 1e308]) * 0.0 + 800.0) - (800.0 + math.log(2))) < 1e-12
    big = log_sum_exp(np.array([1000.0, 1000.0, 1000.0]))
    assert abs(big - (1000.0 + math.log(3.0))) < 1e-12
    # -inf entries drop out
    assert log_sum_exp(np.array([-np.inf, 0.0])) == 0.0
    assert log_sum_exp(np.array([-np.inf, -np.inf])) == -np.inf
    # mean of equal values is exact
    assert log_mean_exp(np.full(17, -321.5)) == -321.5


def check_linear_algebra_tolerances():
    rng = RngStream(3, 12)
    for dim in (1, 2, 3, 8, 16):
        a = rng.normal(size=(dim, dim))
        spd = a @ a.T + dim * np.eye(dim)
        b = rng.normal(size=dim)
        x = solve_spd(spd, b)
        assert np.max(np.abs(spd @ x - b)) < 1e-8 * max(1.0, np.max(np.abs(b)))
        sign, ref = np.linalg.slogdet(spd)
        assert sign > 0
        assert abs(logdet_spd(spd) - ref) < 1e-10 * max(1.0, abs(ref))


# ---------------------------------------------------------------------------
# oracle and gradients


def check_oracle_vs_analytic(rel_tol: float = 1e-5):
    """Numerical-integration evidence agrees with the closed form."""
    for model in (make_small_normal_gamma(), make_synthetic_regression()):
        analytic = model.analytic_log_evidence()
        quad = quadrature_log_evidence(model)
        assert abs(quad - analytic) <= rel_tol * abs(analytic), (
            f"{model.label}: quadrature {quad} vs analytic {analytic}"
        )


def _finite_difference_gradient(model, theta, h_scale=1e-5):
    d = theta.size
    grad = np.empty(d)
    for j in range(d):
        h = h_scale * (1.0 + abs(theta[j]))
        up = theta.copy()
        dn = theta.copy()
        up[j] += h
        dn[j] -= h
        grad[j] = (model.log_joint(up) - model.log_joint(dn)) / (2.0 * h)
    return grad


def _support_draw(model, rng):
    theta = model.sample_prior(rng)
    # keep positive components away from the boundary for stable differences
    if isinstance(model, (GaussianMeanPrecisionModel, NormalGammaModel)):
        theta[1] = max(theta[1], 0.05)
    elif isinstance(model, GaussianLinearRegressionModel):
        theta[2] = max(theta[2], 1e-6)
    return theta


def check_gradient_finite_difference(n_points: int = 100, rel_tol: float = 1e-5):
    for model in all_family_models():
        if "derivatives" not in model.capabilities():
            raise AssertionError(f"{model.label} lost its derivative capability")
        rng = RngStream(5, derive_stream_id("fd", model.label))
        for _ in range(n_points):
            theta = _support_draw(model, rng)
            exact = model.log_joint_gradient(theta)
            approx = _finite_difference_gradient(model, theta)
            scale = np.maximum(np.abs(exact), 1.0)
            worst = np.max(np.abs(exact - approx) / scale)
            assert worst <= rel_tol, (
                f"{model.label}: gradient mismatch {worst:.2e} at theta={theta}"
            )


def check_hessian_finite_difference(n_points: int = 20, rel_tol: float = 5e-4):
    for model in all_family_models():
        rng = RngStream(6, derive_stream_id("fd-hess", model.label))
        d = model.dimension
        for _ in range(n_points):
            theta = _support_draw(model, rng)
            exact = model.log_joint_hessian(theta)
            approx = np.empty((d, d))
            for j in range(d):
                h = 1e-5 * (1.0 + abs(theta[j]))
                up = theta.copy()
                dn = theta.copy()
                up[j] += h
                dn[j] -= h
                approx[:, j] = (
                    model.log_joint_gradient(up) - model.log_joint_gradient(dn)
                ) / (2.0 * h)
            scale = np.maximum(np.abs(exact), 1.0)
            worst = np.max(np.abs(exact - approx) / scale)
            assert worst <= rel_tol, (
                f"{model.label}: hessian mismatch {worst:.2e} at theta={theta}"
            )


# ---------------------------------------------------------------------------
# samplers


def check_tempered_identity_bitwise(iterations: int = 200):
    """A kernel built at t=1.0 must reproduce the default kernel bit for bit."""
    for model in all_family_models():
        init = model.prior_mean().copy()
        if model.dimension >= 2 and not isinstance(model, LogisticRegressionModel):
            init[-1] = max(init[-1], 0.5)
        plain = make_kernel(model)
        tempered = make_kernel(model, 1.0)
        s1, _ = plain.run(init, iterations, RngStream(9, 21))
        s2, _ = tempered.run(init, iterations, RngStream(9, 21))
        assert s1.shape == s2.shape
        assert np.array_equal(s1, s2), f"{model.label}: t=1 chain differs from default"


def check_posterior_conditional_reduction():
    """At t=1 the tempered conditional parameters equal the posterior ones."""
    model = make_small_normal_gamma()
    kernel = make_kernel(model, 1.0)
    assert math.isclose(kernel._mu_mean, model.mu_n, rel_tol=1e-14)
    assert math.isclose(kernel._mu_prec_per_tau, model.tau_n, rel_tol=1e-14)
    assert math.isclose(kernel._shape, model.a0 + (model.n + 1) / 2.0, rel_tol=1e-14)

    reg = make_synthetic_regression()
    reg_kernel = make_kernel(reg, 1.0)
    np.testing.assert_allclose(reg_kernel._coef_mean, reg.posterior_coef_mean, rtol=1e-13)


# ---------------------------------------------------------------------------
# estimators


def check_constant_likelihood_exactness():
    rng_seed = 13

    # likelihood identically one: every method must return exactly zero
    unit = ConstantLikelihoodModel(0.0)
    ll = unit.log_likelihood_batch(np.zeros((50, 1)))
    assert harmonic_mean(ll).log_evidence == 0.0

    ladder = TemperatureLadder.power(21, 5.0, descending=True)
    ais = annealed_importance_sampling(
        unit, ladder, 25, RngStream(rng_seed, 1),
        kernel_factory=constant_kernel_factory(unit), sweeps=1,
    )
    assert ais.log_evidence == 0.0

    up = TemperatureLadder.power(21, 5.0)
    pp = power_posteriors(
        unit, up, ChainConfig(40, burn_in_fraction=0.2), RngStream(rng_seed, 2),
        kernel_factory=constant_kernel_factory(unit),
    )
    assert pp.log_evidence == 0.0

    ns = nested_sampling(unit, 40, RngStream(rng_seed, 3), epsilon=1e-8)
    assert abs(ns.log_evidence) < 1e-9

    # a nonzero constant must be recovered to rounding error
    c = -321.75
    shifted = ConstantLikelihoodModel(c)
    ll = shifted.log_likelihood_batch(np.zeros((50, 1)))
    assert abs(harmonic_mean(ll).log_evidence - c) < 1e-10
    ais = annealed_importance_sampling(
        shifted, ladder, 25, RngStream(rng_seed, 4),
        kernel_factory=constant_kernel_factory(shifted), sweeps=1,
    )
    assert abs(ais.log_evidence - c) < 1e-10
    pp = power_posteriors(
        shifted, up, ChainConfig(40, burn_in_fraction=0.2), RngStream(rng_seed, 5),
        kernel_factory=constant_kernel_factory(shifted),
    )
    assert abs(pp.log_evidence - c) < 1e-10
    ns = nested_sampling(shifted, 40, RngStream(rng_seed, 6), epsilon=1e-8)
    assert abs(ns.log_evidence - c) < 1e-9


def check_chib_point_independence(replicates: int = 6):
    """The identity holds at any anchor point, so two anchors must agree."""
    model = make_reference_normal_gamma()
    plan = chib_plan_for(model)
    config = ChainConfig(20000, burn_in_fraction=0.2)

    def run_at(star_override, stream):
        values = []
        for rep in range(replicates):
            rng = RngStream(17, derive_stream_id(stream, rep))
            est = chib(model, plan, config, rng, star_override=star_override)
            values.append(est.log_evidence)
        values = np.asarray(values)
        se = values.std(ddof=1) / math.sqrt(replicates)
        return values.mean(), se

    mean_a, se_a = run_at(None, "chib-default")
    mean_b, se_b = run_at({"tau": 1.4, "mu": 0.3}, "chib-override")
    combined = math.hypot(se_a, se_b)
    assert abs(mean_a - mean_b) <= 3.0 * combined, (
        f"anchor dependence: {mean_a} vs {mean_b} (3*combined SE {3 * combined:.2e})"
    )


# ---------------------------------------------------------------------------
# harness


def check_report_determinism(tmp_dir) -> None:
    """Same config and seed twice: identical deterministic artifact bytes."""
    import os

    from evidencebench.harness import OUTPUT_DIR_ENV, build_config, run_experiment

    saved_env = os.environ.pop(OUTPUT_DIR_ENV, None)

    def config_for(out):
        return build_config({
            "experiment": {"replicates": 5, "base_seed": 99, "output_dir": out},
            "dataset": {"name": "synthetic-normal", "label": "det-check", "n": 30},
            "models": [
                {"family": "normal-gamma", "label": "m1",
                 "mu0": 0.0, "tau0": 1.0, "a0": 2.0, "b0": 2.0},
                {"family": "normal-gamma", "label": "m2",
                 "mu0": 0.0, "tau0": 0.1, "a0": 2.0, "b0": 2.0},
            ],
            "estimators": {
                "methods": ["exact", "laplace", "chib", "ais"],
                "chib": {"iterations": 4000},
                "ais": {"n_samples": 50, "n_rungs": 21},
            },
        })

    try:
        dirs = [os.path.join(str(tmp_dir), d) for d in ("first", "second")]
        for d in dirs:
            run_experiment(config_for(d))
        for name in ("rows.csv", "summary.csv", "bayes_factors.csv", "boxplot.csv",
                     "manifest.json"):
            with open(os.path.join(dirs[0], name), "rb") as fh:
                first = fh.read()
            with open(os.path.join(dirs[1], name), "rb") as fh:
                second = fh.read()
            assert first == second, f"{name} differs between identical runs"
    finally:
        if saved_env is not None:
            os.environ[OUTPUT_DIR_ENV] = saved_env
