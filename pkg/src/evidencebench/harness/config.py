"""Experiment configuration: TOML parsing, validation, and presets."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """The experiment configuration is malformed or inconsistent."""


OUTPUT_DIR_ENV = "EVIDENCEBENCH_OUTPUT_DIR"

SUPPORTED_FAMILIES = (
    "gaussian-mean-precision",
    "normal-gamma",
    "linear-regression",
    "logistic-regression",
)

SUPPORTED_METHODS = (
    "exact",
    "laplace",
    "laplace-map",
    "harmonic-mean",
    "chib",
    "ais",
    "power-posteriors",
    "nested-sampling",
)

# Families each method can run on.  "exact" needs analytic evidence, "chib"
# needs closed-form full conditionals.
_METHOD_FAMILIES = {
    "exact": ("normal-gamma", "linear-regression"),
    "laplace": SUPPORTED_FAMILIES,
    "laplace-map": SUPPORTED_FAMILIES,
    "harmonic-mean": SUPPORTED_FAMILIES,
    "chib": ("gaussian-mean-precision", "normal-gamma", "linear-regression"),
    "ais": SUPPORTED_FAMILIES,
    "power-posteriors": SUPPORTED_FAMILIES,
    "nested-sampling": SUPPORTED_FAMILIES,
}

# Methods whose output is a deterministic function of the model: they run a
# single cell per model regardless of the replicate count.
DETERMINISTIC_METHODS = ("exact", "laplace")

# Allowed per-method settings with (type, validator) pairs.  Validators take
# the coerced value and return an error string or None.
def _positive(v):
    return None if v > 0 else "must be positive"


def _nonnegative(v):
    return None if v >= 0 else "must be nonnegative"


def _fraction(v):
    return None if 0.0 <= v < 1.0 else "must lie in [0, 1)"


def _unit_open(v):
    return None if 0.0 < v < 1.0 else "must lie in (0, 1)"


def _at_least_two(v):
    return None if v >= 2 else "must be at least 2"


_METHOD_SETTING_SCHEMA = {
    "exact": {},
    "laplace": {
        "tol": (float, _positive),
        "grad_tol": (float, _positive),
        "max_iterations": (int, _positive),
    },
    "laplace-map": {
        "iterations": (int, _positive),
        "burn_in_fraction": (float, _fraction),
        "thinning": (int, _positive),
        "proposal_precision": (float, _positive),
    },
    "harmonic-mean": {
        "iterations": (int, _positive),
        "burn_in_fraction": (float, _fraction),
        "thinning": (int, _positive),
        "proposal_precision": (float, _positive),
    },
    "chib": {
        "iterations": (int, _positive),
        "burn_in_fraction": (float, _fraction),
        "reduced_iterations": (int, _positive),
        "reduced_burn_in_fraction": (float, _fraction),
        "n_candidates": (int, _positive),
    },
    "ais": {
        "n_samples": (int, _at_least_two),
        "n_rungs": (int, _at_least_two),
        "exponent": (float, _positive),
        "sweeps": (int, _positive),
        "proposal_precision": (float, _positive),
    },
    "power-posteriors": {
        "n_rungs": (int, _at_least_two),
        "exponent": (float, _positive),
        "iterations": (int, _positive),
        "burn_in_fraction": (float, _fraction),
        "thinning": (int, _positive),
        "warm_start": (str, None),
        "proposal_precision": (float, _positive),
    },
    "nested-sampling": {
        "n_live": (int, _at_least_two),
        "epsilon": (float, _unit_open),
        "n_moves": (int, _positive),
        "replacement": (str, None),
    },
}

# Named budget presets.  "regression-benchmark" mirrors the linear-model
# benchmark run lengths; "binary-benchmark-200k" spends roughly 200,000
# density evaluations per method on the logistic models.
PRESETS = {
    "regression-benchmark": {
        "harmonic-mean": {"iterations": 505000, "burn_in_fraction": 0.2},
        "laplace-map": {"iterations": 505000, "burn_in_fraction": 0.2},
        "chib": {
            "iterations": 205000,
            "burn_in_fraction": 55000 / 205000,
            "reduced_iterations": 150000,
            "reduced_burn_in_fraction": 0.0,
        },
        "ais": {"n_samples": 1000, "n_rungs": 101, "exponent": 5.0, "sweeps": 5},
        "power-posteriors": {
            "n_rungs": 101,
            "exponent": 5.0,
            "iterations": 5000,
            "burn_in_fraction": 0.2,
        },
        "nested-sampling": {"n_live": 1000, "epsilon": 1e-8, "n_moves": 20},
    },
    "binary-benchmark-200k": {
        "harmonic-mean": {"iterations": 200000, "burn_in_fraction": 0.2},
        "laplace-map": {"iterations": 200000, "burn_in_fraction": 0.2},
        "ais": {"n_samples": 2000, "n_rungs": 101, "exponent": 5.0, "sweeps": 5},
        # Rung count balances two error sources at a fixed total budget: an
        # 11-rung ladder leaves several nats of trapezoid bias under the
        # tau_prior = 0.01 prior, while 101 x 2000 trades it all back as
        # per-rung Monte Carlo noise.  31 x 6500 keeps both near 0.3 nats.
        "power-posteriors": {
            "n_rungs": 31,
            "exponent": 5.0,
            "iterations": 6500,
            "burn_in_fraction": 0.2,
        },
        "nested-sampling": {"n_live": 2000, "epsilon": 1e-8, "n_moves": 20},
    },
}

# Fallback settings when neither a preset nor an explicit value applies.
_METHOD_DEFAULTS = {
    "exact": {},
    "laplace": {},
    "laplace-map": {"iterations": 50000, "burn_in_fraction": 0.2},
    "harmonic-mean": {"iterations": 50000, "burn_in_fraction": 0.2},
    "chib": {"iterations": 50000, "burn_in_fraction": 0.2},
    "ais": {"n_samples": 1000, "n_rungs": 101, "exponent": 5.0, "sweeps": 5},
    "power-posteriors": {
        "n_rungs": 101,
        "exponent": 5.0,
        "iterations": 5000,
        "burn_in_fraction": 0.2,
    },
    "nested-sampling": {"n_live": 1000, "epsilon": 1e-8, "n_moves": 20},
}


@dataclass(frozen=True)
class DatasetSpec:
    """Where experiment data comes from.

    ``name`` is one of the bundled tables ("radiata", "pima") or
    "synthetic-normal", which draws iid normal observations from a stream
    derived from the base seed and ``label``.
    """

    name: str
    path: str | None = None
    sha256: str | None = None
    verify_checksum: bool = True
    label: str = "synthetic"
    n: int = 100
    mean: float = 0.0
    sd: float = 1.0


@dataclass(frozen=True)
class ModelSpec:
    family: str
    label: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    replicates: int
    base_seed: int
    output_dir: str
    dataset: DatasetSpec
    models: tuple[ModelSpec, ...]
    methods: tuple[str, ...]
    settings: dict
    bayes_factor_numerator: str
    bayes_factor_denominator: str
    parallelism: int = 1

    def settings_for(self, method: str) -> dict:
        return dict(self.settings.get(method, {}))


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing required key '{key}' in [{where}]")
    return table[key]


def _coerce(value, target, key: str, where: str):
    if target is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key '{key}' in [{where}] must be a number, got {value!r}")
        return float(value)
    if target is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key '{key}' in [{where}] must be an integer, got {value!r}")
        return value
    if target is str:
        if not isinstance(value, str):
            raise ConfigError(f"key '{key}' in [{where}] must be a string, got {value!r}")
        return value
    raise AssertionError(target)


def _check_unknown(table: dict, allowed, where: str):
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key '{unknown[0]}' in [{where}] (allowed: {', '.join(sorted(allowed))})"
        )


def _parse_dataset(table: dict) -> DatasetSpec:
    name = _coerce(_require(table, "name", "dataset"), str, "name", "dataset")
    if name in ("radiata", "pima"):
        _check_unknown(table, ("name", "path", "sha256", "verify_checksum"), "dataset")
        path = table.get("path")
        if path is not None:
            path = _coerce(path, str, "path", "dataset")
        sha = table.get("sha256")
        if sha is not None:
            sha = _coerce(sha, str, "sha256", "dataset")
        verify = table.get("verify_checksum", True)
        if not isinstance(verify, bool):
            raise ConfigError("key 'verify_checksum' in [dataset] must be a boolean")
        return DatasetSpec(name=name, path=path, sha256=sha, verify_checksum=verify)
    if name == "synthetic-normal":
        _check_unknown(table, ("name", "label", "n", "mean", "sd"), "dataset")
        n = _coerce(table.get("n", 100), int, "n", "dataset")
        if n < 1:
            raise ConfigError(f"synthetic dataset size must be positive, got {n}")
        sd = _coerce(table.get("sd", 1.0), float, "sd", "dataset")
        if sd <= 0:
            raise ConfigError(f"synthetic dataset sd must be positive, got {sd}")
        return DatasetSpec(
            name=name,
            label=_coerce(table.get("label", "synthetic"), str, "label", "dataset"),
            n=n,
            mean=_coerce(table.get("mean", 0.0), float, "mean", "dataset"),
            sd=sd,
        )
    raise ConfigError(
        f"unknown dataset '{name}' (expected radiata, pima, or synthetic-normal)"
    )


_MODEL_PARAM_KEYS = {
    "gaussian-mean-precision": {
        "xi": float,
        "nu": float,
        "a0": float,
        "b0": float,
        "column": str,
    },
    "normal-gamma": {
        "mu0": float,
        "tau0": float,
        "a0": float,
        "b0": float,
        "column": str,
    },
    "linear-regression": {
        "response": str,
        "covariate": str,
        "coef_prior_mean": list,
        "r0": float,
        "s0": float,
        "a0": float,
        "b0": float,
    },
    "logistic-regression": {
        "response": str,
        "covariates": list,
        "tau_prior": float,
    },
}

_MODEL_REQUIRED = {
    "gaussian-mean-precision": ("xi", "nu", "a0", "b0"),
    "normal-gamma": ("mu0", "tau0", "a0", "b0"),
    "linear-regression": ("covariate", "coef_prior_mean", "r0", "s0", "a0", "b0"),
    "logistic-regression": ("covariates", "tau_prior"),
}


def _parse_model(table: dict, index: int) -> ModelSpec:
    where = f"models[{index}]"
    family = _coerce(_require(table, "family", where), str, "family", where)
    if family not in SUPPORTED_FAMILIES:
        raise ConfigError(
            f"unknown model family '{family}' in [{where}] "
            f"(expected one of: {', '.join(SUPPORTED_FAMILIES)})"
        )
    label = _coerce(_require(table, "label", where), str, "label", where)
    if not label:
        raise ConfigError(f"model label in [{where}] must be non-empty")
    schema = _MODEL_PARAM_KEYS[family]
    _check_unknown(table, set(schema) | {"family", "label"}, where)
    params = {}
    for key, kind in schema.items():
        if key not in table:
            continue
        value = table[key]
        if kind is list:
            if not isinstance(value, list):
                raise ConfigError(f"key '{key}' in [{where}] must be an array")
            params[key] = list(value)
        else:
            params[key] = _coerce(value, kind, key, where)
    for key in _MODEL_REQUIRED[family]:
        if key not in params:
            raise ConfigError(f"missing required key '{key}' in [{where}] for family {family}")
    return ModelSpec(family=family, label=label, params=params)


def _parse_method_settings(method: str, table: dict) -> dict:
    schema = _METHOD_SETTING_SCHEMA[method]
    _check_unknown(table, schema, f"estimators.{method}")
    out = {}
    for key, (kind, validate) in schema.items():
        if key not in table:
            continue
        value = _coerce(table[key], kind, key, f"estimators.{method}")
        if validate is not None:
            problem = validate(value)
            if problem is not None:
                raise ConfigError(f"key '{key}' in [estimators.{method}] {problem}, got {value}")
        out[key] = value
    if "warm_start" in out and out["warm_start"] not in ("mean", "last"):
        raise ConfigError(
            f"key 'warm_start' in [estimators.power-posteriors] must be 'mean' or 'last', "
            f"got '{out['warm_start']}'"
        )
    if "replacement" in out and out["replacement"] not in ("random-walk", "prior-rejection"):
        raise ConfigError(
            f"key 'replacement' in [estimators.nested-sampling] must be 'random-walk' or "
            f"'prior-rejection', got '{out['replacement']}'"
        )
    return out


def parse_config(path: str) -> ExperimentConfig:
    """Parse and validate a TOML experiment file."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}")
    return build_config(raw)


def build_config(raw: dict) -> ExperimentConfig:
    """Validate an already-parsed config mapping."""
    _check_unknown(raw, ("experiment", "dataset", "models", "estimators", "report"), "top level")

    exp = raw.get("experiment", {})
    _check_unknown(exp, ("replicates", "base_seed", "output_dir", "parallelism"), "experiment")
    replicates = _coerce(exp.get("replicates", 1), int, "replicates", "experiment")
    if replicates < 1:
        raise ConfigError(f"replicates must be at least 1, got {replicates}")
    base_seed = _coerce(exp.get("base_seed", 0), int, "base_seed", "experiment")
    if not 0 <= base_seed < 2**64:
        raise ConfigError(f"base_seed must fit in 64 bits, got {base_seed}")
    output_dir = _coerce(exp.get("output_dir", "evidencebench-out"), str, "output_dir", "experiment")
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        output_dir = env_dir
    parallelism = _coerce(exp.get("parallelism", 1), int, "parallelism", "experiment")
    if parallelism < 1:
        raise ConfigError(f"parallelism must be at least 1, got {parallelism}")

    dataset = _parse_dataset(_require(raw, "dataset", "top level"))

    model_tables = raw.get("models")
    if not model_tables or not isinstance(model_tables, list):
        raise ConfigError("config must declare at least one [[models]] table")
    models = tuple(_parse_model(t, i) for i, t in enumerate(model_tables))
    labels = [m.label for m in models]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"model labels must be unique, got {labels}")

    est = raw.get("estimators", {})
    methods_raw = est.get("methods")
    if methods_raw is None:
        raise ConfigError("missing required key 'methods' in [estimators]")
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigError("key 'methods' in [estimators] must be a non-empty array")
    methods = []
    for m in methods_raw:
        if not isinstance(m, str) or m not in SUPPORTED_METHODS:
            raise ConfigError(
                f"unknown method {m!r} (expected one of: {', '.join(SUPPORTED_METHODS)})"
            )
        if m in methods:
            raise ConfigError(f"method '{m}' listed twice")
        methods.append(m)

    preset_name = est.get("preset")
    preset = {}
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(
                f"unknown preset '{preset_name}' (expected one of: {', '.join(sorted(PRESETS))})"
            )
        preset = PRESETS[preset_name]

    settings = {}
    for method in methods:
        merged = dict(_METHOD_DEFAULTS[method])
        merged.update(preset.get(method, {}))
        override = est.get(method, {})
        if not isinstance(override, dict):
            raise ConfigError(f"[estimators.{method}] must be a table")
        merged.update(_parse_method_settings(method, override))
        settings[method] = merged
    extra_tables = set(est) - set(methods) - {"methods", "preset"}
    if extra_tables:
        name = sorted(extra_tables)[0]
        raise ConfigError(
            f"[estimators.{name}] configures a method that is not in 'methods'"
        )

    for model in models:
        for method in methods:
            if model.family not in _METHOD_FAMILIES[method]:
                raise ConfigError(
                    f"method '{method}' does not support model family '{model.family}' "
                    f"(model '{model.label}')"
                )

    report = raw.get("report", {})
    _check_unknown(report, ("bayes_factor_numerator", "bayes_factor_denominator"), "report")
    if len(models) >= 2:
        default_num, default_den = labels[1], labels[0]
    else:
        default_num = default_den = labels[0]
    numerator = _coerce(
        report.get("bayes_factor_numerator", default_num), str, "bayes_factor_numerator", "report"
    )
    denominator = _coerce(
        report.get("bayes_factor_denominator", default_den),
        str,
        "bayes_factor_denominator",
        "report",
    )
    for side, value in (("numerator", numerator), ("denominator", denominator)):
        if value not in labels:
            raise ConfigError(
                f"bayes_factor_{side} '{value}' does not name a declared model (have: {labels})"
            )

    return ExperimentConfig(
        replicates=replicates,
        base_seed=base_seed,
        output_dir=output_dir,
        dataset=dataset,
        models=models,
        methods=tuple(methods),
        settings=settings,
        bayes_factor_numerator=numerator,
        bayes_factor_denominator=denominator,
        parallelism=parallelism,
    )
