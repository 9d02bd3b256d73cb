from .config import (
    ConfigError,
    DatasetSpec,
    ExperimentConfig,
    ModelSpec,
    OUTPUT_DIR_ENV,
    PRESETS,
    SUPPORTED_METHODS,
    build_config,
    parse_config,
)
from .build import build_model, build_models, build_table
from .report import (
    ReportError,
    ReportView,
    as_view,
    bayes_factor_rows,
    emit_boxplot_data,
    load_report,
    mean_and_se,
    summary_rows,
    write_artifacts,
)
from .runner import CellResult, RunReport, format_float, plan_cells, run_experiment

__all__ = [
    "CellResult",
    "ConfigError",
    "DatasetSpec",
    "ExperimentConfig",
    "ModelSpec",
    "OUTPUT_DIR_ENV",
    "PRESETS",
    "ReportError",
    "ReportView",
    "RunReport",
    "SUPPORTED_METHODS",
    "as_view",
    "bayes_factor_rows",
    "build_config",
    "build_model",
    "build_models",
    "build_table",
    "emit_boxplot_data",
    "format_float",
    "load_report",
    "mean_and_se",
    "parse_config",
    "plan_cells",
    "run_experiment",
    "summary_rows",
    "write_artifacts",
]
