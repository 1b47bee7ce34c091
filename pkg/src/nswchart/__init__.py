"""Moving-window change-point control chart for sparse shifts in high-dimensional streams."""

from .casestudy import PreprocessReport, load_secom, preprocess_secom, replay_case
from .dfewma import (
    DfewmaConfig,
    DfewmaSignal,
    calibrate_dfewma_limit,
    dfewma_monitor,
    dfewma_per_variable,
    dfewma_statistic,
    run_dfewma_scenario,
)
from .limits import (
    ControlLimit,
    LimitConfig,
    bootstrap_control_limit,
    empirical_quantile,
    quantile_exponent,
    standard_normal_reference,
)
from .monitor import Monitor, MonitorConfig, SignalReport, check_signal, diagnose
from .simulate import (
    MetricsSummary,
    ModelParams,
    ScenarioSpec,
    chart_acf,
    drv,
    generate_run,
    run_scenario,
)
from .stats import (
    ChartPoint,
    SplitStatistic,
    change_point_estimate,
    check_observations,
    column_means,
    full_sample_chart_statistic,
    per_variable_split_values,
    split_statistic,
    window_chart_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "ChartPoint",
    "ControlLimit",
    "DfewmaConfig",
    "DfewmaSignal",
    "LimitConfig",
    "MetricsSummary",
    "ModelParams",
    "Monitor",
    "MonitorConfig",
    "PreprocessReport",
    "ScenarioSpec",
    "SignalReport",
    "SplitStatistic",
    "bootstrap_control_limit",
    "calibrate_dfewma_limit",
    "change_point_estimate",
    "chart_acf",
    "check_observations",
    "check_signal",
    "column_means",
    "dfewma_monitor",
    "dfewma_per_variable",
    "dfewma_statistic",
    "diagnose",
    "drv",
    "empirical_quantile",
    "full_sample_chart_statistic",
    "generate_run",
    "load_secom",
    "per_variable_split_values",
    "preprocess_secom",
    "quantile_exponent",
    "replay_case",
    "run_dfewma_scenario",
    "run_scenario",
    "split_statistic",
    "standard_normal_reference",
    "window_chart_statistic",
    "__version__",
]
