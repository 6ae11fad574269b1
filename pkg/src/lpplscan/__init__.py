"""Bubble-window scanning, rebound detection, and alarm-index backtesting."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    DegenerateDesignError,
    LpplscanError,
    NumericalError,
    StageError,
)
from .evaluation import (
    ErrorDiagramPoint,
    build_alarm_set,
    error_diagram,
    skill_summary,
)
from .extrema import EventSet, detect_crashes, detect_peaks, detect_rebounds
from .lppl import (
    BubbleSign,
    FitResult,
    LpplParams,
    PowerLawParams,
    SearchConfig,
    TcBand,
    aggregate_tc_quantiles,
    classify_bubble_sign,
    eval_lppl,
    eval_power_law,
    fit_window,
    scan_windows,
    solve_linear_params,
)
from .pattern import (
    FeatureSet,
    Label,
    LabeledFit,
    Trait,
    TraitBinning,
    alarm_index,
    alarm_series,
    build_binning,
    label_fits,
    qualify_features,
    select_rebound_fits,
)
from .pipeline import RunConfig, run_pipeline
from .synth import (
    PlantedCourse,
    SynthSpec,
    plant_rebound_course,
    singularity_trajectory,
    synth_lppl_series,
)
from .timeseries import PriceSeries, TradingDay, load_csv, save_csv
from .windows import GridConfig, Window, generate_windows

__all__ = [
    "BubbleSign",
    "ConfigError",
    "DataError",
    "DegenerateDesignError",
    "ErrorDiagramPoint",
    "EventSet",
    "FeatureSet",
    "FitResult",
    "GridConfig",
    "Label",
    "LabeledFit",
    "LpplParams",
    "LpplscanError",
    "NumericalError",
    "PlantedCourse",
    "PowerLawParams",
    "PriceSeries",
    "RunConfig",
    "SearchConfig",
    "StageError",
    "SynthSpec",
    "TcBand",
    "TradingDay",
    "Trait",
    "TraitBinning",
    "Window",
    "aggregate_tc_quantiles",
    "alarm_index",
    "alarm_series",
    "build_alarm_set",
    "build_binning",
    "classify_bubble_sign",
    "detect_crashes",
    "detect_peaks",
    "detect_rebounds",
    "error_diagram",
    "eval_lppl",
    "eval_power_law",
    "fit_window",
    "generate_windows",
    "label_fits",
    "load_csv",
    "plant_rebound_course",
    "qualify_features",
    "run_pipeline",
    "save_csv",
    "scan_windows",
    "select_rebound_fits",
    "singularity_trajectory",
    "skill_summary",
    "solve_linear_params",
    "synth_lppl_series",
]
