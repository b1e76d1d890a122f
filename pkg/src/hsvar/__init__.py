"""Historical-simulation VaR with explicit local and stochastic volatility.

One innovation-extraction mechanism covers plain historical simulation
(absolute or relative shifts), filtered historical simulation (GARCH/EWMA
rescaling) and the displaced hybrid rule: pick a local volatility function
and a volatility filter, extract the innovation increments they imply from
the historical sample, and replay those increments one step ahead of the
current market state. Model adequacy is testable on the extracted
innovations; parameters are estimable by quasi-maximum likelihood.
"""

from .diagnostics import TestResult, arch_lm, ljung_box, run_diagnostics
from .errors import (
    ConstraintViolation,
    DegenerateBase,
    DenominatorTooSmall,
    DuplicateDate,
    EmptyScenarios,
    HsvarError,
    MalformedRow,
    NonFiniteValue,
    NonpositiveVolatility,
    NumericalFailure,
    SeriesTooShort,
    WindowTooShort,
    ZeroVariance,
)
from .estimation import OptimOptions, QmleFit, default_free_mask, fit_qmle, qmle_gradient, qmle_objective
from .innovations import (
    InnovationSeries,
    ScenarioSet,
    extract_innovations,
    hybrid_shift_scenarios,
    innovations_to_csv,
    scenarios_to_csv,
    simulate_scenarios,
    simulate_stressed_scenarios,
    volpath_to_csv,
)
from .risk import BacktestReport, VaRReport, kupiec_backtest, pnl, pnl_to_csv, stressed_var, var
from .timeseries import (
    PriceSeries,
    ShiftSeries,
    absolute_shifts,
    default_eps,
    ingest_csv,
    relative_shifts,
    to_csv,
)
from .volatility import (
    DEFAULT_INIT,
    ConstantVol,
    DisplacedVol,
    Ewma,
    Garch,
    InitRule,
    LocalVolSpec,
    NoStochVol,
    ProportionalVol,
    StochVolSpec,
    VolPath,
    filter_volatility,
    implied_mix_weight,
    local_volatility,
    shift_mix_weight,
    spec_from_config,
    spec_to_config,
)

__version__ = "0.1.0"

__all__ = [
    "BacktestReport",
    "ConstantVol",
    "ConstraintViolation",
    "DEFAULT_INIT",
    "DegenerateBase",
    "DenominatorTooSmall",
    "DisplacedVol",
    "DuplicateDate",
    "EmptyScenarios",
    "Ewma",
    "Garch",
    "HsvarError",
    "InitRule",
    "InnovationSeries",
    "LocalVolSpec",
    "MalformedRow",
    "NoStochVol",
    "NonFiniteValue",
    "NonpositiveVolatility",
    "NumericalFailure",
    "OptimOptions",
    "PriceSeries",
    "ProportionalVol",
    "QmleFit",
    "ScenarioSet",
    "SeriesTooShort",
    "ShiftSeries",
    "StochVolSpec",
    "TestResult",
    "VaRReport",
    "VolPath",
    "WindowTooShort",
    "ZeroVariance",
    "absolute_shifts",
    "arch_lm",
    "default_eps",
    "default_free_mask",
    "extract_innovations",
    "filter_volatility",
    "fit_qmle",
    "hybrid_shift_scenarios",
    "implied_mix_weight",
    "ingest_csv",
    "innovations_to_csv",
    "kupiec_backtest",
    "ljung_box",
    "local_volatility",
    "pnl",
    "pnl_to_csv",
    "qmle_gradient",
    "qmle_objective",
    "relative_shifts",
    "run_diagnostics",
    "scenarios_to_csv",
    "shift_mix_weight",
    "simulate_scenarios",
    "simulate_stressed_scenarios",
    "spec_from_config",
    "spec_to_config",
    "stressed_var",
    "to_csv",
    "var",
    "volpath_to_csv",
]
