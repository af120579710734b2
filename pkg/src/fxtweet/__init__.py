"""Hourly exchange-rate forecasting from microblogged quotes.

Bars pair each hourly close with the volume-weighted mean of the rates
quoted in messages during that hour. Linear AR/ARX models and a small
feedforward network forecast the close; sweeps, a moving-average trading
rule and resampling tests score the forecasts.
"""

from .distfit import StableParams, estimate_stable, fill_bar_gaps, ks_test, sample_stable
from .evaluation import EvalMetrics, SplitSpec, SweepGrid, evaluate, select_order, split, sweep
from .exceptions import DataError, FxTweetError, ValidationError
from .ingest import HourlyBar, PlausibilityBand, build_hourly_bars, normalize_price_token
from .models import (
    AT_LEVEL,
    LOG_RETURN,
    AlignedSeries,
    ANNRegressor,
    ARXRegressor,
    ModelOrder,
    PersistenceForecaster,
    log_returns,
)
from .stats import ResampleResult, accuracy_difference_test, bootstrap_statistic, permutation_null
from .synth import SynthSpec, generate_synthetic
from .trading import TradeLedger, TradingConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "AT_LEVEL",
    "LOG_RETURN",
    "ANNRegressor",
    "ARXRegressor",
    "AlignedSeries",
    "DataError",
    "EvalMetrics",
    "FxTweetError",
    "HourlyBar",
    "ModelOrder",
    "PersistenceForecaster",
    "PlausibilityBand",
    "ResampleResult",
    "SplitSpec",
    "StableParams",
    "SweepGrid",
    "SynthSpec",
    "TradeLedger",
    "TradingConfig",
    "ValidationError",
    "accuracy_difference_test",
    "bootstrap_statistic",
    "build_hourly_bars",
    "estimate_stable",
    "evaluate",
    "fill_bar_gaps",
    "generate_synthetic",
    "ks_test",
    "log_returns",
    "normalize_price_token",
    "permutation_null",
    "sample_stable",
    "select_order",
    "simulate",
    "split",
    "sweep",
]
