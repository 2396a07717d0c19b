"""Gaussian-process volatility forecasting on log proxies and envelopes, with GARCH baselines."""

from .forecast import BacktestReport, RollingConfig, Strategy, run_backtest, run_backtest_returns
from .garch import GarchParams, GarchSpec
from .gp import KernelSpec
from .metrics import MetricSuite, compute_suite, residual_stats
from .returns import PriceSeries, ReturnSeries

__all__ = [
    "BacktestReport",
    "GarchParams",
    "GarchSpec",
    "KernelSpec",
    "MetricSuite",
    "PriceSeries",
    "ReturnSeries",
    "RollingConfig",
    "Strategy",
    "compute_suite",
    "residual_stats",
    "run_backtest",
    "run_backtest_returns",
]
__version__ = "0.1.0"
