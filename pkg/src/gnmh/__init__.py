"""Gauss-Newton Metropolis sampling with back-off.

A sampler for densities of the form indicator(x) * prior(x) *
exp(-||f(x)||^2 / 2), where the user supplies f and its Jacobian. Proposals
come from linearizing f at the current point; rejected proposals trigger
back-off, contracting the proposal toward the current point with either a
fixed factor or one chosen by cubic line-search interpolation, under an
acceptance rule that balances whole proposal trajectories.
"""

from .diagnostics import (
    AcorResult,
    HistogramResult,
    acor,
    autocovariance,
    error_bars,
    error_bars_2d,
    step_percentages,
)
from .gaussian import PrecisionGaussian
from .jtest import JtestDomain, JtestOptions, jtest
from .kernel import BackoffPolicy, BackoffTrajectory, CubicData, cubic_minimizer
from .model import (
    ExpSeriesArgs,
    ModelEval,
    ModelHandle,
    exp_series_handle,
    exp_series_model,
    linear_handle,
    linear_model,
    quickstart_handle,
    quickstart_model,
    simple2d_handle,
    simple2d_model,
)
from .posterior import GaussianPrior, PointState, gn_proposal, log_posterior
from .sampler import Sampler

__version__ = "0.1.0"

__all__ = [
    "AcorResult",
    "BackoffPolicy",
    "BackoffTrajectory",
    "CubicData",
    "ExpSeriesArgs",
    "GaussianPrior",
    "HistogramResult",
    "JtestDomain",
    "JtestOptions",
    "ModelEval",
    "ModelHandle",
    "PointState",
    "PrecisionGaussian",
    "Sampler",
    "acor",
    "autocovariance",
    "cubic_minimizer",
    "error_bars",
    "error_bars_2d",
    "exp_series_handle",
    "exp_series_model",
    "gn_proposal",
    "jtest",
    "linear_handle",
    "linear_model",
    "log_posterior",
    "quickstart_handle",
    "quickstart_model",
    "simple2d_handle",
    "simple2d_model",
    "step_percentages",
]
