"""Kernel estimation of spot volatility from high-frequency log prices."""

__version__ = "0.1.0"

from .covariance import CovStructure, brownian, deterministic, fractional, quadratic_form
from .errors import SpotVolError
from .estimator import PricePath, SpotVolSeries, realized_quarticity, realized_variance, spot_vol_at, spot_vol_grid
from .kernels import Kernel, epanechnikov, exponential, get_kernel, triangular, uniform

__all__ = [
    "CovStructure", "Kernel", "PricePath", "SpotVolError", "SpotVolSeries",
    "brownian", "deterministic", "epanechnikov", "exponential", "fractional", "get_kernel",
    "quadratic_form", "realized_quarticity", "realized_variance", "spot_vol_at", "spot_vol_grid",
    "triangular", "uniform",
]
