"""Asymptotic variance constants of the estimator and confidence bands.

The estimation error splits into a discretization part with variance
``2 sigma^4 int K^2 * delta / h`` and a smoothing part with variance
``g^2 iint K K C * h^gamma``; both are exposed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.stats import norm

from . import covariance as cv
from .kernels import Kernel


@dataclass(frozen=True)
class CltConstants:
    delta1_sq: float
    delta2_sq: float
    rate_discr: float
    rate_smooth: float

    @property
    def std_error(self) -> float:
        return math.sqrt(self.delta1_sq * self.rate_discr ** 2 + self.delta2_sq * self.rate_smooth ** 2)


def clt_constants(sigma2_tau: float, g_tau_sq: float, kernel: Kernel, cov: cv.CovStructure,
                  h: float, delta: float) -> CltConstants:
    if not (h > 0 and delta > 0):
        raise ValueError("h and delta must be positive")
    if sigma2_tau < 0 or g_tau_sq < 0:
        raise ValueError("variances must be non-negative")
    d1 = 2.0 * sigma2_tau ** 2 * kernel.l2_norm()
    d2 = g_tau_sq * cv.quadratic_form(cov, kernel) if g_tau_sq > 0 else 0.0
    return CltConstants(d1, d2, math.sqrt(delta / h), h ** (cov.gamma / 2.0))


def confidence_bands(estimates, g_sq: float, kernel: Kernel, cov: cv.CovStructure, h: float,
                     delta: float, level: float = 0.95) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise bands estimate +/- z * std_error with the estimate plugged in for sigma^2."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    z = norm.ppf(0.5 + level / 2.0)
    est = np.asarray(estimates, dtype=float)
    l2 = kernel.l2_norm()
    form = cv.quadratic_form(cov, kernel) if g_sq > 0 else 0.0
    var = 2.0 * est ** 2 * l2 * delta / h + g_sq * form * h ** cov.gamma
    half = z * np.sqrt(var)
    return est - half, est + half
