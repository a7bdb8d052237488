"""Bandwidth selection: approximate MSE, closed-form optima, plug-in and CV.

The approximate mean squared error of the estimator at a point is::

    2 (delta / h) E[sigma^4] int K^2  +  h^gamma L  iint K K C

where ``L`` scales the covariance structure ``C`` of the variance
increments.  Integrating both moments over time gives the global version.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import covariance as cv
from .errors import NonpositiveDenominator, VolVolDegenerate
from .estimator import PricePath, SpotVolSeries, grid_sums, realized_quarticity, spot_vol_grid
from .kernels import Kernel
from .volvol import default_b, default_k, tsrvv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VolModelMoments:
    """Fourth moment of sigma and the covariance scale (pointwise or integrated)."""

    e_sigma4: float
    l_scale: float

    def __post_init__(self):
        if self.e_sigma4 < 0 or self.l_scale < 0:
            raise ValueError("moments must be non-negative")


@dataclass(frozen=True)
class PluginStep:
    h: float
    iq: float = math.nan
    ivv: float = math.nan
    used_fallback: bool = False


@dataclass
class BandwidthPlan:
    h: float
    provenance: str
    history: List[PluginStep] = field(default_factory=list)
    objective: Optional[np.ndarray] = None


def _constants(kernel: Kernel, cov: cv.CovStructure) -> Tuple[float, float]:
    return kernel.l2_norm(), cv.quadratic_form(cov, kernel)


def approx_mse(h: float, delta: float, moments: VolModelMoments, kernel: Kernel, cov: cv.CovStructure) -> float:
    if not (h > 0 and delta > 0):
        raise ValueError("h and delta must be positive")
    l2, form = _constants(kernel, cov)
    return 2.0 * delta / h * moments.e_sigma4 * l2 + h ** cov.gamma * moments.l_scale * form


approx_imse = approx_mse


def _ratio_terms(T: float, moments: VolModelMoments, kernel: Kernel, cov: cv.CovStructure):
    l2, form = _constants(kernel, cov)
    g = cov.gamma
    denom = g * moments.l_scale * form
    if not denom > 0:
        raise NonpositiveDenominator(
            f"gamma * L * iint K K C = {denom:.3g} must be positive (covariance form {form:.3g})"
        )
    return 2.0 * T * moments.e_sigma4 * l2, denom, g


def optimal_bandwidth_local(n: int, T: float, moments: VolModelMoments, kernel: Kernel, cov: cv.CovStructure) -> float:
    num, denom, g = _ratio_terms(T, moments, kernel, cov)
    return n ** (-1.0 / (g + 1.0)) * (num / denom) ** (1.0 / (g + 1.0))


def optimal_mse_value(n: int, T: float, moments: VolModelMoments, kernel: Kernel, cov: cv.CovStructure) -> float:
    num, denom, g = _ratio_terms(T, moments, kernel, cov)
    return n ** (-g / (1.0 + g)) * (1.0 + 1.0 / g) * num ** (g / (1.0 + g)) * denom ** (1.0 / (1.0 + g))


def optimal_bandwidth_global(n: int, T: float, integrated_moments: VolModelMoments, kernel: Kernel,
                             cov: cv.CovStructure) -> float:
    """Same closed form with time-integrated moments."""
    return optimal_bandwidth_local(n, T, integrated_moments, kernel, cov)


def _require_brownian(cov: cv.CovStructure):
    if cov.gamma != 1.0:
        raise ValueError("plug-in bandwidths are only defined for gamma = 1 structures")


def initial_bandwidth(n: int, T: float, kernel: Kernel, cov: Optional[cv.CovStructure] = None) -> float:
    cov = cov or cv.brownian()
    _require_brownian(cov)
    l2, form = _constants(kernel, cov)
    return math.sqrt(2.0 * T * l2 / (n * form))


def plugin_bandwidth(n: int, T: float, iq: float, ivv: float, kernel: Kernel,
                     cov: Optional[cv.CovStructure] = None) -> float:
    """The gamma = 1 bandwidth with integrated quarticity and vol-of-vol plugged in."""
    cov = cov or cv.brownian()
    _require_brownian(cov)
    if not ivv > 0:
        raise VolVolDegenerate("integrated vol-of-vol estimate is zero")
    l2, form = _constants(kernel, cov)
    return math.sqrt(2.0 * T * iq * l2 / (n * ivv * form))


def oracle_bandwidth(n: int, T: float, int_sigma4: float, int_g2: float, kernel: Kernel,
                     cov: Optional[cv.CovStructure] = None) -> float:
    """Global optimum from the true integrated moments."""
    cov = cov or cv.brownian()
    return optimal_bandwidth_global(n, T, VolModelMoments(int_sigma4, int_g2), kernel, cov)


def plugin_select(
    path: PricePath,
    kernel: Kernel,
    cov: Optional[cv.CovStructure] = None,
    max_iter: int = 2,
    rel_tol: float = 0.01,
    k: Optional[int] = None,
    b: Optional[int] = None,
) -> Tuple[BandwidthPlan, SpotVolSeries]:
    """Iterative plug-in selection.

    Starts from :func:`initial_bandwidth`; each iteration estimates the
    vol-of-vol with the current bandwidth and recomputes h.  Stops after
    ``max_iter`` updates or once the relative change is at most ``rel_tol``.
    """
    cov = cov or cv.brownian()
    _require_brownian(cov)
    if max_iter < 0:
        raise ValueError("max_iter must be >= 0")
    n, T = path.n, path.T
    k = default_k(n) if k is None else k
    b = default_b(n) if b is None else b
    h = initial_bandwidth(n, T, kernel, cov)
    history = [PluginStep(h)]
    iq = realized_quarticity(path)
    for it in range(max_iter):
        vv = tsrvv(path, kernel, h, k, b)
        if not vv.ivv > 0:
            raise VolVolDegenerate(f"vol-of-vol estimate is zero at iteration {it + 1}; keep h_init")
        h_new = plugin_bandwidth(n, T, iq, vv.ivv, kernel, cov)
        history.append(PluginStep(h_new, iq, vv.ivv, vv.used_fallback))
        converged = abs(h_new - h) <= rel_tol * h
        h = h_new
        if converged:
            break
    provenance = "initial" if len(history) == 1 else f"plugin(iter {len(history) - 1})"
    plan = BandwidthPlan(h, provenance, history)
    series = spot_vol_grid(path, kernel, h, boundary_corrected=True)
    series.meta["plan"] = plan
    return plan, series


def cv_objective(path: PricePath, kernel: Kernel, h: float, trim: float = 0.1) -> float:
    """Leave-one-out prediction error of r_i / delta by the estimate at t_{i-1}.

    Increment i is removed from both the weighted sum and the normalizer.
    Only increments inside the trimmed window enter the criterion.
    """
    if not 0 <= trim < 0.5:
        raise ValueError("trim must lie in [0, 0.5)")
    n, d = path.n, path.delta
    r = path.squared_increments
    num, den = grid_sums(r, kernel, h, d, "two")
    w0 = float(kernel(0.0)) / h
    l = int(math.floor(trim * n))
    i = np.arange(l + 1, n - l + 1)
    loo_num = num[i - 1] - w0 * r[i - 1]
    loo_den = den[i - 1] - d * w0
    if np.any(np.abs(loo_den) <= 1e-300):
        return math.inf
    resid = r[i - 1] / d - loo_num / loo_den
    return math.fsum(resid * resid)


def cross_validate(path: PricePath, kernel: Kernel, h_grid: Sequence[float], trim: float = 0.1) -> BandwidthPlan:
    grid = np.asarray(h_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("h_grid must be nonempty")
    obj = np.array([cv_objective(path, kernel, h, trim) for h in grid])
    best = int(np.argmin(obj))
    return BandwidthPlan(float(grid[best]), "cross_validation", [PluginStep(float(grid[best]))], obj)


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(lo), math.log(hi), count))
