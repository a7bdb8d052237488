"""scikit-learn style wrapper around bandwidth selection and grid estimation."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bandwidth import cross_validate, initial_bandwidth, log_grid, plugin_select
from .estimator import PricePath, spot_vol_grid
from .kernels import get_kernel


def _as_path(X, T: float) -> PricePath:
    x = check_array(X, ensure_2d=False, dtype=float, ensure_all_finite=True)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValueError("expected a single column of log prices")
        x = x[:, 0]
    return PricePath(float(T), x)


class SpotVolatilityEstimator(TransformerMixin, BaseEstimator):
    """Select a bandwidth on one log-price path, then estimate spot variance on a grid.

    ``bandwidth`` is ``"plugin"``, ``"cv"`` or a positive number.  ``X`` is
    the vector of n + 1 equally spaced log prices over a horizon ``T``.
    """

    def __init__(self, kernel="exponential", bandwidth="plugin", T=1.0, max_iter=2, rel_tol=0.01,
                 cv_grid=(0.1, 2.0, 30), boundary_corrected=True):
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.T = T
        self.max_iter = max_iter
        self.rel_tol = rel_tol
        self.cv_grid = cv_grid
        self.boundary_corrected = boundary_corrected

    def fit(self, X, y=None):
        path = _as_path(X, self.T)
        kern = get_kernel(self.kernel)
        if self.bandwidth == "plugin":
            plan, _ = plugin_select(path, kern, max_iter=self.max_iter, rel_tol=self.rel_tol)
            self.plan_ = plan
            self.bandwidth_ = plan.h
        elif self.bandwidth == "cv":
            lo, hi, count = self.cv_grid
            h0 = initial_bandwidth(path.n, path.T, kern)
            self.plan_ = cross_validate(path, kern, log_grid(lo * h0, hi * h0, int(count)))
            self.bandwidth_ = self.plan_.h
        else:
            h = float(self.bandwidth)
            if not h > 0:
                raise ValueError("bandwidth must be positive")
            self.plan_ = None
            self.bandwidth_ = h
        self.n_increments_ = path.n
        return self

    def transform(self, X):
        check_is_fitted(self, "bandwidth_")
        path = _as_path(X, self.T)
        return spot_vol_grid(path, get_kernel(self.kernel), self.bandwidth_, self.boundary_corrected).estimates
