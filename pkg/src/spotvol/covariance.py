"""Homogeneous covariance structures of the local variance increments.

A structure ``C`` of order ``gamma`` satisfies ``C(h r, h s) = h**gamma C(r, s)``.
Supported kinds:

* ``brownian``: ``min(|r|, |s|)`` when ``r s >= 0``, else 0 (gamma = 1)
* ``fbm``: ``(|r|^g + |s|^g - |r - s|^g) / 2`` with g = 2H
* ``deterministic``: ``r^m s^m`` (gamma = 2m)
* ``tabulated``: bilinear interpolation of user values on a grid
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from ._quadrature import integrate_2d

logger = logging.getLogger(__name__)

KINDS = ("brownian", "fbm", "deterministic", "tabulated")


@dataclass(frozen=True)
class CovStructure:
    kind: str
    gamma: float
    hurst: Optional[float] = None
    power: Optional[int] = None
    grid_r: Tuple[float, ...] = ()
    grid_s: Tuple[float, ...] = ()
    values: Tuple[Tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def __call__(self, r, s):
        return c_gamma_eval(self, r, s)

    @property
    def exact(self) -> bool:
        return self.kind != "tabulated"


def brownian() -> CovStructure:
    return CovStructure("brownian", 1.0)


def fractional(hurst: float) -> CovStructure:
    if not 0.5 < hurst < 1.0:
        raise ValueError("Hurst index must lie in (1/2, 1)")
    return CovStructure("fbm", 2.0 * hurst, hurst=hurst)


def deterministic(m: int) -> CovStructure:
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    return CovStructure("deterministic", 2.0 * m, power=int(m))


def tabulated(grid_r: Sequence[float], grid_s: Sequence[float], values, gamma: float) -> CovStructure:
    vals = np.asarray(values, dtype=float)
    if vals.shape != (len(grid_r), len(grid_s)):
        raise ValueError("values must have shape (len(grid_r), len(grid_s))")
    return CovStructure(
        "tabulated",
        float(gamma),
        grid_r=tuple(float(v) for v in grid_r),
        grid_s=tuple(float(v) for v in grid_s),
        values=tuple(tuple(row) for row in vals.tolist()),
    )


def c_gamma_eval(cov: CovStructure, r, s):
    """Evaluate C(r, s); broadcasts over array arguments."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if cov.kind == "brownian":
        # indicator on the closed set rs >= 0
        out = np.where(r * s >= 0.0, np.minimum(np.abs(r), np.abs(s)), 0.0)
    elif cov.kind == "fbm":
        g = cov.gamma
        out = 0.5 * (np.abs(r) ** g + np.abs(s) ** g - np.abs(r - s) ** g)
    elif cov.kind == "deterministic":
        out = r ** cov.power * s ** cov.power
    else:
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(
            (np.asarray(cov.grid_r), np.asarray(cov.grid_s)),
            np.asarray(cov.values),
            bounds_error=False,
            fill_value=0.0,
        )
        rb, sb = np.broadcast_arrays(r, s)
        out = interp(np.stack([rb.ravel(), sb.ravel()], axis=-1)).reshape(rb.shape)
    return out if out.ndim else float(out)


def gram_matrix(cov: CovStructure, nodes) -> np.ndarray:
    x = np.asarray(nodes, dtype=float)
    return np.asarray(c_gamma_eval(cov, x[:, None], x[None, :]))


def normalized_quadratic(cov: CovStructure, nodes, coeffs) -> float:
    """c' G c / |c|^2 for the Gram matrix G on ``nodes``."""
    c = np.asarray(coeffs, dtype=float)
    return float(c @ gram_matrix(cov, nodes) @ c / (c @ c))


@dataclass(frozen=True)
class MinQuadFormReport:
    min_value: float
    argmin: np.ndarray
    trials: int

    @property
    def passed(self) -> bool:
        return self.min_value >= -1e-9


def nn_definiteness_check(cov: CovStructure, nodes, trials: int, rng_seed: int) -> MinQuadFormReport:
    x = np.asarray(nodes, dtype=float)
    if np.unique(x).size != x.size:
        raise ValueError("nodes must be distinct")
    gram = gram_matrix(cov, x)
    rng = np.random.default_rng(rng_seed)
    c = rng.standard_normal((trials, x.size))
    vals = np.einsum("ti,ij,tj->t", c, gram, c) / np.einsum("ti,ti->t", c, c)
    i = int(np.argmin(vals))
    return MinQuadFormReport(float(vals[i]), c[i], trials)


def quadratic_form(cov: CovStructure, kernel) -> float:
    """The double integral of K(x) K(y) C(x, y) over the plane."""
    closed = kernel.cov_closed_form(cov)
    if closed is not None:
        return closed
    return quadratic_form_numeric(cov, kernel)


@lru_cache(maxsize=256)
def quadratic_form_numeric(cov: CovStructure, kernel) -> float:
    """Quadrature route, used as the fallback and as the test oracle."""
    breaks = set(kernel.breakpoints) | {0.0}
    if cov.kind == "tabulated":
        # the interpolant kinks on every grid line inside the kernel's range
        lo, hi = min(breaks), max(breaks)
        breaks |= {v for v in cov.grid_r + cov.grid_s if lo < v < hi}
    breaks = sorted(breaks)

    def integrand(x, y):
        return kernel(x) * kernel(y) * c_gamma_eval(cov, x, y)

    return integrate_2d(integrand, breaks)
