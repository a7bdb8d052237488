"""Two-time-scale realized vol-of-vol built from one-sided spot estimates.

With ``a_i`` the estimate at the later time and ``e_i`` the one at the
earlier time of each difference, the estimator is::

    (1/k) sum_{i=b}^{n-k-b} (a_{i+k} - e_i)^2
        - (n-k+1)/(n k) sum_{i=b+k-1}^{n-k-b} (a_{i+1} - e_i)^2

and it falls back to the first sum alone when the difference is not positive.

``pairing="disjoint"`` (default) takes ``a`` from data after the later time
and ``e`` from data before the earlier one, so the two estimates never share
increments.  ``pairing="literal"`` swaps them (``a`` = right-sided estimate
on j <= i, ``e`` = left-sided on j > i); both then average the increments
between the two times, which cancels most of the signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeights, InvalidScales
from .estimator import PricePath, one_sided_series
from .kernels import Kernel


@dataclass(frozen=True)
class VolVolEstimate:
    ivv: float
    k: int
    b: int
    used_fallback: bool
    first_term: float = math.nan
    correction: float = math.nan


K_MODES = {"two_thirds": 2.0 / 3.0, "three_quarters": 0.75}
# names used by the public contract
K_MODES["paper_simple"] = K_MODES["two_thirds"]
K_MODES["theorem_rate"] = K_MODES["three_quarters"]


def default_k(n: int, mode: str = "two_thirds", c: float = 1.0) -> int:
    """Slow time scale ``round(c * n^p)`` with p = 2/3 (default) or 3/4."""
    if n < 8:
        raise ValueError("need n >= 8")
    try:
        expo = K_MODES[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}") from None
    return max(2, int(round(c * n ** expo)))


def default_b(n: int) -> int:
    return max(1, int(round(0.05 * n)))


def _check_scales(n: int, k: int, b: int):
    if int(k) != k or int(b) != b:
        raise InvalidScales("k and b must be integers")
    if k < 2:
        raise InvalidScales(f"k must be >= 2, got {k}")
    if b < 0:
        raise InvalidScales(f"b must be >= 0, got {b}")
    if 2 * b + k >= n:
        raise InvalidScales(f"need 2b + k < n (k={k}, b={b}, n={n})")


def _sumsq(x: np.ndarray) -> float:
    return math.fsum(x * x)


PAIRINGS = ("disjoint", "literal")


def _paired_series(path: PricePath, kernel: Kernel, h: float, pairing: str):
    """(later, earlier) one-sided series for the chosen pairing."""
    if pairing not in PAIRINGS:
        raise ValueError(f"pairing must be one of {PAIRINGS}, got {pairing!r}")
    future = one_sided_series(path, kernel, h, "left")
    past = one_sided_series(path, kernel, h, "right")
    return (future, past) if pairing == "disjoint" else (past, future)


def tsrvv(path: PricePath, kernel: Kernel, h: float, k: int, b: int, pairing: str = "disjoint") -> VolVolEstimate:
    n = path.n
    _check_scales(n, k, b)
    later, earlier = _paired_series(path, kernel, h, pairing)
    i = np.arange(b, n - k - b + 1)
    i1 = np.arange(b + k - 1, n - k - b + 1)
    dk = later[i + k] - earlier[i]
    d1 = later[i1 + 1] - earlier[i1]
    if not (np.all(np.isfinite(dk)) and np.all(np.isfinite(d1))):
        raise DegenerateWeights(f"one-sided estimates undefined at h={h}; bandwidth too small for the grid")
    first = _sumsq(dk) / k
    corr = (n - k + 1) / (n * k) * _sumsq(d1)
    value = first - corr
    if value > 0:
        return VolVolEstimate(value, int(k), int(b), False, first, corr)
    return VolVolEstimate(first, int(k), int(b), True, first, corr)


def tsrvv_unscaled(path: PricePath, kernel: Kernel, h: float, k: int, pairing: str = "literal") -> float:
    """Variant with full index ranges and a plain 1/k factor on both sums.

    The full ranges reach t_0 and t_n, where the disjoint pairing has an
    empty side, so only the literal pairing is defined everywhere.
    """
    n = path.n
    _check_scales(n, k, 0)
    later, earlier = _paired_series(path, kernel, h, pairing)
    i = np.arange(0, n - k + 1)
    i1 = np.arange(0, n)
    dk = later[i + k] - earlier[i]
    d1 = later[i1 + 1] - earlier[i1]
    if not (np.all(np.isfinite(dk)) and np.all(np.isfinite(d1))):
        raise DegenerateWeights("one-sided estimates undefined at the sample edges for this pairing")
    return (_sumsq(dk) - _sumsq(d1)) / k


def window_weights(n: int, k: int, b: int) -> np.ndarray:
    """Weight of each increment j = 1..n in the k-scale sum.

    Increment j lies inside (t_i, t_{i+k}] for every i in [b, n-k-b] with
    i < j <= i + k; the weight is that count divided by k.
    """
    j = np.arange(1, n + 1)
    lo = np.maximum(b, j - k)
    hi = np.minimum(n - k - b, j - 1)
    return np.maximum(hi - lo + 1, 0) / k


def matched_integrated_variance(path: PricePath, k: int, b: int) -> float:
    """Realized variance weighted to cover the same window as the k-scale sum."""
    _check_scales(path.n, k, b)
    return math.fsum(window_weights(path.n, k, b) * path.squared_increments)


def heston_xi(ivv: float, iv_hat: float) -> float:
    if not iv_hat > 0:
        raise ValueError("iv_hat must be positive")
    if ivv < 0:
        raise ValueError("ivv must be non-negative")
    return math.sqrt(ivv / iv_hat)
