"""Kernel spot-variance estimation on a uniform observation grid.

The estimate at time ``tau`` is::

    sum_i K_h(t_{i-1} - tau) (X_{t_i} - X_{t_{i-1}})^2

and, with boundary correction, that sum divided by ``delta * sum_i K_h(t_{i-1} - tau)``.
On the grid ``tau = t_i`` the exponential and uniform kernels run in O(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.signal import lfilter

from .errors import DataError, DegenerateWeights, EmptySide
from .kernels import Kernel

TINY = 1e-300
SIDES = ("two", "left", "right")


@dataclass(frozen=True)
class PricePath:
    """Log-prices ``X_{t_0}, ..., X_{t_n}`` observed at ``t_i = i T / n``."""

    T: float
    log_prices: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.log_prices, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise DataError("a price path needs at least 3 observations (n >= 2)")
        if not np.all(np.isfinite(x)):
            raise DataError("log prices must be finite")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DataError("horizon T must be positive")
        object.__setattr__(self, "log_prices", x)

    @property
    def n(self) -> int:
        return self.log_prices.size - 1

    @property
    def delta(self) -> float:
        return self.T / self.n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.delta

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.log_prices)

    @property
    def squared_increments(self) -> np.ndarray:
        d = np.diff(self.log_prices)
        return d * d


@dataclass
class SpotVolSeries:
    times: np.ndarray
    estimates: np.ndarray
    bandwidth: float
    kernel: str
    boundary_corrected: bool = True
    sided: str = "two"
    meta: Dict[str, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.estimates.size


def realized_variance(path: PricePath) -> float:
    return math.fsum(path.squared_increments)


def realized_quarticity(path: PricePath) -> float:
    r = path.squared_increments
    return math.fsum(r * r) / (3.0 * path.delta)


def _check_h(h: float) -> float:
    h = float(h)
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"bandwidth must be positive and finite, got {h}")
    return h


def spot_vol_at(path: PricePath, kernel: Kernel, h: float, tau: float, boundary_corrected: bool = True) -> float:
    """Direct evaluation at an arbitrary time ``tau``."""
    h = _check_h(h)
    t_left = path.times[:-1]
    w = np.asarray(kernel((t_left - tau) / h)) / h
    num = math.fsum(w * path.squared_increments)
    if not boundary_corrected:
        return num
    den = path.delta * math.fsum(w)
    if abs(den) <= TINY:
        raise DegenerateWeights(f"kernel normalizer vanishes at tau={tau} (h={h})")
    return num / den


# ---- grid sums --------------------------------------------------------------


def _uniform_reach(dh: float) -> int:
    """Largest m with m * dh < 1, the uniform kernel's open support."""
    m = int(math.floor(1.0 / dh))
    while m > 0 and m * dh >= 1.0:
        m -= 1
    while (m + 1) * dh < 1.0:
        m += 1
    return m


def _offset_range(side: str, lo: int, hi: int):
    if side == "left":
        return max(lo, 0), hi
    if side == "right":
        return lo, min(hi, -1)
    return lo, hi


def _window_sums(r: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """For i = 0..n, the sum of r[i + m] over lo <= m <= hi (in range)."""
    n = r.size
    cs = np.zeros(n + 1, dtype=np.longdouble)
    np.cumsum(r, dtype=np.longdouble, out=cs[1:])
    i = np.arange(n + 1)
    a = np.clip(i + lo, 0, n)
    b = np.clip(i + hi + 1, 0, n)
    out = np.where(b > a, cs[b] - cs[np.minimum(a, b)], 0.0)
    return out.astype(float)


def _exp_sums(r: np.ndarray, q: float, side: str):
    """Stable two-pass geometric recursions for the exponential kernel.

    ``fwd[i]`` holds sum_{j > i} q^{j-1-i} r_j (offsets m >= 0), built
    backward; ``bwd[i]`` holds sum_{j <= i} q^{i+1-j} r_j (m <= -1), built
    forward.  Returns the partial sums and the number of state updates.
    """
    n = r.size
    fwd = np.zeros(n + 1)
    bwd = np.zeros(n + 1)
    updates = 0
    if side in ("two", "left"):
        fwd[:n] = lfilter([1.0], [1.0, -q], r[::-1])[::-1]
        updates += n
    if side in ("two", "right"):
        bwd[1:] = q * lfilter([1.0], [1.0, -q], r)
        updates += n
    return fwd + bwd, updates


def _kernel_weights(kernel: Kernel, dh: float, h: float):
    lo_x, hi_x = kernel.breakpoints[0], kernel.breakpoints[-1]
    lo = int(math.ceil(lo_x / dh)) - 1
    hi = int(math.floor(hi_x / dh)) + 1
    m = np.arange(lo, hi + 1)
    w = np.asarray(kernel(m * dh), dtype=float) / h
    nz = np.nonzero(w)[0]
    if nz.size == 0:
        return 0, -1, np.zeros(0)
    return int(m[nz[0]]), int(m[nz[-1]]), w[nz[0]:nz[-1] + 1]


def _correlate(r: np.ndarray, lo: int, w: np.ndarray) -> np.ndarray:
    """For i = 0..n, sum_t w[t] r[i + lo + t] with zero padding."""
    n = r.size
    L = w.size
    rp = np.zeros(n + L)
    # rp[k] = r[k + lo]
    k0 = max(0, -lo)
    k1 = min(n + L, n - lo)
    if k1 > k0:
        rp[k0:k1] = r[k0 + lo:k1 + lo]
    if n * L <= 50_000_000:
        return np.correlate(rp, w, mode="valid")
    from scipy.signal import oaconvolve

    return oaconvolve(rp, w[::-1], mode="valid")


def grid_sums(r: np.ndarray, kernel: Kernel, h: float, delta: float, side: str = "two",
              stats: Optional[dict] = None):
    """Kernel-weighted sums and normalizers at every grid point t_0..t_n.

    Returns ``(num, den)`` with ``num[i] = sum_j K_h(t_{j-1} - t_i) r_j`` over
    the selected side and ``den[i] = delta * sum_j K_h(t_{j-1} - t_i)``.
    ``side='left'`` keeps j > i, ``side='right'`` keeps j <= i.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    h = _check_h(h)
    r = np.asarray(r, dtype=float)
    n = r.size
    dh = delta / h
    kind = kernel.kind
    if kind == "exponential":
        q = math.exp(-dh)
        num, u1 = _exp_sums(r, q, side)
        den, u2 = _exp_sums(np.ones(n), q, side)
        c = 0.5 / h
        path = "exponential-recursion"
        ops = u1 + u2
        num, den = c * num, c * delta * den
    elif kind == "uniform":
        reach = _uniform_reach(dh)
        lo, hi = _offset_range(side, -reach, reach)
        c = 0.5 / h
        num = c * _window_sums(r, lo, hi)
        den = c * delta * _window_sums(np.ones(n), lo, hi)
        path = "uniform-window"
        ops = 2 * (n + 1)
    else:
        lo, hi, w = _kernel_weights(kernel, dh, h)
        lo2, hi2 = _offset_range(side, lo, hi)
        w = w[lo2 - lo:hi2 - lo + 1] if hi2 >= lo2 else np.zeros(0)
        if w.size == 0:
            num = np.zeros(n + 1)
            den = np.zeros(n + 1)
        else:
            num = _correlate(r, lo2, w)
            den = delta * _correlate(np.ones(n), lo2, w)
        path = "direct"
        ops = 2 * (n + 1) * max(w.size, 1)
    if stats is not None:
        stats["path"] = path
        stats["state_updates"] = ops
    return num, den


def spot_vol_grid(path: PricePath, kernel: Kernel, h: float, boundary_corrected: bool = True,
                  stats: Optional[dict] = None) -> SpotVolSeries:
    """Estimates at every grid point t_0, ..., t_n."""
    num, den = grid_sums(path.squared_increments, kernel, h, path.delta, "two", stats)
    if boundary_corrected:
        if np.any(np.abs(den) <= TINY):
            bad = int(np.argmax(np.abs(den) <= TINY))
            raise DegenerateWeights(f"kernel normalizer vanishes at grid index {bad} (h={h})")
        est = num / den
    else:
        est = num
    return SpotVolSeries(path.times, est, float(h), kernel.name, boundary_corrected, "two")


def one_sided_series(path: PricePath, kernel: Kernel, h: float, side: str) -> np.ndarray:
    """Normalized one-sided estimates at every grid point; NaN where the side is empty.

    ``left`` uses increments j > i (data after t_i), ``right`` uses j <= i.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    num, den = grid_sums(path.squared_increments, kernel, h, path.delta, side)
    out = np.full(num.shape, np.nan)
    ok = np.abs(den) > TINY
    out[ok] = num[ok] / den[ok]
    return out


def one_sided(path: PricePath, kernel: Kernel, h: float, tau: float, side: str) -> float:
    """One-sided estimate at ``tau``.

    ``left`` sums increments starting at or after ``tau`` (j > i when
    tau = t_i), ``right`` those starting before it (j <= i).
    """
    h = _check_h(h)
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    t_left = path.times[:-1]
    pos = tau / path.delta
    if abs(pos - round(pos)) <= 1e-9:
        i = int(round(pos))
        idx = np.arange(1, path.n + 1)
        mask = idx > i if side == "left" else idx <= i
    else:
        mask = t_left >= tau if side == "left" else t_left < tau
    if not mask.any():
        raise EmptySide(f"no increments on the {side} side of tau={tau}")
    w = np.asarray(kernel((t_left[mask] - tau) / h)) / h
    den = path.delta * math.fsum(w)
    if abs(den) <= TINY:
        raise EmptySide(f"{side} side of tau={tau} has zero kernel mass")
    return math.fsum(w * path.squared_increments[mask]) / den


# ---- exponential recurrence and online update ------------------------------


@dataclass(frozen=True)
class ExpState:
    """Partial sums at a grid time for the exponential kernel with bandwidth h.

    ``minus`` covers increments starting before tau, ``star`` the one
    starting at tau, ``plus`` those starting after.
    """

    minus: float
    star: float
    plus: float
    h: float

    @property
    def estimate(self) -> float:
        return self.minus + self.star + self.plus


def exp_recurrence_step(state: ExpState, next_increment_sq: float, delta_over_h: float) -> ExpState:
    """Advance the three partial sums from tau to tau + delta.

    ``next_increment_sq`` is the squared increment that starts at tau + delta.
    The ``plus`` update multiplies by e^{delta/h}; it is exact in real
    arithmetic but amplifies rounding by that factor per step, so long
    sweeps should use :func:`spot_vol_grid` instead.
    """
    q = math.exp(-delta_over_h)
    k_next = next_increment_sq / (2.0 * state.h)
    return ExpState(
        minus=q * (state.minus + state.star),
        star=k_next,
        plus=(state.plus - q * k_next) / q,
        h=state.h,
    )


def exp_initial_state(path: PricePath, h: float) -> ExpState:
    """Partial sums at t_0 by direct summation."""
    r = path.squared_increments
    dh = path.delta / h
    weights = np.exp(-dh * np.arange(1, r.size)) / (2.0 * h)
    return ExpState(0.0, r[0] / (2.0 * h), math.fsum(weights * r[1:]), h)


def exp_recurrence_path(path: PricePath, h: float) -> np.ndarray:
    """Uncorrected exponential estimates at t_0..t_{n-1} by the three-part recurrence."""
    r = path.squared_increments
    dh = path.delta / h
    state = exp_initial_state(path, h)
    out = np.empty(path.n)
    out[0] = state.estimate
    for i in range(1, path.n):
        state = exp_recurrence_step(state, r[i], dh)
        out[i] = state.estimate
    return out


def online_update(prev_estimate: float, new_increment_sq: float, h: float, delta: float) -> float:
    """O(1) exponentially weighted update from past data only.

    Returns ``e^{-delta/h} (prev + r / (2h))``, which equals the uncorrected
    sum over j <= i of K_h(t_{j-1} - t_i) r_j with the two-sided exponential
    kernel.  Dividing by its normalizer gives the ``right`` one-sided estimate.
    """
    if not (h > 0 and delta > 0):
        raise ValueError("h and delta must be positive")
    return math.exp(-delta / h) * (prev_estimate + new_increment_sq / (2.0 * h))
