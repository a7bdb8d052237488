"""Ground-truth path generators: Heston, fractional Gaussian noise, fOU.

Every generator takes a ``numpy.random.Generator``.  Monte Carlo code gets
one independent stream per replication from :func:`path_rng`, so results do
not depend on how replications are distributed over workers.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import EmbeddingNotPSD
from .estimator import PricePath

logger = logging.getLogger(__name__)

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


TRADING_DAYS = 252
HOURS_PER_DAY = 6.5


def path_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for the replication labelled ``keys`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def grid_size(days: int, samples_per_hour: int) -> int:
    """Number of increments for ``days`` trading days sampled ``samples_per_hour`` times an hour."""
    return int(round(days * HOURS_PER_DAY * samples_per_hour))


@dataclass(frozen=True)
class MuSpec:
    """Affine drift mu_t = alpha + beta * V_t."""

    alpha: float = 0.0
    beta: float = 0.0


@dataclass(frozen=True)
class HestonConfig:
    kappa: float = 5.0
    theta: float = 0.04
    xi: float = 0.5
    rho: float = 0.0
    mu: MuSpec = MuSpec(0.05, -0.5)
    x0: float = 1.0
    v0: float = 0.04
    n: int = 1638
    T: float = 21 / TRADING_DAYS
    substeps: int = 10

    def __post_init__(self):
        if self.kappa <= 0 or self.theta <= 0 or self.xi < 0:
            raise ValueError("kappa, theta must be positive and xi non-negative")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")
        if not 2 * self.kappa * self.theta > self.xi ** 2:
            raise ValueError("Feller condition 2 kappa theta > xi^2 violated")
        if self.v0 <= 0 or self.T <= 0:
            raise ValueError("v0 and T must be positive")
        if self.n < 2 or self.substeps < 1:
            raise ValueError("need n >= 2 and substeps >= 1")

    @classmethod
    def scenario(cls, days: int, samples_per_hour: int, **kw) -> "HestonConfig":
        return cls(n=grid_size(days, samples_per_hour), T=days / TRADING_DAYS, **kw)


@dataclass
class SimulatedPath:
    path: PricePath
    true_var: np.ndarray
    true_iv: float
    true_iq: float
    meta: Dict[str, object] = field(default_factory=dict)


@njit(cache=True)
def _heston_euler(z1, z2, x0, v0, kappa, theta, xi, rho, alpha, beta, dt, substeps, n):
    xs = np.empty(n + 1)
    vs = np.empty(n + 1)
    sq = math.sqrt(dt)
    rc = math.sqrt(max(1.0 - rho * rho, 0.0))
    x = x0
    v = v0
    xs[0] = x
    vs[0] = v
    iv = 0.0
    iq = 0.0
    k = 0
    for i in range(n):
        for _ in range(substeps):
            vp = v if v > 0.0 else 0.0
            sv = math.sqrt(vp)
            dw = sq * z1[k]
            db = sq * (rho * z1[k] + rc * z2[k])
            x += (alpha + beta * vp) * dt + sv * db
            v = v + kappa * (theta - vp) * dt + xi * sv * dw
            vn = v if v > 0.0 else 0.0
            iv += 0.5 * (vp + vn) * dt
            iq += 0.5 * (vp * vp + vn * vn) * dt
            k += 1
        xs[i + 1] = x
        vs[i + 1] = v if v > 0.0 else 0.0
    return xs, vs, iv, iq


def simulate_heston(cfg: HestonConfig, rng: np.random.Generator) -> SimulatedPath:
    """Full-truncation Euler on a grid ``substeps`` times finer than the observations."""
    steps = cfg.n * cfg.substeps
    z = rng.standard_normal((2, steps))
    dt = cfg.T / steps
    xs, vs, iv, iq = _heston_euler(
        z[0], z[1], cfg.x0, cfg.v0, cfg.kappa, cfg.theta, cfg.xi, cfg.rho,
        cfg.mu.alpha, cfg.mu.beta, dt, cfg.substeps, cfg.n,
    )
    return SimulatedPath(PricePath(cfg.T, xs), vs, iv, iq, {"model": "heston"})


def cir_mean(cfg: HestonConfig, t: float) -> float:
    return cfg.theta + (cfg.v0 - cfg.theta) * math.exp(-cfg.kappa * t)


def cir_variance(cfg: HestonConfig, t: float) -> float:
    e = math.exp(-cfg.kappa * t)
    k, th, s2 = cfg.kappa, cfg.theta, cfg.xi ** 2
    return cfg.v0 * s2 / k * (e - e * e) + th * s2 / (2 * k) * (1 - e) ** 2


def fgn_autocovariance(hurst: float, k) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=float))
    g = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** g - 2 * k ** g + np.abs(k - 1) ** g)


def _circulant_eigs(hurst: float, size: int, info: Optional[dict]):
    row = fgn_autocovariance(hurst, np.arange(size + 1))
    first = np.concatenate([row, row[-2:0:-1]])
    lam = np.fft.fft(first).real
    worst = float(lam.min())
    if worst < -1e-10:
        raise EmbeddingNotPSD(f"circulant eigenvalue {worst:.3g} below -1e-10 (H={hurst}, size={size})")
    clamped = int(np.sum(lam < 0))
    if clamped:
        warnings.warn(f"clamped {clamped} slightly negative circulant eigenvalues (min {worst:.3g})")
        lam = np.maximum(lam, 0.0)
    if info is not None:
        info["clamped"] = clamped
        info["min_eigenvalue"] = worst
    return lam


def simulate_fbm(hurst: float, n: int, T: float, rng: np.random.Generator,
                 info: Optional[dict] = None) -> np.ndarray:
    """``n`` fractional Gaussian noise increments of fBM on [0, T] (exact covariance)."""
    if not 0 < hurst < 1:
        raise ValueError("Hurst index must lie in (0, 1)")
    if n < 2:
        raise ValueError("need n >= 2")
    size = 1 << (int(n) - 1).bit_length()
    lam = _circulant_eigs(hurst, size, info)
    m = lam.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    y = np.fft.fft(np.sqrt(lam / m) * z).real[:n]
    return y * (T / n) ** hurst


def simulate_fou(lambda_: float, sigma: float, hurst: float, n: int, T: float, rng: np.random.Generator,
                 substeps: int = 1, y_init: float = 0.0, burn_in: Optional[float] = None,
                 return_fine: bool = False):
    """Fractional Ornstein-Uhlenbeck path at t_0..t_n via Euler on a fine grid.

    A burn-in of ``10 / lambda_`` time units (default) precedes t_0 and is
    discarded.  With ``return_fine`` the fine-grid path on [0, T] is returned.
    """
    if lambda_ <= 0 or sigma < 0:
        raise ValueError("lambda must be positive, sigma non-negative")
    if not 0.5 < hurst < 1:
        raise ValueError("Hurst index must lie in (1/2, 1)")
    dt = T / (n * substeps)
    burn = 10.0 / lambda_ if burn_in is None else burn_in
    nb = int(math.ceil(burn / dt))
    total = nb + n * substeps
    db = simulate_fbm(hurst, total, total * dt, rng) if sigma > 0 else np.zeros(total)
    y = _fou_euler(db, y_init, lambda_ * dt, sigma)
    fine = y[nb:]
    return fine if return_fine else fine[::substeps]


@njit(cache=True)
def _fou_euler(db, y0, ldt, sigma):
    out = np.empty(db.size + 1)
    y = y0
    out[0] = y
    for i in range(db.size):
        y = y * (1.0 - ldt) + sigma * db[i]
        out[i + 1] = y
    return out


def synthesize_price(var_path, mu: MuSpec, n: int, T: float, rng: np.random.Generator,
                     x0: float = 0.0) -> SimulatedPath:
    """Price path from a variance path on a fine grid independent of the price noise.

    ``var_path`` has ``n * s + 1`` values on the fine grid for an integer ``s``.
    """
    v = np.asarray(var_path, dtype=float)
    steps = v.size - 1
    if steps % n:
        raise ValueError("fine grid length must be a multiple of n plus one")
    if np.any(v < 0):
        raise ValueError("variance path must be non-negative")
    s = steps // n
    dt = T / steps
    vl = v[:-1]
    dx = (mu.alpha + mu.beta * vl) * dt + np.sqrt(vl * dt) * rng.standard_normal(steps)
    x = np.concatenate([[x0], x0 + np.cumsum(dx)])
    iv = float(np.sum(0.5 * (v[1:] + v[:-1])) * dt)
    iq = float(np.sum(0.5 * (v[1:] ** 2 + v[:-1] ** 2)) * dt)
    return SimulatedPath(PricePath(T, x[::s]), v[::s], iv, iq, {"model": "synthetic"})
