"""Numerical optimal kernels for fractional covariance structures.

The kernel is a mirrored step function on [-1, 1] with bin heights ``a`` on
[0, 1].  Its (scale-free) objective is::

    f(a) = m^g (sum a_i^2)^g (a' A a) / |sum a_i|^(2g + 2)
    A_ij = x_i^g + x_j^g - |x_i + x_j|^g / 2 - |x_i - x_j|^g / 2

with bin midpoints ``x_i = (i - 0.5) / m``.  ``f`` is homogeneous of degree
zero, so the gradient is orthogonal to ``a``.  For g = 1, ``f`` is four times
the product of the squared norm and the Brownian covariance form of the
normalized kernel.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from .errors import ZeroMass
from .kernels import Kernel, step_kernel

logger = logging.getLogger(__name__)

MAX_ITER = 100_000
MIN_STEP = 1e-10


@lru_cache(maxsize=32)
def _interaction(gamma: float, m: int) -> np.ndarray:
    x = (np.arange(1, m + 1) - 0.5) / m
    xg = x ** gamma
    A = xg[:, None] + xg[None, :] - 0.5 * np.abs(x[:, None] + x[None, :]) ** gamma \
        - 0.5 * np.abs(x[:, None] - x[None, :]) ** gamma
    A.setflags(write=False)
    return A


def interaction_matrix(gamma: float, m: int) -> np.ndarray:
    return _interaction(float(gamma), int(m)).copy()


def _mass(a: np.ndarray) -> float:
    s1 = float(np.sum(a))
    if abs(s1) < 1e-12:
        raise ZeroMass("coefficients sum to zero")
    return s1


def objective_f(a, gamma: float, m: int) -> float:
    a = np.asarray(a, dtype=float)
    if a.size != m:
        raise ValueError("len(a) must equal m")
    s1 = _mass(a)
    A = _interaction(float(gamma), int(m))
    s2 = float(a @ a)
    quad = float(a @ A @ a)
    return m ** gamma * s2 ** gamma * quad / abs(s1) ** (2 * gamma + 2)


def objective_gradient(a, gamma: float, m: int) -> np.ndarray:
    """Quotient-rule gradient of :func:`objective_f`."""
    a = np.asarray(a, dtype=float)
    s1 = _mass(a)
    A = _interaction(float(gamma), int(m))
    s2 = float(a @ a)
    Aa = A @ a
    quad = float(a @ Aa)
    p = 2 * gamma + 2
    den = abs(s1) ** p
    top = m ** gamma * (gamma * s2 ** (gamma - 1) * 2 * a * quad + s2 ** gamma * 2 * Aa)
    return top / den - p * math.copysign(1.0, s1) * m ** gamma * s2 ** gamma * quad / abs(s1) ** (p + 1)


@dataclass(frozen=True)
class DescentResult:
    restart: int
    coeffs: np.ndarray
    objective: float
    initial_objective: float
    iterations: int
    final_step: float


@dataclass(frozen=True)
class StepKernel:
    gamma: float
    coeffs: np.ndarray

    @property
    def m(self) -> int:
        return self.coeffs.size

    def kernel(self) -> Kernel:
        return step_kernel(self.coeffs)


def _descend(gamma: float, m: int, restart: int, seed: int, max_iter: int, min_step: float) -> DescentResult:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(restart),)))
    a = 1.0 - rng.random(m)  # uniform on (0, 1]
    a = a / a.mean()
    fa = objective_f(a, gamma, m)
    f0 = fa
    g = objective_gradient(a, gamma, m)
    step = 1.0 / max(float(np.linalg.norm(g)), 1e-300)
    it = 0
    while it < max_iter and step >= min_step:
        it += 1
        trial = a - step * g
        try:
            ft = objective_f(trial, gamma, m)
        except ZeroMass:
            ft = math.inf
        if ft < fa:
            # f is scale free, so rescale to unit mean to keep step sizes comparable
            a = trial / trial.mean()
            fa = ft
            g = objective_gradient(a, gamma, m)
        else:
            step *= 0.5
    return DescentResult(restart, a, fa, f0, it, step)


def _normalized(a: np.ndarray) -> np.ndarray:
    """Bin heights of the unit-integral mirrored kernel."""
    return a / (2.0 * a.sum() / a.size)


def optimize(gamma: float, m: int = 128, restarts: int = 8, seed: int = 0, workers: int = 1,
             max_iter: int = MAX_ITER, min_step: float = MIN_STEP) -> Tuple[StepKernel, float, List[DescentResult]]:
    """Gradient descent with step halving from ``restarts`` random starts.

    Returns the best kernel (unit integral), its objective and all runs.
    Ties are broken by restart index, so the result does not depend on
    ``workers``.
    """
    if not 1.0 <= gamma < 2.0:
        raise ValueError("gamma must lie in [1, 2)")
    if m < 8 or restarts < 1:
        raise ValueError("need m >= 8 and restarts >= 1")
    args = [(float(gamma), int(m), r, int(seed), int(max_iter), float(min_step)) for r in range(restarts)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_descend, *zip(*args)))
    else:
        runs = [_descend(*a) for a in args]
    best = min(runs, key=lambda r: (r.objective, r.restart))
    logger.info("optimize gamma=%g m=%d: best %.8g (restart %d, %d iterations)",
                gamma, m, best.objective, best.restart, best.iterations)
    return StepKernel(float(gamma), _normalized(best.coeffs)), best.objective, runs


def discretized_exponential(m: int, tail: float = 1e-6) -> np.ndarray:
    """Bin heights of e^{-|x|} truncated where its two-sided tail mass is ``tail``, mapped to [0, 1]."""
    cut = -math.log(tail)
    x = (np.arange(1, m + 1) - 0.5) / m
    return np.exp(-cut * x)
