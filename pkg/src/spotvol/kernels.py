"""Kernel functions, their integral constants and admissibility checks.

All stored constants are full-line integrals.  Half-line table values for
symmetric kernels differ by a factor 2.

The scaling convention is ``K_h(x) = K(x / h) / h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from . import covariance as cv
from ._quadrature import integrate_1d
from .errors import SingularSystem

# tail cut for kernels with unbounded support: 0.5 * exp(-36) < 1e-14
_EXP_CUT = 36.0


@dataclass(frozen=True, eq=False)
class Kernel:
    """A kernel function with support ``(A, B)``.

    ``poly`` holds coefficients (increasing powers of |x|) for symmetric
    kernels that are polynomial on [-1, 1]; ``steps`` holds the bin
    heights of a mirrored step kernel on [0, 1].  Either enables closed
    forms for the constants; otherwise quadrature is used.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    support: Tuple[float, float]
    breakpoints: Tuple[float, ...]
    symmetric: bool = False
    poly: Optional[Tuple[float, ...]] = None
    steps: Optional[Tuple[float, ...]] = None
    params: Dict[str, object] = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.func(x)
        return out if np.ndim(out) else float(out)

    def __repr__(self) -> str:
        return f"Kernel({self.name!r})"

    @property
    def compact(self) -> bool:
        return bool(np.isfinite(self.support[0]) and np.isfinite(self.support[1]))

    @property
    def kind(self) -> str:
        return self.params.get("kind", "custom")

    # ---- constants -----------------------------------------------------

    @cached_property
    def _l2(self) -> float:
        if self.kind == "exponential":
            return 0.25
        if self.poly is not None:
            sq = P.polymul(self.poly, self.poly)
            return 2.0 * _poly_int01(sq)
        if self.steps is not None:
            a = np.asarray(self.steps)
            return 2.0 * float(np.sum(a * a)) / a.size
        return self.l2_norm_numeric()

    def l2_norm(self) -> float:
        """Integral of K^2 over the real line."""
        return self._l2

    def l2_norm_numeric(self) -> float:
        return integrate_1d(lambda x: self.func(x) ** 2, self.breakpoints)

    def integral(self) -> float:
        return integrate_1d(self.func, self.breakpoints)

    def moment(self, p: float, absolute: bool = False) -> float:
        """Integral of K(x) x^p (or |x|^p when ``absolute``)."""
        if self.symmetric and not absolute:
            if float(p).is_integer() and int(p) % 2 == 1:
                return 0.0
            if not float(p).is_integer():
                return self.moment_numeric(p, absolute)
        if self.symmetric:
            closed = self._abs_moment_closed(p)
            if closed is not None:
                return closed
        return self.moment_numeric(p, absolute)

    def moment_numeric(self, p: float, absolute: bool = False) -> float:
        if absolute:
            g = lambda x: self.func(x) * np.abs(x) ** p
        else:
            g = lambda x: self.func(x) * x ** p
        return integrate_1d(g, sorted(set(self.breakpoints) | {0.0}))

    def _abs_moment_closed(self, p: float) -> Optional[float]:
        if self.kind == "exponential":
            return math.gamma(p + 1.0)
        if self.poly is not None:
            return 2.0 * sum(c / (k + p + 1.0) for k, c in enumerate(self.poly))
        if self.steps is not None:
            a = np.asarray(self.steps)
            e = np.arange(a.size + 1) / a.size
            cell = (e[1:] ** (p + 1) - e[:-1] ** (p + 1)) / (p + 1)
            return 2.0 * float(np.dot(a, cell))
        return None

    def survivor(self, x: float) -> float:
        """Tail mass: integral of K over (x, infinity)."""
        hi = self.breakpoints[-1]
        if x >= hi:
            return 0.0
        pts = [x] + [b for b in self.breakpoints if b > x]
        return integrate_1d(self.func, pts)

    def cov_closed_form(self, cov: cv.CovStructure) -> Optional[float]:
        """Closed form of the double integral of K K C, or None."""
        if not self.symmetric or not cov.exact:
            return None
        if cov.kind == "deterministic":
            return self.moment(cov.power) ** 2
        if self.kind == "exponential":
            g = cov.gamma
            # |X - Y| for iid Laplace has density (1 + |d|) e^{-|d|} / 4
            return math.gamma(g + 1.0) * (2.0 - g) / 4.0
        if cov.kind == "brownian":
            if self.poly is not None:
                # 2 * integral over [0, 1] of the squared survivor function
                anti = P.polyint(self.poly)
                surv = P.polysub([P.polyval(1.0, anti)], anti)
                return 2.0 * _poly_int01(P.polymul(surv, surv))
            if self.steps is not None:
                return _step_fbm_form(np.asarray(self.steps), 1.0, same_sign_only=True)
            return None
        if cov.kind == "fbm" and self.steps is not None:
            return _step_fbm_form(np.asarray(self.steps), cov.gamma, same_sign_only=False)
        return None

    def cov_functional(self, cov: cv.CovStructure) -> float:
        return cv.quadratic_form(cov, self)

    def scaled(self, h: float) -> "Kernel":
        """The rescaled kernel x -> K(x / h) / h."""
        f = self.func
        lo, hi = self.support
        return Kernel(
            f"{self.name}@{h:g}",
            lambda x: f(np.asarray(x) / h) / h,
            (lo * h, hi * h),
            tuple(b * h for b in self.breakpoints),
            symmetric=self.symmetric,
        )


def _poly_int01(c) -> float:
    anti = P.polyint(c)
    return float(P.polyval(1.0, anti))


def _step_fbm_form(a: np.ndarray, g: float, same_sign_only: bool) -> float:
    """Exact double integral of K K C for a mirrored step kernel.

    Uses cell integrals of |x|^g and of |x - y|^g; the brownian form is the
    fbm form with g = 1 restricted to pairs of cells with equal sign.
    """
    m = a.size
    e = np.arange(m + 1) / m
    w = 1.0 / m
    pw = (e[1:] ** (g + 1) - e[:-1] ** (g + 1)) / (g + 1)
    c2 = (g + 1.0) * (g + 2.0)
    G = lambda u: np.abs(u) ** (g + 2) / c2

    def cross(lo1, hi1, lo2, hi2):
        # integral over two cells of |x - y|^g
        return -(G(hi1[:, None] - hi2[None, :]) - G(hi1[:, None] - lo2[None, :])
                 - G(lo1[:, None] - hi2[None, :]) + G(lo1[:, None] - lo2[None, :]))

    lo, hi = e[:-1], e[1:]
    same = cross(lo, hi, lo, hi)
    one_side = 0.5 * (np.add.outer(pw, pw) * w - same)
    total = 2.0 * float(a @ one_side @ a)
    if not same_sign_only:
        opp = cross(lo, hi, -hi, -lo)
        opp_form = 0.5 * (np.add.outer(pw, pw) * w - opp)
        total += 2.0 * float(a @ opp_form @ a)
    return total


# ---- built-in kernels ----------------------------------------------------


def _sym_poly_func(coeffs):
    c = np.asarray(coeffs, dtype=float)

    def f(x):
        ax = np.abs(x)
        return np.where(ax < 1.0, P.polyval(ax, c), 0.0)

    return f


def _poly_kernel(name: str, coeffs, **params) -> Kernel:
    return Kernel(
        name,
        _sym_poly_func(coeffs),
        (-1.0, 1.0),
        (-1.0, 0.0, 1.0),
        symmetric=True,
        poly=tuple(float(c) for c in coeffs),
        params=params,
    )


@lru_cache(maxsize=None)
def exponential() -> Kernel:
    return Kernel(
        "exponential",
        lambda x: 0.5 * np.exp(-np.abs(x)),
        (-math.inf, math.inf),
        (-_EXP_CUT, 0.0, _EXP_CUT),
        symmetric=True,
        params={"kind": "exponential"},
    )


@lru_cache(maxsize=None)
def uniform() -> Kernel:
    return _poly_kernel("uniform", [0.5], kind="uniform")


@lru_cache(maxsize=None)
def triangular() -> Kernel:
    return _poly_kernel("triangular", [1.0, -1.0], kind="triangular")


@lru_cache(maxsize=None)
def epanechnikov() -> Kernel:
    return _poly_kernel("epanechnikov", [0.75, 0.0, -0.75], kind="epanechnikov")


BUILTIN = {
    "exponential": exponential,
    "exp": exponential,
    "uniform": uniform,
    "unif": uniform,
    "triangular": triangular,
    "tri": triangular,
    "epanechnikov": epanechnikov,
    "epan": epanechnikov,
}


def get_kernel(name: str) -> Kernel:
    try:
        return BUILTIN[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(set(BUILTIN))}") from None


@lru_cache(maxsize=None)
def order_p_kernel(p: int) -> Kernel:
    """(p + 1) / (2p) * (1 - |x|^p) on [-1, 1]."""
    if int(p) != p or p < 1:
        raise ValueError("p must be an integer >= 1")
    p = int(p)
    c = (p + 1) / (2.0 * p)
    coeffs = np.zeros(p + 1)
    coeffs[0] = c
    coeffs[p] = -c
    return _poly_kernel(f"order{p}", coeffs, kind="order_p", p=p)


@lru_cache(maxsize=None)
def constrained_order_kernel(q: int) -> Kernel:
    """Symmetric polynomial kernel of order 2q on [-1, 1].

    Writes K = a x^{2q} + sum_i mu_i x^{2i} (mu_i = a * lambda_i).  The moment
    constraints are q linear equations in these q + 1 unknowns; the remaining
    stationarity equation is quadratic along the one free direction and is
    always a perfect square, so its (double) root is the vertex.
    """
    if int(q) != q or q < 1:
        raise ValueError("q must be an integer >= 1")
    q = int(q)
    rows, rhs = [], []
    for r in range(1, q):
        rows.append([1.0 / (2 * q + 2 * r + 1)] + [1.0 / (2 * i + 2 * r + 1) for i in range(q)])
        rhs.append(0.0)
    rows.append([1.0 / (2 * q + 1)] + [1.0 / (2 * i + 1) for i in range(q)])
    rhs.append(0.5)
    M = np.array(rows)
    rhs = np.array(rhs)
    u, s, vt = np.linalg.svd(M)
    if s[-1] <= 0 or s[0] / s[-1] > 1e12:
        raise SingularSystem(f"moment matrix condition number {s[0] / max(s[-1], 1e-300):.3g}")
    z0 = vt[:q].T @ ((u.T @ rhs) / s)
    v = vt[-1]

    def stationarity(z):
        a, mu = z[0], z[1:]
        m2q = a / (4 * q + 1) + sum(mu[i] / (2 * q + 2 * i + 1) for i in range(q))
        return (4 * q + 1) * a * m2q + 0.5 * mu[0]

    f0, fp, fm = stationarity(z0), stationarity(z0 + v), stationarity(z0 - v)
    c2 = 0.5 * (fp + fm) - f0
    c1 = 0.5 * (fp - fm)
    if abs(c2) < 1e-300:
        raise SingularSystem("stationarity equation is degenerate")
    z = z0 - c1 / (2.0 * c2) * v
    coeffs = np.zeros(2 * q + 1)
    coeffs[2 * q] = z[0]
    for i in range(q):
        coeffs[2 * i] = z[1 + i]
    return _poly_kernel(f"constrained{2 * q}", coeffs, kind="constrained", q=q)


def step_kernel(coeffs: Sequence[float]) -> Kernel:
    """Mirrored step kernel on [-1, 1], normalized to unit integral."""
    a = np.asarray(coeffs, dtype=float)
    m = a.size
    if m < 1:
        raise ValueError("need at least one coefficient")
    mass = 2.0 * a.sum() / m
    if abs(mass) < 1e-12:
        from .errors import ZeroMass

        raise ZeroMass("step coefficients sum to zero")
    a = a / mass

    def f(x):
        ax = np.abs(np.asarray(x, dtype=float))
        idx = np.minimum((ax * m).astype(np.int64), m - 1)
        return np.where(ax < 1.0, a[idx], 0.0)

    edges = np.arange(-m, m + 1) / m
    return Kernel(
        f"step{m}",
        f,
        (-1.0, 1.0),
        tuple(edges.tolist()),
        symmetric=True,
        steps=tuple(a.tolist()),
        params={"kind": "step"},
    )


def from_function(
    func: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    name: str = "custom",
    symmetric: bool = False,
    support: Optional[Tuple[float, float]] = None,
) -> Kernel:
    """Wrap an arbitrary vectorized function; constants use quadrature.

    ``breakpoints`` must bracket the (effective) support and include every
    kink or jump of ``func``.
    """
    bps = tuple(sorted(set(float(b) for b in breakpoints)))
    return Kernel(name, func, support or (bps[0], bps[-1]), bps, symmetric=symmetric)


def one_sided_exponential() -> Kernel:
    """e^{-x} on x > 0, zero elsewhere."""
    return from_function(
        lambda x: np.where(np.asarray(x) > 0, np.exp(-np.abs(x)), 0.0),
        (0.0, 2 * _EXP_CUT),
        name="one_sided_exponential",
        support=(0.0, math.inf),
    )


def symmetrize(kernel: Kernel) -> Kernel:
    """(K(x) + K(-x)) / 2; symmetric input is returned unchanged."""
    if kernel.symmetric:
        return kernel
    f = kernel.func
    bps = sorted(set(kernel.breakpoints) | {-b for b in kernel.breakpoints})
    lo = min(kernel.support[0], -kernel.support[1])
    hi = max(kernel.support[1], -kernel.support[0])
    return Kernel(
        f"sym({kernel.name})",
        lambda x: 0.5 * (f(np.asarray(x)) + f(-np.asarray(x))),
        (lo, hi),
        tuple(bps),
        symmetric=True,
    )


def eval_kernel(kernel: Kernel, x):
    return kernel(x)


def l2_norm(kernel: Kernel) -> float:
    return kernel.l2_norm()


def bm_objective_I(kernel: Kernel) -> float:
    """Integral of K^2 times the double integral of K K min over the plane."""
    return kernel.l2_norm() * cv.quadratic_form(cv.brownian(), kernel)


# ---- admissibility ---------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    unit_integral: bool
    lipschitz: bool
    tails: bool
    positive_form: bool
    integral: float
    lipschitz_bound: float
    form_value: float

    @property
    def passed(self) -> bool:
        return self.unit_integral and self.lipschitz and self.tails and self.positive_form


def check_admissible(kernel: Kernel, cov: cv.CovStructure) -> AdmissibilityReport:
    integral = kernel.integral()
    unit = abs(integral - 1.0) < 1e-9

    if kernel.steps is not None:
        # finite-difference bound at bin resolution
        a = np.asarray(kernel.steps)
        m = a.size
        diffs = np.abs(np.diff(np.concatenate([a, [0.0]]))) * m
        bound = float(diffs.max()) if diffs.size else 0.0
        lip = bool(np.isfinite(bound))
    elif kernel.kind != "custom":
        bound, lip = math.nan, True
    else:
        x = np.linspace(kernel.breakpoints[0], kernel.breakpoints[-1], 20001)
        y = kernel.func(x)
        bound = float(np.max(np.abs(np.diff(y)) / np.diff(x)))
        lip = bool(np.isfinite(bound))

    g = cov.gamma
    if kernel.compact or kernel.kind == "exponential":
        tails = True
    else:
        ends = np.array([kernel.breakpoints[0], kernel.breakpoints[-1]])
        decay = np.abs(kernel.func(ends) * np.abs(ends) ** (g + 1))
        tails = bool(np.all(decay < 1e-8)) and math.isfinite(kernel.moment(g, absolute=True))

    form = cv.quadratic_form(cov, kernel)
    return AdmissibilityReport(unit, lip, tails, form > 1e-12, integral, bound, form)
