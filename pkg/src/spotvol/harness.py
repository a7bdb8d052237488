"""Monte Carlo experiments on simulated Heston paths.

Every replication draws its own random stream from ``(seed, scenario, path)``
and per-path results are reduced in path order, so reports are identical for
any number of workers.
"""

from __future__ import annotations

import configparser
import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import covariance as cv
from .bandwidth import cross_validate, initial_bandwidth, log_grid, oracle_bandwidth, plugin_select
from .errors import ConfigError, SpotVolError
from .estimator import spot_vol_at, spot_vol_grid
from .io import metadata_header, write_rows
from .kernels import get_kernel
from .simulate import HestonConfig, MuSpec, TRADING_DAYS, grid_size, path_rng, simulate_heston
from .volvol import K_MODES, default_b, default_k, heston_xi, matched_integrated_variance, tsrvv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HestonParams:
    kappa: float = 5.0
    theta: float = 0.04
    xi: float = 0.5
    v0: float = 0.04
    x0: float = 1.0
    mu_alpha: float = 0.05
    mu_beta: float = -0.5
    substeps: int = 10

    def config(self, days: int, samples_per_hour: int, rho: float, xi: Optional[float] = None) -> HestonConfig:
        return HestonConfig(
            kappa=self.kappa, theta=self.theta, xi=self.xi if xi is None else xi, rho=rho,
            mu=MuSpec(self.mu_alpha, self.mu_beta), x0=self.x0, v0=self.v0,
            n=grid_size(days, samples_per_hour), T=days / TRADING_DAYS, substeps=self.substeps,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    days: Tuple[int, ...] = (5, 21)
    samples_per_hour: Tuple[int, ...] = (12, 60)
    rho: Tuple[float, ...] = (0.0, -0.5)
    paths: int = 500
    seed: int = 0
    kernels: Tuple[str, ...] = ("exponential",)
    methods: Tuple[str, ...] = ("plugin",)
    trim: float = 0.1
    max_iter: int = 2
    rel_tol: float = 0.01
    report_iterations: bool = False
    k_mode: str = "two_thirds"
    cv_lo: float = 0.1
    cv_hi: float = 2.0
    cv_count: int = 30
    xis: Tuple[float, ...] = (0.2, 0.5)
    heston: HestonParams = HestonParams()

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigError("paths must be >= 1")
        if not 0 <= self.trim <= 0.4:
            raise ConfigError("trim must lie in [0, 0.4]")
        if self.k_mode not in K_MODES:
            raise ConfigError(f"k_mode must be one of {sorted(K_MODES)}")
        for m in self.methods:
            if m not in ("plugin", "cv", "oracle") and not m.startswith("fixed:"):
                raise ConfigError(f"unknown bandwidth method {m!r}")
            if m.startswith("fixed:"):
                try:
                    if not float(m[6:]) > 0:
                        raise ValueError
                except ValueError:
                    raise ConfigError(f"bad fixed bandwidth {m!r}") from None
        for k in self.kernels:
            try:
                get_kernel(k)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def scenarios(self) -> List[Tuple[int, int, float]]:
        return [(d, s, r) for d in self.days for s in self.samples_per_hour for r in self.rho]


# ---- config files --------------------------------------------------------------

_TUPLE_INT = ("days", "samples_per_hour")
_TUPLE_FLOAT = ("rho", "xis")
_TUPLE_STR = ("kernels", "methods")


def _coerce(name: str, raw: str, proto):
    raw = raw.strip()
    try:
        if name in _TUPLE_INT:
            return tuple(int(v) for v in raw.split(","))
        if name in _TUPLE_FLOAT:
            return tuple(float(v) for v in raw.split(","))
        if name in _TUPLE_STR:
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        if isinstance(proto, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(proto, int):
            return int(raw)
        if isinstance(proto, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def load_config(source, **overrides) -> ExperimentConfig:
    """Read an INI file with sections ``[experiment]`` and ``[heston]``; unknown keys are errors."""
    parser = configparser.ConfigParser()
    try:
        if source is not None:
            text = Path(source).read_text()
            parser.read_string(text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    for sec in parser.sections():
        if sec not in ("experiment", "heston"):
            raise ConfigError(f"unknown config section [{sec}]")
    base = ExperimentConfig.__dataclass_fields__
    hp = HestonParams()
    hkw = {}
    if parser.has_section("heston"):
        for key, raw in parser.items("heston"):
            if key not in HestonParams.__dataclass_fields__:
                raise ConfigError(f"unknown key {key!r} in [heston]")
            hkw[key] = _coerce(key, raw, getattr(hp, key))
    ekw = {}
    proto = ExperimentConfig()
    if parser.has_section("experiment"):
        for key, raw in parser.items("experiment"):
            if key not in base or key == "heston":
                raise ConfigError(f"unknown key {key!r} in [experiment]")
            ekw[key] = _coerce(key, raw, getattr(proto, key))
    ekw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(heston=HestonParams(**hkw), **ekw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


# ---- reports -----------------------------------------------------------------


@dataclass
class ExperimentReport:
    header: List[str]
    rows: List[list]
    metadata: Dict[str, object] = field(default_factory=dict)
    samples: Dict[tuple, np.ndarray] = field(default_factory=dict)

    def body(self) -> str:
        import io as _io
        import csv

        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row])
        return buf.getvalue()

    def to_csv(self, dest) -> None:
        Path(dest).write_text(metadata_header(self.metadata) + self.body())

    def lookup(self, **match) -> List[dict]:
        out = []
        for row in self.rows:
            rec = dict(zip(self.header, row))
            if all(rec.get(k) == v for k, v in match.items()):
                out.append(rec)
        return out


def trimmed_ase(estimates: np.ndarray, truth: np.ndarray, trim: float) -> float:
    """Average squared error over grid indices l..n-l with l = floor(trim * n)."""
    n = estimates.size - 1
    l = int(math.floor(trim * n))
    e = estimates[l:n - l + 1] - truth[l:n - l + 1]
    return math.fsum(e * e) / (n - 2 * l + 1)


def _mean_se(x: np.ndarray) -> Tuple[float, float]:
    x = x[np.isfinite(x)]
    if x.size == 0:
        return math.nan, math.nan
    mean = math.fsum(x) / x.size
    if x.size < 2:
        return mean, math.nan
    var = math.fsum((x - mean) ** 2) / (x.size - 1)
    return mean, math.sqrt(var / x.size)


def _run_parallel(func, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, tasks, chunksize=chunk))


def _method_labels(cfg: ExperimentConfig) -> List[str]:
    labels = []
    for m in cfg.methods:
        labels.append(m)
        if m == "plugin" and cfg.report_iterations:
            labels += [f"plugin@{i}" for i in range(cfg.max_iter + 1)]
    return labels


def _mase_task(args):
    cfg, scen_id, (days, sph, rho), idx = args
    hcfg = cfg.heston.config(days, sph, rho)
    sim = simulate_heston(hcfg, path_rng(cfg.seed, scen_id, idx))
    path = sim.path
    out = {}
    for kname in cfg.kernels:
        kern = get_kernel(kname)
        for m in cfg.methods:
            try:
                if m == "plugin":
                    if cfg.report_iterations:
                        plan, series = plugin_select(path, kern, max_iter=cfg.max_iter, rel_tol=0.0,
                                                     k=default_k(path.n, cfg.k_mode))
                        hs = [s.h for s in plan.history]
                        for i, h in enumerate(hs):
                            est = spot_vol_grid(path, kern, h).estimates
                            out[(kname, f"plugin@{i}")] = (trimmed_ase(est, sim.true_var, cfg.trim), h)
                        # the stopping rule applied to the full history
                        stop = len(hs) - 1
                        for i in range(1, len(hs)):
                            if abs(hs[i] - hs[i - 1]) <= cfg.rel_tol * hs[i - 1]:
                                stop = i
                                break
                        out[(kname, "plugin")] = out[(kname, f"plugin@{stop}")]
                        continue
                    plan, series = plugin_select(path, kern, max_iter=cfg.max_iter, rel_tol=cfg.rel_tol,
                                                 k=default_k(path.n, cfg.k_mode))
                    h = plan.h
                elif m == "oracle":
                    h = oracle_bandwidth(path.n, path.T, sim.true_iq, hcfg.xi ** 2 * sim.true_iv, kern)
                elif m == "cv":
                    h0 = initial_bandwidth(path.n, path.T, kern)
                    grid = log_grid(cfg.cv_lo * h0, cfg.cv_hi * h0, cfg.cv_count)
                    h = cross_validate(path, kern, grid, cfg.trim).h
                else:
                    h = float(m[6:])
                est = spot_vol_grid(path, kern, h).estimates
                out[(kname, m)] = (trimmed_ase(est, sim.true_var, cfg.trim), h)
            except SpotVolError as exc:
                logger.debug("path %d %s/%s failed: %s", idx, kname, m, exc)
                out[(kname, m)] = (math.nan, math.nan)
    return out


def run_mase(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    labels = _method_labels(cfg)
    header = ["days", "samples_per_hour", "rho", "n", "kernel", "method", "paths", "failures",
              "mase", "se", "mean_h"]
    rows, samples = [], {}
    failures_total = 0
    for scen_id, scen in enumerate(cfg.scenarios()):
        tasks = [(cfg, scen_id, scen, i) for i in range(cfg.paths)]
        results = _run_parallel(_mase_task, tasks, workers)
        days, sph, rho = scen
        for kname in cfg.kernels:
            for m in labels:
                ase = np.array([r[(kname, m)][0] for r in results])
                hs = np.array([r[(kname, m)][1] for r in results])
                fails = int(np.sum(~np.isfinite(ase)))
                failures_total += fails
                mase, se = _mean_se(ase)
                mh, _ = _mean_se(hs)
                rows.append([days, sph, rho, grid_size(days, sph), kname, m, cfg.paths - fails, fails, mase, se, mh])
                samples[(days, sph, rho, kname, m)] = ase
    meta = {
        "experiment": "mase", "seed": cfg.seed, "paths": cfg.paths, "trim": cfg.trim,
        "failures": failures_total, "version": __version__, "scale_hint": "raw (multiply by 1e5 for table units)",
        "runtime_s": round(time.perf_counter() - t0, 3),
    }
    return ExperimentReport(header, rows, meta, samples)


def _volvol_task(args):
    cfg, scen_id, (days, sph, rho), xi, idx = args
    hcfg = cfg.heston.config(days, sph, rho, xi=xi)
    sim = simulate_heston(hcfg, path_rng(cfg.seed, scen_id, idx))
    path = sim.path
    kern = get_kernel(cfg.kernels[0])
    k = default_k(path.n, cfg.k_mode)
    b = default_b(path.n)
    try:
        plan, _ = plugin_select(path, kern, max_iter=cfg.max_iter, rel_tol=cfg.rel_tol, k=k, b=b)
        vv = tsrvv(path, kern, plan.h, k, b)
        iv = matched_integrated_variance(path, k, b)
        return heston_xi(vv.ivv, iv), vv.used_fallback
    except SpotVolError as exc:
        logger.debug("path %d failed: %s", idx, exc)
        return math.nan, False


def run_volvol(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    header = ["days", "samples_per_hour", "rho", "xi", "n", "k", "paths", "failures", "fallbacks",
              "bias", "std", "rmse", "median"]
    rows, samples = [], {}
    scen_id = 0
    for scen in cfg.scenarios():
        for xi in cfg.xis:
            tasks = [(cfg, scen_id, scen, xi, i) for i in range(cfg.paths)]
            res = _run_parallel(_volvol_task, tasks, workers)
            scen_id += 1
            est = np.array([r[0] for r in res])
            fb = int(sum(bool(r[1]) for r in res))
            ok = est[np.isfinite(est)]
            fails = est.size - ok.size
            days, sph, rho = scen
            n = grid_size(days, sph)
            if ok.size:
                mean = math.fsum(ok) / ok.size
                std = math.sqrt(math.fsum((ok - mean) ** 2) / max(ok.size - 1, 1))
                rmse = math.sqrt(math.fsum((ok - xi) ** 2) / ok.size)
                med = float(np.median(ok))
            else:
                mean = std = rmse = med = math.nan
            rows.append([days, sph, rho, xi, n, default_k(n, cfg.k_mode), ok.size, fails, fb,
                         mean - xi, std, rmse, med])
            samples[(days, sph, rho, xi)] = est
    meta = {"experiment": "volvol", "seed": cfg.seed, "paths": cfg.paths, "kernel": cfg.kernels[0],
            "version": __version__, "runtime_s": round(time.perf_counter() - t0, 3)}
    return ExperimentReport(header, rows, meta, samples)


# ---- convergence rate at a fixed time ------------------------------------------------


def _rate_task(args):
    seed, n_id, n, T, idx, kname, hp = args
    hcfg = HestonConfig(kappa=hp.kappa, theta=hp.theta, xi=hp.xi, rho=0.0, mu=MuSpec(hp.mu_alpha, hp.mu_beta),
                        x0=hp.x0, v0=hp.v0, n=n, T=T, substeps=hp.substeps)
    sim = simulate_heston(hcfg, path_rng(seed, n_id, idx))
    kern = get_kernel(kname)
    h = oracle_bandwidth(n, T, sim.true_iq, hcfg.xi ** 2 * sim.true_iv, kern)
    est = spot_vol_at(sim.path, kern, h, T / 2, boundary_corrected=True)
    return (est - sim.true_var[n // 2]) ** 2


def run_rate(ns: Sequence[int], paths: int, seed: int = 0, T: float = 21 / TRADING_DAYS,
             kernel: str = "exponential", heston: HestonParams = HestonParams(), workers: int = 1):
    """MSE at tau = T/2 with the per-path oracle bandwidth, and the log-log slope in n."""
    mse, se = [], []
    for n_id, n in enumerate(ns):
        if n % 2:
            raise ValueError("n must be even so that T/2 is a grid point")
        tasks = [(seed, n_id, int(n), T, i, kernel, heston) for i in range(paths)]
        err = np.array(_run_parallel(_rate_task, tasks, workers))
        m, s = _mean_se(err)
        mse.append(m)
        se.append(s)
    slope = float(np.polyfit(np.log(ns), np.log(mse), 1)[0])
    return np.array(mse), np.array(se), slope
