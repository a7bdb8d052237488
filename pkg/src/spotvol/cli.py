"""Command line entry point: ``spotvol <subcommand> ...``.

Exit codes: 0 success, 1 numerical failure, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from . import covariance as cv
from .asymptotics import confidence_bands
from .bandwidth import cross_validate, initial_bandwidth, log_grid, oracle_bandwidth, plugin_select
from .errors import ConfigError, DataError, SpotVolError
from .estimator import spot_vol_grid
from .io import metadata_header, read_price_csv, write_rows, write_series_csv, write_simulated_csv, write_step_kernel
from .kernels import get_kernel
from .simulate import HestonConfig, MuSpec, TRADING_DAYS, grid_size, path_rng, simulate_heston
from .volvol import default_b, default_k, tsrvv

logger = logging.getLogger("spotvol")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def parse_bandwidth(spec: str) -> str:
    if spec in ("plugin", "cv", "oracle"):
        return spec
    if spec.startswith("fixed:"):
        try:
            if float(spec[6:]) > 0:
                return spec
        except ValueError:
            pass
    raise ConfigError(f"--bandwidth must be plugin, cv, oracle or fixed:<h>, got {spec!r}")


def parse_cv_grid(spec: str) -> np.ndarray:
    """``lo:hi:count`` as a log-spaced grid of absolute bandwidths."""
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ConfigError(f"--cv-grid must look like lo:hi:count, got {spec!r}") from None
    if not (0 < lo <= hi and count >= 1):
        raise ConfigError("--cv-grid needs 0 < lo <= hi and count >= 1")
    return log_grid(lo, hi, count)


def _integrate(values: np.ndarray, T: float) -> float:
    d = T / (values.size - 1)
    return d * (math.fsum(values) - 0.5 * (values[0] + values[-1]))


def _cmd_simulate(args) -> int:
    if args.n is not None:
        n, T = args.n, args.T
    else:
        n, T = grid_size(args.days, args.samples_per_hour), args.days / TRADING_DAYS
    try:
        cfg = HestonConfig(kappa=args.kappa, theta=args.theta, xi=args.xi, rho=args.rho,
                           mu=MuSpec(args.mu_alpha, args.mu_beta), x0=args.x0, v0=args.v0,
                           n=n, T=T, substeps=args.substeps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sim = simulate_heston(cfg, path_rng(args.seed, args.path_index))
    meta = {"model": "heston", "seed": args.seed, "path_index": args.path_index, "n": n, "T": T,
            "kappa": cfg.kappa, "theta": cfg.theta, "xi": cfg.xi, "rho": cfg.rho,
            "true_iv": sim.true_iv, "true_iq": sim.true_iq, "version": __version__}
    write_simulated_csv(args.out, sim, meta)
    return 0


def _cmd_estimate(args) -> int:
    method = parse_bandwidth(args.bandwidth)
    path, truth = read_price_csv(args.input, with_truth=True)
    kern = get_kernel(args.kernel)
    meta = {"kernel": kern.name, "method": method, "n": path.n, "T": path.T}
    plan = None
    if method == "plugin":
        plan, series = plugin_select(path, kern, max_iter=args.max_iter, rel_tol=args.rel_tol)
        h = plan.h
        meta["plugin_history"] = " ".join(repr(s.h) for s in plan.history)
    elif method == "cv":
        if args.cv_grid:
            grid = parse_cv_grid(args.cv_grid)
        else:
            h0 = initial_bandwidth(path.n, path.T, kern)
            grid = log_grid(0.1 * h0, 2.0 * h0, 30)
        h = cross_validate(path, kern, grid).h
    elif method == "oracle":
        if truth is None or args.oracle_xi is None:
            raise ConfigError("--bandwidth oracle needs a true_var column and --oracle-xi")
        h = oracle_bandwidth(path.n, path.T, _integrate(truth ** 2, path.T),
                             args.oracle_xi ** 2 * _integrate(truth, path.T), kern)
    else:
        h = float(method[6:])
    series = spot_vol_grid(path, kern, h, boundary_corrected=True)
    meta["bandwidth"] = h
    bands = None
    if args.bands is not None:
        vv = tsrvv(path, kern, h, default_k(path.n), default_b(path.n))
        g_sq = vv.ivv / path.T
        bands = confidence_bands(series.estimates, g_sq, kern, cv.brownian(), h, path.delta, args.bands)
        meta.update({"band_level": args.bands, "band_g_sq": g_sq, "band_g_sq_source": "integrated average IVV/T"})
    meta["version"] = __version__
    write_series_csv(args.out, series, bands, meta)
    return 0


def _cmd_volvol(args) -> int:
    path = read_price_csv(args.input)
    kern = get_kernel(args.kernel)
    if args.k == "auto":
        k = default_k(path.n)
    else:
        try:
            k = int(args.k)
        except ValueError:
            raise ConfigError(f"--k must be 'auto' or an integer, got {args.k!r}") from None
    b = default_b(path.n) if args.b is None else args.b
    if args.h == "plugin":
        h = plugin_select(path, kern, k=k, b=b)[0].h
    else:
        try:
            h = float(args.h)
        except ValueError:
            raise ConfigError(f"--h must be 'plugin' or a number, got {args.h!r}") from None
    vv = tsrvv(path, kern, h, k, b)
    row = [vv.ivv, vv.k, vv.b, vv.used_fallback]
    if args.out:
        write_rows(args.out, ["ivv", "k", "b", "fallback"], [row], {"h": h, "kernel": kern.name})
    else:
        sys.stdout.write(f"ivv,k,b,fallback\n{vv.ivv!r},{vv.k},{vv.b},{str(vv.used_fallback).lower()}\n")
    return 0


def _cmd_optimal_kernel(args) -> int:
    from .kernel_optimizer import optimize

    try:
        best, obj, runs = optimize(args.gamma, m=args.bins, restarts=args.restarts, seed=args.seed,
                                   workers=args.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    meta = {"gamma": args.gamma, "bins": args.bins, "restarts": args.restarts, "seed": args.seed,
            "version": __version__}
    write_step_kernel(args.out, best.coeffs, obj, meta)
    return 0


def _cmd_experiment(args) -> int:
    from . import harness

    overrides = {"paths": args.paths, "seed": args.seed}
    cfg = harness.load_config(args.config, **overrides)
    run = harness.run_mase if args.kind == "mase" else harness.run_volvol
    report = run(cfg, workers=args.workers)
    report.metadata["workers"] = args.workers
    if args.out:
        report.to_csv(args.out)
    else:
        sys.stdout.write(metadata_header(report.metadata) + report.body())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spotvol", description="Kernel spot volatility estimation.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate a Heston path to CSV")
    s.add_argument("--days", type=int, default=21)
    s.add_argument("--samples-per-hour", type=int, default=60)
    s.add_argument("--n", type=int, help="number of increments (overrides --days)")
    s.add_argument("--T", type=float, default=21 / TRADING_DAYS, help="horizon in years, with --n")
    s.add_argument("--kappa", type=float, default=5.0)
    s.add_argument("--theta", type=float, default=0.04)
    s.add_argument("--xi", type=float, default=0.5)
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--v0", type=float, default=0.04)
    s.add_argument("--x0", type=float, default=1.0)
    s.add_argument("--mu-alpha", type=float, default=0.05)
    s.add_argument("--mu-beta", type=float, default=-0.5)
    s.add_argument("--substeps", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--path-index", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_simulate)

    e = sub.add_parser("estimate", help="estimate spot variance on the observation grid")
    e.add_argument("input")
    e.add_argument("--kernel", default="exponential")
    e.add_argument("--bandwidth", default="plugin")
    e.add_argument("--cv-grid", help="lo:hi:count, log spaced absolute bandwidths")
    e.add_argument("--oracle-xi", type=float, help="Heston xi for the oracle bandwidth")
    e.add_argument("--max-iter", type=int, default=2)
    e.add_argument("--rel-tol", type=float, default=0.01)
    e.add_argument("--bands", type=float, help="confidence level for lo/hi columns, e.g. 0.95")
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_estimate)

    v = sub.add_parser("volvol", help="integrated vol-of-vol estimate")
    v.add_argument("input")
    v.add_argument("--kernel", default="exponential")
    v.add_argument("--k", default="auto")
    v.add_argument("--b", type=int)
    v.add_argument("--h", default="plugin")
    v.add_argument("--out")
    v.set_defaults(func=_cmd_volvol)

    o = sub.add_parser("optimal-kernel", help="numerically optimal step kernel")
    o.add_argument("--gamma", type=float, required=True)
    o.add_argument("--bins", type=int, default=128)
    o.add_argument("--restarts", type=int, default=8)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--workers", type=int, default=1)
    o.add_argument("--out", required=True)
    o.set_defaults(func=_cmd_optimal_kernel)

    x = sub.add_parser("experiment", help="Monte Carlo experiments")
    x.add_argument("kind", choices=["mase", "volvol"])
    x.add_argument("--config", help="INI file with [experiment] and [heston] sections")
    x.add_argument("--paths", type=int)
    x.add_argument("--seed", type=int)
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--out")
    x.set_defaults(func=_cmd_experiment)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"spotvol: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"spotvol: config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"spotvol: data error: {exc}", file=sys.stderr)
        return 3
    except (OSError, FileNotFoundError) as exc:
        print(f"spotvol: data error: {exc}", file=sys.stderr)
        return 3
    except SpotVolError as exc:
        print(f"spotvol: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"spotvol: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
