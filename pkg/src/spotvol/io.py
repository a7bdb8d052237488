"""CSV readers and writers for price paths, spot series, step kernels and reports."""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DataError
from .estimator import PricePath, SpotVolSeries

PathLike = Union[str, Path]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _data_lines(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def read_price_csv(source: PathLike, with_truth: bool = False):
    """Read ``time, log_price`` (optionally ``true_var``) into a :class:`PricePath`.

    Times must be uniformly spaced within 1e-9 of the step.  A nonzero start
    time is shifted to zero.  Returns ``(path, true_var or None)`` when
    ``with_truth`` is set.
    """
    text = Path(source).read_text()
    rows = list(_data_lines(text))
    if not rows:
        raise DataError(f"{source}: empty file")
    hdr_line, hdr = rows[0]
    cols = [c.strip().lower() for c in next(csv.reader([hdr]))]
    for need in ("time", "log_price"):
        if need not in cols:
            raise DataError(f"{source}: line {hdr_line}: header must contain '{need}', got {cols}")
    it, ip = cols.index("time"), cols.index("log_price")
    iv = cols.index("true_var") if "true_var" in cols else None
    t, x, v = [], [], []
    for lineno, line in rows[1:]:
        fields = next(csv.reader([line]))
        if len(fields) != len(cols):
            raise DataError(f"{source}: line {lineno}: expected {len(cols)} fields, got {len(fields)}")
        try:
            t.append(float(fields[it]))
            x.append(float(fields[ip]))
            if iv is not None:
                v.append(float(fields[iv]))
        except ValueError:
            raise DataError(f"{source}: line {lineno}: non-numeric value in {line.strip()!r}") from None
        if not (np.isfinite(t[-1]) and np.isfinite(x[-1])):
            raise DataError(f"{source}: line {lineno}: non-finite value")
    if len(t) < 3:
        raise DataError(f"{source}: need at least 3 observations, got {len(t)}")
    t = np.asarray(t)
    n = t.size - 1
    T = t[-1] - t[0]
    if not T > 0:
        raise DataError(f"{source}: times must increase")
    delta = T / n
    dev = np.abs(t - t[0] - np.arange(n + 1) * delta)
    bad = np.nonzero(dev > 1e-9 * delta)[0]
    if bad.size:
        lineno = rows[1 + bad[0]][0]
        raise DataError(f"{source}: line {lineno}: time {t[bad[0]]!r} breaks uniform spacing (step {delta!r})")
    path = PricePath(float(T), np.asarray(x))
    if with_truth:
        return path, (np.asarray(v) if iv is not None else None)
    return path


def metadata_header(meta: Dict[str, object]) -> str:
    items = "; ".join(f"{k}={_fmt(v)}" for k, v in meta.items())
    return f"# metadata: {items}\n"


def write_rows(dest: PathLike, header: Sequence[str], rows: Iterable[Sequence], meta: Optional[Dict] = None) -> None:
    buf = _io.StringIO()
    if meta:
        buf.write(metadata_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(dest).write_text(buf.getvalue())


def write_series_csv(dest: PathLike, series: SpotVolSeries, bands: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                     meta: Optional[Dict] = None) -> None:
    header = ["time", "spot_var", "bandwidth"]
    cols = [series.times, series.estimates, np.full(series.estimates.size, series.bandwidth)]
    if bands is not None:
        header += ["lo", "hi"]
        cols += list(bands)
    write_rows(dest, header, zip(*cols), meta)


def write_simulated_csv(dest: PathLike, sim, meta: Optional[Dict] = None) -> None:
    p = sim.path
    write_rows(dest, ["time", "log_price", "true_var"], zip(p.times, p.log_prices, sim.true_var), meta)


def write_step_kernel(dest: PathLike, coeffs: Sequence[float], objective: Optional[float] = None,
                      meta: Optional[Dict] = None) -> None:
    a = np.asarray(coeffs, dtype=float)
    m = a.size
    buf = _io.StringIO()
    if meta:
        buf.write(metadata_header(meta))
    buf.write("x_left,coeff\n")
    for i, c in enumerate(a):
        buf.write(f"{_fmt(i / m)},{_fmt(c)}\n")
    if objective is not None:
        buf.write(f"# objective={_fmt(objective)}\n")
    Path(dest).write_text(buf.getvalue())


def read_step_kernel(source: PathLike) -> Tuple[np.ndarray, Optional[float]]:
    text = Path(source).read_text()
    objective = None
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("# objective="):
            objective = float(s.split("=", 1)[1])
    rows = list(_data_lines(text))
    if not rows or [c.strip() for c in rows[0][1].split(",")] != ["x_left", "coeff"]:
        raise DataError(f"{source}: step kernel files need the header 'x_left, coeff'")
    xs, cs = [], []
    for lineno, line in rows[1:]:
        try:
            xl, c = (float(v) for v in line.split(","))
        except ValueError:
            raise DataError(f"{source}: line {lineno}: expected two numbers") from None
        xs.append(xl)
        cs.append(c)
    m = len(cs)
    if m == 0 or not np.allclose(xs, np.arange(m) / m, atol=1e-12):
        raise DataError(f"{source}: x_left must be the uniform bin edges i/m")
    return np.asarray(cs), objective


def split_report(text: str) -> Tuple[List[str], str]:
    """Separate ``# metadata:`` lines from the report body."""
    meta, body = [], []
    for line in text.splitlines(keepends=True):
        (meta if line.startswith("#") else body).append(line)
    return meta, "".join(body)
