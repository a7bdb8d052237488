import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spotvol.errors import DataError
from spotvol.estimator import spot_vol_grid
from spotvol.io import (
    metadata_header, read_price_csv, read_step_kernel, split_report, write_rows, write_series_csv,
    write_simulated_csv, write_step_kernel,
)
from spotvol.kernels import exponential
from spotvol.simulate import HestonConfig, path_rng, simulate_heston


def _write(tmp_path, text, name="p.csv"):
    f = tmp_path / name
    f.write_text(text)
    return f


def test_simulated_round_trip(tmp_path):
    s = simulate_heston(HestonConfig(n=30, T=0.1), path_rng(0, 0))
    f = tmp_path / "s.csv"
    write_simulated_csv(f, s, {"seed": 0})
    path, truth = read_price_csv(f, with_truth=True)
    assert np.array_equal(path.log_prices, s.path.log_prices)
    assert np.array_equal(truth, s.true_var)
    assert path.T == pytest.approx(0.1, rel=1e-14)
    assert f.read_text().startswith("# metadata: seed=0\n")


def test_start_time_is_shifted(tmp_path):
    f = _write(tmp_path, "time,log_price\n5.0,0\n5.5,0.1\n6.0,0.05\n")
    p = read_price_csv(f)
    assert p.T == 1.0 and p.n == 2
    assert read_price_csv(f, with_truth=True)[1] is None


@pytest.mark.parametrize("text,needle", [
    ("", "empty"),
    ("t,log_price\n0,1\n", "header must contain 'time'"),
    ("time,log_price\n0,1\n1,x\n2,3\n", "line 3"),
    ("time,log_price\n0,1\n1,2,3\n2,3\n", "line 3: expected 2 fields"),
    ("time,log_price\n0,1\n1,2\n", "at least 3"),
    ("time,log_price\n0,1\n1,2\n2.5,3\n3,4\n", "line 4"),
    ("time,log_price\n0,1\n1,inf\n2,3\n", "non-finite"),
])
def test_ingestion_errors_name_the_line(tmp_path, text, needle):
    with pytest.raises(DataError, match=needle):
        read_price_csv(_write(tmp_path, text))


def test_comments_are_skipped(tmp_path):
    f = _write(tmp_path, "# metadata: a=1\ntime,log_price\n0,1\n# note\n1,2\n2,4\n")
    assert read_price_csv(f).n == 2


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=40), st.one_of(st.none(), st.floats(-1e3, 1e3)))
def test_step_kernel_round_trip(tmp_path_factory, coeffs, objective):
    f = tmp_path_factory.mktemp("k") / "k.csv"
    write_step_kernel(f, coeffs, objective, {"gamma": 1.5})
    got, obj = read_step_kernel(f)
    assert got.tolist() == [float(c) for c in coeffs]
    assert obj == objective


def test_step_kernel_bad_header(tmp_path):
    with pytest.raises(DataError):
        read_step_kernel(_write(tmp_path, "a,b\n0,1\n"))
    with pytest.raises(DataError):
        read_step_kernel(_write(tmp_path, "x_left,coeff\n0,1\n0.7,2\n"))


def test_series_csv_and_reports(tmp_path):
    s = simulate_heston(HestonConfig(n=20, T=0.1), path_rng(0, 0))
    series = spot_vol_grid(s.path, exponential(), 0.01)
    f = tmp_path / "e.csv"
    lo, hi = series.estimates * 0.9, series.estimates * 1.1
    write_series_csv(f, series, (lo, hi), {"bandwidth": 0.01})
    meta, body = split_report(f.read_text())
    assert meta == [metadata_header({"bandwidth": 0.01})]
    lines = body.splitlines()
    assert lines[0] == "time,spot_var,bandwidth,lo,hi" and len(lines) == 22
    write_rows(tmp_path / "r.csv", ["a", "b"], [[True, 1.5]])
    assert (tmp_path / "r.csv").read_text() == "a,b\ntrue,1.5\n"
