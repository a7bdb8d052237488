import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_path
from oracles import naive_one_sided, tsrvv_transcription
from spotvol.bandwidth import plugin_select
from spotvol.errors import DegenerateWeights, InvalidScales
from spotvol.kernels import exponential, triangular
from spotvol.simulate import HestonConfig, path_rng, simulate_heston
from spotvol.volvol import (
    default_b, default_k, heston_xi, matched_integrated_variance, tsrvv, tsrvv_unscaled, window_weights,
)


@pytest.mark.parametrize("pairing", ["disjoint", "literal"])
@pytest.mark.parametrize("kern", [exponential(), triangular()], ids=lambda k: k.name)
def test_matches_transcription(pairing, kern):
    for seed in range(5):
        p = random_path(40, seed)
        h = 4 * p.delta
        value, first = tsrvv_transcription(p.squared_increments, kern, h, p.delta, 6, 2, pairing)
        est = tsrvv(p, kern, h, 6, 2, pairing)
        assert est.first_term == pytest.approx(first, rel=1e-12)
        assert est.ivv == pytest.approx(value if value > 0 else first, rel=1e-12)
        assert est.used_fallback == (not value > 0)


def test_unscaled_variant_by_hand():
    p = random_path(30, 9)
    h, k = 3 * p.delta, 4
    r = p.squared_increments
    fut = naive_one_sided(r, exponential(), h, p.delta, "left")
    past = naive_one_sided(r, exponential(), h, p.delta, "right")
    a = sum((past[i + k] - fut[i]) ** 2 for i in range(0, p.n - k + 1))
    b = sum((past[i + 1] - fut[i]) ** 2 for i in range(0, p.n))
    assert tsrvv_unscaled(p, exponential(), h, k) == pytest.approx((a - b) / k, rel=1e-11)
    with pytest.raises(DegenerateWeights):
        tsrvv_unscaled(p, exponential(), h, k, pairing="disjoint")


def test_scale_validation():
    p = random_path(40, 1)
    with pytest.raises(InvalidScales):
        tsrvv(p, exponential(), 0.1, 1, 2)
    with pytest.raises(InvalidScales):
        tsrvv(p, exponential(), 0.1, 30, 10)
    with pytest.raises(InvalidScales):
        tsrvv(p, exponential(), 0.1, 5, -1)
    with pytest.raises(ValueError):
        tsrvv(p, exponential(), 0.1, 5, 2, pairing="sideways")


def test_defaults():
    assert default_k(8190) == round(8190 ** (2 / 3))
    assert default_k(8190, "three_quarters") == round(8190 ** 0.75)
    assert default_k(1000, "paper_simple") == 100
    assert default_k(4096, "theorem_rate") == 512
    assert default_b(8190) == 410 and default_b(10) == 1
    with pytest.raises(ValueError):
        default_k(100, "other")


@settings(max_examples=50, deadline=None)
@given(st.integers(20, 400), st.data())
def test_window_weights_total(n, data):
    k = data.draw(st.integers(2, n // 3))
    b = data.draw(st.integers(0, (n - k - 1) // 2))
    w = window_weights(n, k, b)
    assert np.all(w >= 0) and np.all(w <= 1)
    assert w.sum() == pytest.approx(n - k - 2 * b + 1)


def test_matched_iv_and_xi():
    p = random_path(100, 2)
    full = matched_integrated_variance(p, 1 + 1, 0)
    assert full <= np.sum(p.squared_increments) + 1e-15
    assert heston_xi(0.25 * 0.04, 0.04) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        heston_xi(0.1, 0.0)


def _xi_hats(cfg, count, seed):
    out = []
    for i in range(count):
        sim = simulate_heston(cfg, path_rng(seed, i))
        p = sim.path
        k, b = default_k(p.n), default_b(p.n)
        h = plugin_select(p, exponential(), k=k, b=b)[0].h
        v = tsrvv(p, exponential(), h, k, b)
        out.append(heston_xi(v.ivv, matched_integrated_variance(p, k, b)))
    return np.array(out)


@pytest.mark.xfail(strict=True, reason="the second sum has about k fewer terms than the first, so a "
                   "positive noise residual survives the correction; the median sits near 0.06")
def test_zero_volvol_gives_small_xi():
    cfg = HestonConfig.scenario(21, 60, xi=0.0)
    assert np.median(_xi_hats(cfg, 20, 31)) <= 0.05


def test_error_shrinks_with_sampling_frequency():
    errs = []
    for sph in (12, 60):
        cfg = HestonConfig.scenario(21, sph)
        errs.append(np.median(np.abs(_xi_hats(cfg, 40, 32) - cfg.xi)))
    assert errs[1] < errs[0]
