import math
import warnings

import numpy as np
import pytest

from spotvol import simulate as sim
from spotvol.errors import EmbeddingNotPSD
from spotvol.simulate import (
    HestonConfig, MuSpec, cir_mean, cir_variance, fgn_autocovariance, grid_size, path_rng, simulate_fbm,
    simulate_fou, simulate_heston, synthesize_price,
)


def test_grid_size_and_scenario():
    assert grid_size(21, 60) == 8190
    assert grid_size(5, 12) == 390
    cfg = HestonConfig.scenario(5, 12, rho=-0.5)
    assert cfg.n == 390 and cfg.T == pytest.approx(5 / 252) and cfg.rho == -0.5


def test_config_validation():
    with pytest.raises(ValueError):
        HestonConfig(xi=1.0)  # 2 * 5 * 0.04 = 0.4 < 1
    with pytest.raises(ValueError):
        HestonConfig(rho=1.5)
    with pytest.raises(ValueError):
        HestonConfig(n=1)


def test_streams_are_reproducible():
    cfg = HestonConfig(n=50, T=0.1)
    a = simulate_heston(cfg, path_rng(5, 1, 2))
    b = simulate_heston(cfg, path_rng(5, 1, 2))
    c = simulate_heston(cfg, path_rng(5, 2, 1))
    assert np.array_equal(a.path.log_prices, b.path.log_prices)
    assert not np.array_equal(a.path.log_prices, c.path.log_prices)


def test_heston_outputs():
    cfg = HestonConfig(n=200, T=0.1)
    s = simulate_heston(cfg, path_rng(0, 0))
    assert s.path.n == 200 and s.true_var.size == 201
    assert np.all(s.true_var >= 0)
    assert s.true_var[0] == cfg.v0 and s.path.log_prices[0] == cfg.x0
    # trapezoid on the fine grid is close to the coarse trapezoid
    coarse = s.path.delta * (s.true_var.sum() - 0.5 * (s.true_var[0] + s.true_var[-1]))
    assert s.true_iv == pytest.approx(coarse, rel=0.02)


def test_cir_moments_small_sample():
    cfg = HestonConfig(n=50, T=0.5, v0=0.02, substeps=10)
    v = np.array([simulate_heston(cfg, path_rng(3, i)).true_var[-1] for i in range(3000)])
    se_mean = v.std(ddof=1) / math.sqrt(v.size)
    assert abs(v.mean() - cir_mean(cfg, cfg.T)) < 3 * se_mean
    m4 = np.mean((v - v.mean()) ** 4)
    se_var = math.sqrt((m4 - v.var() ** 2) / v.size)
    assert abs(v.var(ddof=1) - cir_variance(cfg, cfg.T)) < 3 * se_var


def test_cir_closed_forms_limits():
    cfg = HestonConfig(v0=0.02)
    assert cir_mean(cfg, 0.0) == pytest.approx(0.02)
    assert cir_variance(cfg, 0.0) == 0.0
    assert cir_mean(cfg, 50.0) == pytest.approx(cfg.theta)
    assert cir_variance(cfg, 50.0) == pytest.approx(cfg.theta * cfg.xi ** 2 / (2 * cfg.kappa))


def test_fgn_autocovariance_values():
    assert fgn_autocovariance(0.5, [0, 1, 2]).tolist() == [1.0, 0.0, 0.0]
    assert fgn_autocovariance(0.75, 1) == pytest.approx(0.5 * (2 ** 1.5 - 2))


@pytest.mark.parametrize("hurst", [0.6, 0.9])
def test_fbm_lag_one(hurst):
    n, reps = 256, 400
    rng = np.random.default_rng(1)
    x = np.array([simulate_fbm(hurst, n, float(n), rng) for _ in range(reps)])
    prods = np.mean(x[:, :-1] * x[:, 1:], axis=1)
    se = prods.std(ddof=1) / math.sqrt(reps)
    assert abs(prods.mean() - fgn_autocovariance(hurst, 1)) < 3 * se


def test_fbm_variance_scaling():
    info = {}
    y = simulate_fbm(0.75, 1000, 2.0, np.random.default_rng(0), info)
    assert y.size == 1000 and info["clamped"] == 0 and info["min_eigenvalue"] > -1e-10
    with pytest.raises(ValueError):
        simulate_fbm(1.2, 10, 1.0, np.random.default_rng(0))


def test_embedding_checks(monkeypatch):
    def lag_one(rho):
        # eigenvalue 1 - 2 rho at frequency pi
        def acov(H, k):
            k = np.asarray(k)
            return np.where(k == 0, 1.0, np.where(k == 1, rho, 0.0))
        return acov

    monkeypatch.setattr(sim, "fgn_autocovariance", lag_one(0.8))
    with pytest.raises(EmbeddingNotPSD):
        simulate_fbm(0.6, 16, 1.0, np.random.default_rng(0))

    monkeypatch.setattr(sim, "fgn_autocovariance", lag_one(0.5 + 1e-12))
    info = {}
    with pytest.warns(UserWarning, match="clamped"):
        simulate_fbm(0.6, 16, 1.0, np.random.default_rng(0), info)
    assert info["clamped"] >= 1


def test_fou_stationary_variance():
    lam, sigma, H = 1.0, 1.0, 0.75
    target = sigma ** 2 * H * math.gamma(2 * H) / lam ** (2 * H)
    rng = np.random.default_rng(2)
    ends = np.array([simulate_fou(lam, sigma, H, 20, 1.0, rng, substeps=20)[-1] for _ in range(600)])
    se = math.sqrt(2 / (ends.size - 1)) * ends.var()
    assert abs(ends.var(ddof=1) - target) < 3 * se + 0.03 * target
    y = simulate_fou(lam, sigma, H, 20, 1.0, rng, substeps=4, return_fine=True)
    assert y.size == 81


def test_synthesize_price():
    v = np.full(4 * 10 + 1, 0.04)
    s = synthesize_price(v, MuSpec(), 10, 1.0, np.random.default_rng(0))
    assert s.path.n == 10 and s.true_var.size == 11
    assert s.true_iv == pytest.approx(0.04) and s.true_iq == pytest.approx(0.0016)
    with pytest.raises(ValueError):
        synthesize_price(np.full(42, 0.04), MuSpec(), 10, 1.0, np.random.default_rng(0))
