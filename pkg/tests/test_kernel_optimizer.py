import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spotvol.errors import ZeroMass
from spotvol.kernel_optimizer import (
    discretized_exponential, interaction_matrix, objective_f, objective_gradient, optimize,
)
from spotvol.kernels import bm_objective_I, step_kernel


def _fd_grad(a, g, m, eps=1e-6):
    out = np.empty_like(a)
    for i in range(a.size):
        e = np.zeros_like(a)
        e[i] = eps * max(1.0, abs(a[i]))
        out[i] = (objective_f(a + e, g, m) - objective_f(a - e, g, m)) / (2 * e[i])
    return out


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(1.0, 1.95), st.integers(8, 24))
def test_gradient_matches_finite_differences(seed, g, m):
    a = np.random.default_rng(seed).uniform(0.1, 2.0, m)
    np.testing.assert_allclose(objective_gradient(a, g, m), _fd_grad(a, g, m), rtol=1e-5, atol=1e-7)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.01, 100), st.floats(1.0, 1.95))
def test_scale_free_and_orthogonal_gradient(seed, c, g):
    m = 16
    a = np.random.default_rng(seed).uniform(0.1, 2.0, m)
    assert objective_f(c * a, g, m) == pytest.approx(objective_f(a, g, m), rel=1e-11)
    grad = objective_gradient(a, g, m)
    assert abs(grad @ a) <= 1e-9 * np.linalg.norm(grad) * np.linalg.norm(a)


@pytest.mark.parametrize("m", [8, 32, 128])
def test_brownian_case_is_four_times_kernel_objective(m):
    a = np.random.default_rng(m).uniform(0.2, 1.0, m)
    assert abs(objective_f(a, 1.0, m) - 4 * bm_objective_I(step_kernel(a))) <= 0.5 / m ** 2


def test_interaction_matrix_symmetric_psd():
    A = interaction_matrix(1.5, 20)
    assert np.allclose(A, A.T)
    assert np.linalg.eigvalsh(A).min() > -1e-12
    A[0, 0] = 99.0  # returned copy, cache untouched
    assert interaction_matrix(1.5, 20)[0, 0] != 99.0


def test_zero_mass_and_shape_errors():
    with pytest.raises(ZeroMass):
        objective_f(np.array([1.0, -1.0] * 4), 1.0, 8)
    with pytest.raises(ValueError):
        objective_f(np.ones(5), 1.0, 8)
    with pytest.raises(ValueError):
        optimize(2.5, m=16)


def test_optimize_small_beats_exponential_benchmark():
    best, obj, runs = optimize(1.0, m=32, restarts=3, seed=1)
    bench = objective_f(discretized_exponential(32), 1.0, 32)
    assert obj <= bench * 1.02
    assert len(runs) == 3 and all(r.objective <= r.initial_objective for r in runs)
    assert 2 * best.coeffs.sum() / best.m == pytest.approx(1.0)
    assert best.kernel().integral() == pytest.approx(1.0, abs=1e-12)


def test_optimize_independent_of_workers():
    a = optimize(1.4, m=16, restarts=3, seed=2, workers=1)
    b = optimize(1.4, m=16, restarts=3, seed=2, workers=2)
    assert np.array_equal(a[0].coeffs, b[0].coeffs) and a[1] == b[1]


def test_discretized_exponential():
    a = discretized_exponential(10, tail=1e-6)
    assert a[0] == pytest.approx(np.exp(-np.log(1e6) * 0.05))
    assert np.all(np.diff(a) < 0)
