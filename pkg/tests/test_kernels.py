import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dblquad_form, exact_constants, laplace_k
from spotvol import covariance as cv
from spotvol.errors import ZeroMass
from spotvol.kernels import (
    bm_objective_I, check_admissible, constrained_order_kernel, epanechnikov, exponential, from_function,
    get_kernel, one_sided_exponential, order_p_kernel, step_kernel, symmetrize, triangular, uniform,
)

# exact values, reproduced by tests/oracles.exact_constants
TABLE = {
    "exponential": (Fraction(1, 4), Fraction(1, 4)),
    "uniform": (Fraction(1, 2), Fraction(1, 6)),
    "triangular": (Fraction(2, 3), Fraction(1, 10)),
    "epanechnikov": (Fraction(3, 5), Fraction(33, 280)),
}


@pytest.mark.parametrize("name", list(TABLE))
def test_table_matches_sympy(name):
    l2, form = exact_constants(name)
    assert (Fraction(str(l2)), Fraction(str(form))) == TABLE[name]


@pytest.mark.parametrize("name", list(TABLE))
def test_closed_forms(name):
    k = get_kernel(name)
    l2, form = TABLE[name]
    assert k.l2_norm() == pytest.approx(float(l2), abs=1e-15)
    assert cv.quadratic_form(cv.brownian(), k) == pytest.approx(float(form), abs=1e-15)
    assert k.l2_norm_numeric() == pytest.approx(float(l2), abs=1e-12)
    assert bm_objective_I(k) == pytest.approx(float(l2 * form), abs=1e-15)


def test_objective_ordering():
    vals = {n: bm_objective_I(get_kernel(n)) for n in TABLE}
    assert vals["exponential"] < vals["triangular"] < vals["epanechnikov"] < vals["uniform"]
    assert vals["exponential"] == pytest.approx(1 / 16, abs=1e-15)
    assert vals["epanechnikov"] == pytest.approx(99 / 1400, abs=1e-15)


@pytest.mark.parametrize("name", list(TABLE))
def test_unit_integral_and_symmetry(name):
    k = get_kernel(name)
    assert k.integral() == pytest.approx(1.0, abs=1e-12)
    x = np.linspace(-3, 3, 101)
    assert np.array_equal(k(x), k(-x))


@pytest.mark.parametrize("hurst", [0.6, 0.75, 0.9])
def test_exponential_fbm_form_against_dblquad(hurst):
    g = 2 * hurst
    closed = cv.quadratic_form(cv.fractional(hurst), exponential())
    assert closed == pytest.approx(math.gamma(g + 1) * (2 - g) / 4, abs=1e-15)
    C = lambda x, y: 0.5 * (abs(x) ** g + abs(y) ** g - abs(x - y) ** g)
    assert closed == pytest.approx(dblquad_form(laplace_k, C, 40.0), abs=1e-8)


def test_triangular_fbm_against_dblquad():
    g = 1.5
    C = lambda x, y: 0.5 * (abs(x) ** g + abs(y) ** g - abs(x - y) ** g)
    tri = lambda x: max(0.0, 1 - abs(x))
    assert cv.quadratic_form(cv.fractional(0.75), triangular()) == pytest.approx(dblquad_form(tri, C, 1.0), abs=1e-9)


def test_deterministic_form_is_squared_moment():
    # iint K K x^m y^m = (int K x^m)^2; epanechnikov second moment is 1/5
    assert cv.quadratic_form(cv.deterministic(1), epanechnikov()) == 0.0
    assert epanechnikov().moment(2) == pytest.approx(0.2, abs=1e-15)
    assert epanechnikov().moment(2, absolute=True) == pytest.approx(0.2, abs=1e-15)
    assert exponential().moment(2) == pytest.approx(2.0)


def test_order_p_kernels():
    for p in (1, 2, 3, 5):
        k = order_p_kernel(p)
        assert k.integral() == pytest.approx(1.0, abs=1e-12)
    assert order_p_kernel(1)(0.25) == pytest.approx(triangular()(0.25))
    assert order_p_kernel(2)(0.5) == pytest.approx(epanechnikov()(0.5))


@pytest.mark.parametrize("q", [1, 2, 3])
def test_constrained_kernel_moments(q):
    k = constrained_order_kernel(q)
    assert k.integral() == pytest.approx(1.0, abs=1e-10)
    for r in range(1, q):
        assert k.moment(2 * r) == pytest.approx(0.0, abs=1e-10)


def test_step_kernel_normalization_and_zero_mass():
    k = step_kernel([3.0, 2.0, 1.0])
    assert k.integral() == pytest.approx(1.0, abs=1e-12)
    assert k.l2_norm() == pytest.approx(k.l2_norm_numeric(), abs=1e-12)
    with pytest.raises(ZeroMass):
        step_kernel([1.0, -1.0])


def test_uniform_step_equals_uniform():
    k = step_kernel(np.ones(8))
    assert cv.quadratic_form(cv.brownian(), k) == pytest.approx(1 / 6, abs=1e-14)
    assert k.l2_norm() == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.05, 2.0), min_size=2, max_size=12))
def test_step_kernel_scale_free(coeffs):
    a = np.array(coeffs)
    k1, k2 = step_kernel(a), step_kernel(3.7 * a)
    assert k1.l2_norm() == pytest.approx(k2.l2_norm(), rel=1e-12)
    assert bm_objective_I(k1) == pytest.approx(bm_objective_I(k2), rel=1e-12)


def test_scaled_kernel_integrates_to_one():
    k = triangular().scaled(0.3)
    assert k.integral() == pytest.approx(1.0, abs=1e-12)
    assert k(0.0) == pytest.approx(1 / 0.3)


def test_one_sided_and_symmetrize():
    k = one_sided_exponential()
    assert k.integral() == pytest.approx(1.0, abs=1e-12)
    s = symmetrize(k)
    assert s(0.7) == pytest.approx(exponential()(0.7))
    assert s.l2_norm() == pytest.approx(0.25, abs=1e-12)
    assert symmetrize(uniform()) is uniform()


def test_survivor():
    assert exponential().survivor(1.0) == pytest.approx(0.5 * math.exp(-1.0), rel=1e-12)
    assert uniform().survivor(2.0) == 0.0


def test_admissibility():
    assert check_admissible(exponential(), cv.brownian()).passed
    assert check_admissible(step_kernel([1, 2, 3]), cv.fractional(0.7)).passed
    bad = from_function(lambda x: np.where(np.abs(x) < 1, 0.4, 0.0), (-1, 1), symmetric=True)
    rep = check_admissible(bad, cv.brownian())
    assert not rep.unit_integral and not rep.passed


def test_unknown_kernel():
    with pytest.raises(ValueError):
        get_kernel("gaussianish")
