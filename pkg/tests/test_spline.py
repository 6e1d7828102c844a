import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from vqkan.spline import (
    REFIT_POINTS,
    SplineGrid,
    activation_eval,
    basis_eval,
    basis_matrix,
    basis_vector,
    clamped_uniform_knots,
    refine,
    silu,
    silu_array,
    spline_part,
    splines_for_epoch,
)


def test_schedule():
    assert [splines_for_epoch(t) for t in range(4)] == [8, 12, 16, 20]


def test_default_grid():
    g = SplineGrid()
    assert g.num_basis == 64
    assert g.knots.shape == (68,)
    assert g.flat_index(2, 3) == 19
    np.testing.assert_allclose(g.knots[:4], 0)
    np.testing.assert_allclose(g.knots[-4:], 1)
    with pytest.raises(ValueError):
        g.knots[5] = 0.3


def test_knot_validation():
    with pytest.raises(ValueError):
        SplineGrid(2, 4, knots=np.linspace(0, 1, 5))
    with pytest.raises(ValueError):
        clamped_uniform_knots(3)
    with pytest.raises(ValueError):
        SplineGrid(0, 4)


def test_basis_matches_scipy():
    g = SplineGrid(3, 5)
    xs = np.linspace(0, 1, 97)
    ref = BSpline(g.knots, np.eye(g.num_basis), 3, extrapolate=False)(xs)
    np.testing.assert_allclose(basis_matrix(g, xs), ref, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.sampled_from([(8, 8), (2, 4), (8, 12), (1, 4)]))
def test_partition_of_unity_and_nonnegativity(x, shape):
    b = basis_vector(SplineGrid(*shape), x)
    assert abs(b.sum() - 1.0) < 1e-12
    assert b.min() >= -1e-12
    assert np.count_nonzero(b) <= 4


def test_local_support():
    g = SplineGrid(2, 6)
    for k in range(g.num_basis):
        lo, hi = g.knots[k], g.knots[k + 4]
        for x in np.linspace(0, 1, 201):
            if x < lo or x > hi:
                assert basis_eval(g, k, x) == 0.0


def test_endpoints():
    g = SplineGrid()
    assert basis_eval(g, 0, 0.0) == 1.0
    assert basis_eval(g, g.num_basis - 1, 1.0) == 1.0


def test_domain_and_index_errors():
    g = SplineGrid()
    with pytest.raises(ValueError):
        basis_vector(g, 1.01)
    with pytest.raises(IndexError):
        basis_eval(g, 64, 0.5)
    with pytest.raises(ValueError):
        spline_part(g, np.zeros(10), 0.5)


def test_silu():
    assert silu(0.0) == 0.0
    assert silu(1.0) == pytest.approx(1 / (1 + math.exp(-1)))
    assert silu(-800.0) == pytest.approx(0.0)
    assert silu(800.0) == pytest.approx(800.0)
    xs = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(silu_array(xs), [silu(x) for x in xs])


def test_zero_coefficient_activation_is_silu():
    g = SplineGrid()
    assert activation_eval(g, g.zero_coefficients(), 0.4) == pytest.approx(silu(0.4))


@pytest.mark.parametrize("new", [12, 16, 20])
def test_refine_reproduces_coarse_functions(new):
    rng = np.random.default_rng(new)
    g = SplineGrid()
    c = rng.normal(size=(8, 8))
    g2, c2 = refine(g, c, new)
    assert g2.num_splines == new and c2.shape == (8, new)
    assert set(np.round(g.breakpoints, 14)) <= set(np.round(g2.breakpoints, 14))
    xs = np.linspace(0, 1, 1001)
    diff = basis_matrix(g, xs) @ c.ravel() - basis_matrix(g2, xs) @ c2.ravel()
    assert np.sqrt(np.mean(diff**2)) < 1e-8


def test_refine_chain_up_to_large_bases():
    rng = np.random.default_rng(0)
    g, c = SplineGrid(), rng.normal(size=(8, 8))
    xs = np.linspace(0, 1, 2001)
    f0 = basis_matrix(g, xs) @ c.ravel()
    for ns in range(12, 72, 4):
        g, c = refine(g, c, ns)
    assert g.num_basis > REFIT_POINTS
    assert np.sqrt(np.mean((basis_matrix(g, xs) @ c.ravel() - f0) ** 2)) < 1e-8


def test_refine_zero_and_errors():
    g = SplineGrid()
    g2, c2 = refine(g, g.zero_coefficients(), 12)
    assert not np.any(c2)
    with pytest.raises(ValueError):
        refine(g, g.zero_coefficients(), 8)
