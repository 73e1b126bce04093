"""Grid building blocks: quadrature weights, difference stencils, spectral derivatives."""
import numpy as np
import pytest

from prestrain_plate.grids import (UNIT_SQUARE, Rectangle, apply_matrix, diff1_matrix,
                                   diff2_matrix, gauss_legendre_half,
                                   lagrange_diff_matrix, trapezoid_weights)


def test_rectangle_geometry():
    rect = Rectangle(-1.0, 2.0, 0.5, 1.0)
    assert rect.span1 == 3.0
    assert rect.span2 == 0.5
    assert rect.area == 1.5
    x1, x2 = rect.nodes(4, 3)
    assert np.allclose(x1, [-1.0, 0.0, 1.0, 2.0])
    assert np.allclose(x2, [0.5, 0.75, 1.0])
    assert UNIT_SQUARE.area == 1.0


def test_rectangle_rejects_empty_spans():
    with pytest.raises(ValueError):
        Rectangle(0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Rectangle(0.0, 1.0, 2.0, 1.0)


def test_trapezoid_weights_integrate_linears_exactly():
    w = trapezoid_weights(2.0, 9)
    x = np.linspace(0.0, 2.0, 9)
    assert np.isclose(w.sum(), 2.0)
    # integral of 3x - 1 over (0, 2) is 4
    assert np.isclose(w @ (3.0 * x - 1.0), 4.0)
    with pytest.raises(ValueError):
        trapezoid_weights(1.0, 1)


def test_diff1_matrix_exact_on_quadratics():
    n, dx = 11, 0.3
    x = dx * np.arange(n)
    D = diff1_matrix(n, dx)
    f = 2.0 * x**2 - x + 3.0
    assert np.allclose(D @ f, 4.0 * x - 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        diff1_matrix(2, dx)


def test_diff2_matrix_exact_on_cubics():
    n, dx = 9, 0.25
    x = dx * np.arange(n)
    D = diff2_matrix(n, dx)
    f = x**3 - 2.0 * x**2 + x
    assert np.allclose(D @ f, 6.0 * x - 4.0, atol=1e-10)
    with pytest.raises(ValueError):
        diff2_matrix(3, dx)


def test_gauss_legendre_half_moments():
    t, w = gauss_legendre_half(4)
    assert np.all(np.abs(t) < 0.5)
    assert np.isclose(w.sum(), 1.0)
    # moments of t^k over (-1/2, 1/2), exact up to degree 2m - 1 = 7
    for k in range(8):
        exact = 0.0 if k % 2 else 0.5**k / (k + 1)
        assert np.isclose(w @ t**k, exact, atol=1e-15)
    with pytest.raises(ValueError):
        gauss_legendre_half(0)


def test_lagrange_diff_matrix_exact_on_nodal_polynomials():
    t, _ = gauss_legendre_half(5)
    D = lagrange_diff_matrix(t)
    assert np.allclose(D.sum(axis=1), 0.0, atol=1e-12)
    f = t**4 - 0.5 * t**2 + t
    assert np.allclose(D @ f, 4.0 * t**3 - t + 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        lagrange_diff_matrix(np.array([0.0]))


def test_apply_matrix_matches_einsum(rng):
    arr = rng.normal(size=(4, 5, 6))
    op = rng.normal(size=(7, 5))
    out = apply_matrix(op, arr, axis=1)
    assert out.shape == (4, 7, 6)
    assert np.allclose(out, np.einsum("ab,ibj->iaj", op, arr))
