"""Planar fields with exact derivatives, plus a grid-sampled scalar field.

Analytic catalogs: polynomials (scalar degree <= 6, matrix degree <= 4),
trigonometric products for scalars, and single-wave trigonometric matrix
fields. Trig derivatives are evaluated by phase shifting (d/dx sin(kx + p) =
k sin(kx + p + pi/2)), so any derivative order is exact.

The grid field carries samples on a uniform grid and differentiates them with
second-order finite-difference matrices; it only knows its own nodes.
"""
from __future__ import annotations

import numpy as np

from .grids import Rectangle, diff1_matrix, diff2_matrix, apply_matrix

_HALF_PI = 0.5 * np.pi
_PHASE = {"sin": 0.0, "cos": _HALF_PI}


def _polyder2d(coeffs: np.ndarray, d1: int, d2: int) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if d1 >= c.shape[0] or d2 >= c.shape[1]:
        return np.zeros((1, 1))
    if d1:
        c = np.polynomial.polynomial.polyder(c, m=d1, axis=0)
    if d2:
        c = np.polynomial.polynomial.polyder(c, m=d2, axis=1)
    return c


def _total_degree(coeffs: np.ndarray) -> int:
    nz = np.argwhere(coeffs != 0.0)
    if nz.size == 0:
        return 0
    return int(max(i + j for i, j in nz[:, :2]))


class ScalarField2D:
    """Scalar planar field with exact partial derivatives."""

    is_analytic = True
    max_derivative_order = np.inf

    def value(self, x1, x2) -> np.ndarray:
        return self.derivative(x1, x2, 0, 0)

    def __call__(self, x1, x2) -> np.ndarray:
        return self.value(x1, x2)

    def derivative(self, x1, x2, d1: int, d2: int) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x1, x2) -> np.ndarray:
        """(..., 2) array of first partials."""
        return np.stack([self.derivative(x1, x2, 1, 0),
                         self.derivative(x1, x2, 0, 1)], axis=-1)

    def hessian(self, x1, x2) -> np.ndarray:
        """(..., 2, 2) array of second partials."""
        h11 = self.derivative(x1, x2, 2, 0)
        h12 = self.derivative(x1, x2, 1, 1)
        h22 = self.derivative(x1, x2, 0, 2)
        return np.stack([np.stack([h11, h12], axis=-1),
                         np.stack([h12, h22], axis=-1)], axis=-2)

    def hessian_derivative(self, x1, x2, axis: int) -> np.ndarray:
        """(..., 2, 2) array of third partials d_axis(hessian)."""
        e = (1, 0) if axis == 0 else (0, 1)
        h11 = self.derivative(x1, x2, 2 + e[0], e[1])
        h12 = self.derivative(x1, x2, 1 + e[0], 1 + e[1])
        h22 = self.derivative(x1, x2, e[0], 2 + e[1])
        return np.stack([np.stack([h11, h12], axis=-1),
                         np.stack([h12, h22], axis=-1)], axis=-2)


class PolynomialField2D(ScalarField2D):
    """Bivariate polynomial sum_ij c[i, j] x1^i x2^j of total degree <= 6."""

    def __init__(self, coeffs):
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if coeffs.ndim != 2:
            raise ValueError("coefficient array must be two-dimensional")
        if _total_degree(coeffs) > 6:
            raise ValueError("scalar polynomial fields are limited to total degree 6")
        self.coeffs = coeffs

    def derivative(self, x1, x2, d1: int, d2: int) -> np.ndarray:
        c = _polyder2d(self.coeffs, d1, d2)
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return np.polynomial.polynomial.polyval2d(x1, x2, c)


class TrigProductField2D(ScalarField2D):
    """Sum of separable waves a * f(k1 x1 + p1) * g(k2 x2 + p2), f, g in {sin, cos}."""

    def __init__(self, terms):
        # term: (amplitude, (kind1, k1, p1), (kind2, k2, p2))
        parsed = []
        for amp, (kind1, k1, p1), (kind2, k2, p2) in terms:
            for kind in (kind1, kind2):
                if kind not in _PHASE:
                    raise ValueError(f"unknown trig kind {kind!r}")
            parsed.append((float(amp),
                           (float(k1), float(p1) + _PHASE[kind1]),
                           (float(k2), float(p2) + _PHASE[kind2])))
        if not parsed:
            raise ValueError("need at least one term")
        self.terms = parsed

    def derivative(self, x1, x2, d1: int, d2: int) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        out = np.zeros(x1.shape)
        for amp, (k1, p1), (k2, p2) in self.terms:
            out += (amp * k1**d1 * k2**d2
                    * np.sin(k1 * x1 + p1 + d1 * _HALF_PI)
                    * np.sin(k2 * x2 + p2 + d2 * _HALF_PI))
        return out


def zero_scalar_field() -> PolynomialField2D:
    return PolynomialField2D([[0.0]])


class GridField2D:
    """Scalar samples on a uniform grid with finite-difference derivatives."""

    is_analytic = False
    max_derivative_order = 2

    def __init__(self, values: np.ndarray, rect: Rectangle):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or min(values.shape) < 4:
            raise ValueError("grid field needs a 2-d array with at least 4 nodes per axis")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid field contains non-finite samples")
        self.values = values
        self.rect = rect
        self.n1, self.n2 = values.shape
        self.dx1 = rect.span1 / (self.n1 - 1)
        self.dx2 = rect.span2 / (self.n2 - 1)

    def nodes(self):
        return self.rect.nodes(self.n1, self.n2)

    def gradient_arrays(self):
        """First partials on the grid, each of shape (n1, n2)."""
        d1 = apply_matrix(diff1_matrix(self.n1, self.dx1), self.values, axis=0)
        d2 = apply_matrix(diff1_matrix(self.n2, self.dx2), self.values, axis=1)
        return d1, d2

    def hessian_arrays(self):
        """Second partials (h11, h12, h22) on the grid."""
        D1 = diff1_matrix(self.n1, self.dx1)
        D2 = diff1_matrix(self.n2, self.dx2)
        h11 = apply_matrix(diff2_matrix(self.n1, self.dx1), self.values, axis=0)
        h22 = apply_matrix(diff2_matrix(self.n2, self.dx2), self.values, axis=1)
        h12 = apply_matrix(D2, apply_matrix(D1, self.values, axis=0), axis=1)
        return h11, h12, h22


def sample_scalar_field(field: ScalarField2D, rect: Rectangle, n1: int, n2: int) -> GridField2D:
    """Evaluate an analytic scalar field on a uniform grid."""
    x1, x2 = rect.nodes(n1, n2)
    return GridField2D(field.value(x1[:, None], x2[None, :]), rect)


class MatrixField2D:
    """3x3-matrix-valued planar field with exact partial derivatives."""

    def value(self, x1, x2) -> np.ndarray:
        return self.derivative(x1, x2, 0, 0)

    def __call__(self, x1, x2) -> np.ndarray:
        return self.value(x1, x2)

    def derivative(self, x1, x2, d1: int, d2: int) -> np.ndarray:
        raise NotImplementedError


class ConstantMatrixField(MatrixField2D):
    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {matrix.shape}")
        self.matrix = matrix

    def derivative(self, x1, x2, d1: int, d2: int) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        out = np.zeros(x1.shape + (3, 3))
        if d1 == 0 and d2 == 0:
            out[...] = self.matrix
        return out


class PolynomialMatrixField(MatrixField2D):
    """Matrix polynomial sum_ij C[i, j] x1^i x2^j of total degree <= 4."""

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 4 or coeffs.shape[-2:] != (3, 3):
            raise ValueError("expected coefficients of shape (p, q, 3, 3)")
        degree = 0
        for i in range(coeffs.shape[0]):
            for j in range(coeffs.shape[1]):
                if np.any(coeffs[i, j] != 0.0):
                    degree = max(degree, i + j)
        if degree > 4:
            raise ValueError("matrix polynomial fields are limited to total degree 4")
        self.coeffs = coeffs

    def derivative(self, x1, x2, d1: int, d2: int) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        out = np.empty(x1.shape + (3, 3))
        for a in range(3):
            for b in range(3):
                c = _polyder2d(self.coeffs[:, :, a, b], d1, d2)
                out[..., a, b] = np.polynomial.polynomial.polyval2d(x1, x2, c)
        return out


class TrigMatrixField(MatrixField2D):
    """Single plane wave A * sin(k1 x1 + k2 x2 + phase) with matrix amplitude."""

    def __init__(self, amplitude, frequency, phase: float = 0.0):
        amplitude = np.asarray(amplitude, dtype=float)
        if amplitude.shape != (3, 3):
            raise ValueError(f"expected a 3x3 amplitude, got shape {amplitude.shape}")
        frequency = np.asarray(frequency, dtype=float)
        if frequency.shape != (2,):
            raise ValueError("expected a planar frequency vector (k1, k2)")
        self.amplitude = amplitude
        self.frequency = frequency
        self.phase = float(phase)

    def derivative(self, x1, x2, d1: int, d2: int) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        k1, k2 = self.frequency
        wave = np.sin(k1 * x1 + k2 * x2 + self.phase + (d1 + d2) * _HALF_PI)
        factor = k1**d1 * k2**d2
        return factor * wave[..., None, None] * self.amplitude


def zero_matrix_field() -> ConstantMatrixField:
    return ConstantMatrixField(np.zeros((3, 3)))


def hessian_matrix_field(w: PolynomialField2D) -> PolynomialMatrixField:
    """Matrix field whose planar block is the Hessian of a polynomial w.

    The result has total degree deg(w) - 2, so w may have degree up to 6.
    """
    blocks = [(_polyder2d(w.coeffs, 2, 0), 0, 0),
              (_polyder2d(w.coeffs, 1, 1), 0, 1),
              (_polyder2d(w.coeffs, 1, 1), 1, 0),
              (_polyder2d(w.coeffs, 0, 2), 1, 1)]
    p = max(c.shape[0] for c, _, _ in blocks)
    q = max(c.shape[1] for c, _, _ in blocks)
    coeffs = np.zeros((p, q, 3, 3))
    for c, a, b in blocks:
        coeffs[:c.shape[0], :c.shape[1], a, b] = c
    return PolynomialMatrixField(coeffs)
