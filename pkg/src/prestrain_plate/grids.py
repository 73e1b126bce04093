"""Tensor-product grids, quadrature weights, and finite-difference operators.

Everything here acts on uniform in-plane grids (trapezoid quadrature,
second-order difference stencils) or on Gauss-Legendre nodes through the
thickness (spectral differentiation via the barycentric Lagrange matrix).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned planar domain [x1_min, x1_max] x [x2_min, x2_max]."""

    x1_min: float = 0.0
    x1_max: float = 1.0
    x2_min: float = 0.0
    x2_max: float = 1.0

    def __post_init__(self):
        if not (self.x1_max > self.x1_min and self.x2_max > self.x2_min):
            raise ValueError(f"rectangle must have positive spans, got {self}")

    @property
    def span1(self) -> float:
        return self.x1_max - self.x1_min

    @property
    def span2(self) -> float:
        return self.x2_max - self.x2_min

    @property
    def area(self) -> float:
        return self.span1 * self.span2

    def nodes(self, n1: int, n2: int):
        """Uniform node coordinates (x1 of shape (n1,), x2 of shape (n2,))."""
        return (np.linspace(self.x1_min, self.x1_max, n1),
                np.linspace(self.x2_min, self.x2_max, n2))


UNIT_SQUARE = Rectangle(0.0, 1.0, 0.0, 1.0)


def trapezoid_weights(span: float, n: int) -> np.ndarray:
    """Composite trapezoid weights for n uniform nodes over an interval."""
    if n < 2:
        raise ValueError("trapezoid rule needs at least 2 nodes")
    dx = span / (n - 1)
    w = np.full(n, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


def diff1_matrix(n: int, dx: float) -> np.ndarray:
    """Dense first-derivative matrix, second order (central + one-sided edges)."""
    if n < 3:
        raise ValueError("first-derivative stencil needs at least 3 nodes")
    D = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    D[idx, idx - 1] = -0.5
    D[idx, idx + 1] = 0.5
    D[0, :3] = (-1.5, 2.0, -0.5)
    D[-1, -3:] = (0.5, -2.0, 1.5)
    return D / dx


def diff2_matrix(n: int, dx: float) -> np.ndarray:
    """Dense second-derivative matrix, second order (central + one-sided edges)."""
    if n < 4:
        raise ValueError("second-derivative stencil needs at least 4 nodes")
    D = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    D[idx, idx - 1] = 1.0
    D[idx, idx] = -2.0
    D[idx, idx + 1] = 1.0
    D[0, :4] = (2.0, -5.0, 4.0, -1.0)
    D[-1, -4:] = (-1.0, 4.0, -5.0, 2.0)
    return D / dx**2


def gauss_legendre_half(m: int):
    """Gauss-Legendre nodes and weights on (-1/2, 1/2).

    Exact for polynomials of degree <= 2m - 1; nodes are interior, so the
    physical through-thickness points h*t stay strictly inside the slab.
    """
    if m < 1:
        raise ValueError("need at least one through-thickness node")
    nodes, weights = np.polynomial.legendre.leggauss(m)
    return 0.5 * nodes, 0.5 * weights


def lagrange_diff_matrix(nodes: np.ndarray) -> np.ndarray:
    """Differentiation matrix of the interpolating polynomial on given nodes.

    Built from barycentric weights; exact for polynomials of degree < len(nodes).
    """
    t = np.asarray(nodes, dtype=float)
    m = t.size
    if m < 2:
        raise ValueError("differentiation needs at least 2 nodes")
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def apply_matrix(op: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    """Contract a dense operator against one axis of an array.

    Equivalent to einsum('ab,...b...->...a...') but reshaped through matmul
    so large grids hit BLAS.
    """
    moved = np.moveaxis(arr, axis, 0)
    flat = moved.reshape(moved.shape[0], -1)
    out = op @ flat
    return np.moveaxis(out.reshape((op.shape[0],) + moved.shape[1:]), 0, axis)
