"""Prestrain data for the thin slab: growth tensor, induced metric, diagnostics.

A prestrain is a pair of planar 3x3 fields (S, B), a scaling exponent
gamma > 2, and a planar domain. The thickness-h slab carries the growth
tensor

    A_h(x', x3) = I + h^gamma S(x') + h^(gamma/2) x3 B(x'),   |x3| <= h/2,

whose induced metric A_h^T A_h deviates from the identity at leading orders
2 h^gamma sym S + 2 h^(gamma/2) x3 sym B.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (ConstantMatrixField, MatrixField2D, PolynomialMatrixField,
                     TrigMatrixField, hessian_matrix_field, zero_matrix_field)
from .grids import Rectangle
from .tensors import SingularMatrixError, minor2, sym

__all__ = [
    "PrestrainSpec", "growth_tensor", "growth_tensor_inverse", "metric",
    "metric_truncation", "linearized_gauss_curvature", "bending_incompatibility",
    "MatrixField2D", "ConstantMatrixField", "PolynomialMatrixField",
    "TrigMatrixField", "hessian_matrix_field", "zero_matrix_field", "Rectangle",
]


@dataclass(frozen=True)
class PrestrainSpec:
    """Planar prestrain fields with their scaling exponent and domain."""

    S: MatrixField2D
    B: MatrixField2D
    gamma: float
    omega: Rectangle = Rectangle()

    def __post_init__(self):
        if not (self.gamma > 2.0):
            raise ValueError(
                f"scaling exponent gamma must exceed 2 (got gamma={self.gamma}); "
                "the model covers the very weak prestrain regime only")


def _check_slab_coords(h: float, x3) -> np.ndarray:
    if not (0.0 < h <= 0.5):
        raise ValueError(f"thickness must lie in (0, 1/2], got h={h}")
    x3 = np.asarray(x3, dtype=float)
    if np.any(np.abs(x3) > 0.5 * h * (1.0 + 1e-9)):
        raise ValueError("through-thickness coordinate exceeds the slab |x3| <= h/2")
    return x3


def growth_tensor(spec: PrestrainSpec, h: float, x1, x2, x3) -> np.ndarray:
    """A_h = I + h^gamma S + h^(gamma/2) x3 B at physical slab points."""
    x3 = _check_slab_coords(h, x3)
    x1, x2, x3 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float), x3)
    A = h**spec.gamma * spec.S.value(x1, x2)
    A += h**(0.5 * spec.gamma) * x3[..., None, None] * spec.B.value(x1, x2)
    A[..., 0, 0] += 1.0
    A[..., 1, 1] += 1.0
    A[..., 2, 2] += 1.0
    return A


def growth_tensor_inverse(spec: PrestrainSpec, h: float, x1, x2, x3) -> np.ndarray:
    """Pointwise inverse of the growth tensor; rejects near-singular values."""
    A = growth_tensor(spec, h, x1, x2, x3)
    det = np.linalg.det(A)
    if np.any(np.abs(det) <= 1e-10):
        raise SingularMatrixError(
            "growth tensor is numerically singular; prestrain fields are too "
            "large for this thickness")
    return np.linalg.inv(A)


def metric(spec: PrestrainSpec, h: float, x1, x2, x3) -> np.ndarray:
    """Induced metric A_h^T A_h (exactly symmetric)."""
    A = growth_tensor(spec, h, x1, x2, x3)
    return sym(np.swapaxes(A, -1, -2) @ A)


def metric_truncation(spec: PrestrainSpec, h: float, x1, x2, x3) -> np.ndarray:
    """Leading part I + 2 h^gamma sym S + 2 h^(gamma/2) x3 sym B of the metric.

    The dropped terms are bounded by C (h^(3 gamma / 2) + h^gamma x3^2) with C
    depending only on sup |S| and sup |B|.
    """
    x3 = _check_slab_coords(h, x3)
    x1, x2, x3 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float), x3)
    G = 2.0 * h**spec.gamma * sym(spec.S.value(x1, x2))
    G += 2.0 * h**(0.5 * spec.gamma) * x3[..., None, None] * sym(spec.B.value(x1, x2))
    G[..., 0, 0] += 1.0
    G[..., 1, 1] += 1.0
    G[..., 2, 2] += 1.0
    return G


def linearized_gauss_curvature(field: MatrixField2D, x1, x2) -> np.ndarray:
    """Linearized Gauss curvature of the planar block of sym(field).

    For M = minor2(sym(field)) this is -(d22 M11 - 2 d12 M12 + d11 M22); it
    vanishes identically iff M is locally a Hessian.
    """
    m11_22 = minor2(sym(field.derivative(x1, x2, 0, 2)))[..., 0, 0]
    m12_12 = minor2(sym(field.derivative(x1, x2, 1, 1)))[..., 0, 1]
    m22_11 = minor2(sym(field.derivative(x1, x2, 2, 0)))[..., 1, 1]
    return -(m11_22 - 2.0 * m12_12 + m22_11)


def bending_incompatibility(B: MatrixField2D, x1, x2) -> np.ndarray:
    """Obstruction density for the bending field: zero iff minor2(sym B) is a Hessian."""
    return linearized_gauss_curvature(B, x1, x2)
