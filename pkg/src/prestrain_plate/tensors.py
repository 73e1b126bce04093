"""Small fixed-size matrix algebra used throughout the plate model.

All routines broadcast over leading axes, so a field of matrices with shape
(..., 3, 3) is handled in one call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularMatrixError(ValueError):
    """Raised when a matrix factorization needs det F > 0 and does not get it."""


def sym(F: np.ndarray) -> np.ndarray:
    """Symmetric part (F + F^T) / 2 over the last two axes."""
    F = np.asarray(F, dtype=float)
    return 0.5 * (F + np.swapaxes(F, -1, -2))


def skew(F: np.ndarray) -> np.ndarray:
    """Antisymmetric part (F - F^T) / 2 over the last two axes."""
    F = np.asarray(F, dtype=float)
    return 0.5 * (F - np.swapaxes(F, -1, -2))


def star(F: np.ndarray) -> np.ndarray:
    """Embed a planar matrix into 3x3 with zero third row and column."""
    F = np.asarray(F, dtype=float)
    if F.shape[-2:] != (2, 2):
        raise ValueError(f"expected trailing 2x2 block, got shape {F.shape}")
    out = np.zeros(F.shape[:-2] + (3, 3))
    out[..., :2, :2] = F
    return out


def minor2(F: np.ndarray) -> np.ndarray:
    """Leading planar 2x2 block of a 3x3 matrix."""
    F = np.asarray(F, dtype=float)
    if F.shape[-2:] != (3, 3):
        raise ValueError(f"expected trailing 3x3 block, got shape {F.shape}")
    return F[..., :2, :2]


def frobenius2(F: np.ndarray) -> np.ndarray:
    """Squared Frobenius norm over the last two axes."""
    F = np.asarray(F, dtype=float)
    return np.sum(F * F, axis=(-1, -2))


def singular_values(F: np.ndarray) -> np.ndarray:
    """Singular values in ascending order, via the spectrum of F^T F."""
    F = np.asarray(F, dtype=float)
    C = np.swapaxes(F, -1, -2) @ F
    w = np.linalg.eigvalsh(C)
    return np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class PolarFactors:
    """Rotation-stretch factorization F = rotation @ stretch."""

    rotation: np.ndarray
    stretch: np.ndarray


def polar_decompose(F: np.ndarray, rtol: float = 1e-12) -> PolarFactors:
    """Polar factors of an orientation-preserving matrix.

    Uses the symmetric eigen-decomposition of F^T F; the rotation is
    F (F^T F)^{-1/2}. Requires det F > 0 and smallest singular value above
    rtol * ||F||, otherwise raises SingularMatrixError.
    """
    F = np.asarray(F, dtype=float)
    if F.shape[-2:] != (3, 3):
        raise ValueError(f"expected trailing 3x3 block, got shape {F.shape}")
    det = np.linalg.det(F)
    if np.any(det <= 0.0):
        raise SingularMatrixError("polar decomposition needs det F > 0")
    C = np.swapaxes(F, -1, -2) @ F
    w, V = np.linalg.eigh(C)
    sigma = np.sqrt(np.clip(w, 0.0, None))
    scale = np.sqrt(frobenius2(F))
    if np.any(sigma[..., 0] <= rtol * scale):
        raise SingularMatrixError("matrix is numerically singular")
    Vt = np.swapaxes(V, -1, -2)
    stretch = sym((V * sigma[..., None, :]) @ Vt)
    inv_root = (V / sigma[..., None, :]) @ Vt
    rotation = F @ inv_root
    return PolarFactors(rotation=rotation, stretch=stretch)


def nearest_rotation(F: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Rotation factor of the polar decomposition (the closest rotation to F)."""
    return polar_decompose(F, rtol=rtol).rotation


def dist2_SO3(F: np.ndarray) -> np.ndarray:
    """Squared Frobenius distance from F to the rotation group.

    Equals sum_i (sigma_i - 1)^2 when det F >= 0; when det F < 0 the smallest
    singular value enters as (sigma_min + 1)^2 instead.
    """
    F = np.asarray(F, dtype=float)
    if F.shape[-2:] != (3, 3):
        raise ValueError(f"expected trailing 3x3 block, got shape {F.shape}")
    sigma = singular_values(F)
    det = np.linalg.det(F)
    terms = (sigma - 1.0) ** 2
    flipped = (sigma[..., 0] + 1.0) ** 2
    terms[..., 0] = np.where(det < 0.0, flipped, terms[..., 0])
    return np.sum(terms, axis=-1)
