"""Shared oracles for the tests: random rotations, SVD polar factors, FD gradients."""
import numpy as np


def random_rotations(rng, n: int) -> np.ndarray:
    """Stack of n rotations from axis-angle draws (Rodrigues formula)."""
    axis = rng.normal(size=(n, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    theta = rng.uniform(0.0, np.pi, size=n)
    K = np.zeros((n, 3, 3))
    K[:, 0, 1] = -axis[:, 2]
    K[:, 0, 2] = axis[:, 1]
    K[:, 1, 0] = axis[:, 2]
    K[:, 1, 2] = -axis[:, 0]
    K[:, 2, 0] = -axis[:, 1]
    K[:, 2, 1] = axis[:, 0]
    s = np.sin(theta)[:, None, None]
    c = (1.0 - np.cos(theta))[:, None, None]
    return np.eye(3) + s * K + c * (K @ K)


def random_rotation(rng) -> np.ndarray:
    return random_rotations(rng, 1)[0]


def random_spd_factors(rng, sigma_lo: float = 0.5, sigma_hi: float = 2.0):
    """Orientation-preserving matrix with known polar factors (F, rotation, stretch)."""
    Q = random_rotation(rng)
    V = random_rotation(rng)
    sigma = rng.uniform(sigma_lo, sigma_hi, size=3)
    U = V @ np.diag(sigma) @ V.T
    U = 0.5 * (U + U.T)
    return Q @ U, Q, U


def svd_polar_rotation(F: np.ndarray) -> np.ndarray:
    """Rotation factor from the SVD, the standard reference construction."""
    U, _, Vt = np.linalg.svd(F)
    R = U @ Vt
    if np.linalg.det(R) < 0.0:
        U = U.copy()
        U[:, -1] *= -1.0
        R = U @ Vt
    return R


def fd_density_gradient(density, F: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a matrix-argument energy density."""
    G = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            E = np.zeros((3, 3))
            E[i, j] = step
            G[i, j] = (density.energy(F + E) - density.energy(F - E)) / (2.0 * step)
    return G
