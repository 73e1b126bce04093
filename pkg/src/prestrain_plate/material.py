"""Frame-indifferent energy densities and their quadratic forms at the identity.

Two densities are provided: a Saint Venant-Kirchhoff law and the squared
distance to the rotation group. Both are minimized exactly on rotations and
share the isotropic quadratic form Q3(F) = 2*mu*|sym F|^2 + lam*(tr F)^2 at
the identity (mu = 1, lam = 0 for the distance density).

The planar form Q2 relaxes Q3 over out-of-plane entries:

    Q2(G) = min_c Q3(star(G) + sym(c (x) e3))

which for the isotropic family has the closed form
2*mu*|sym G|^2 + (2*mu*lam / (2*mu + lam)) * (tr G)^2, attained at
c = (0, 0, -lam * tr G / (2*mu + lam)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensors import dist2_SO3, nearest_rotation, frobenius2, star, sym


@dataclass(frozen=True)
class IsotropicModuli:
    """Lame pair with mu > 0 and lam >= 0."""

    mu: float
    lam: float

    def __post_init__(self):
        if not (self.mu > 0.0):
            raise ValueError(f"shear modulus must be positive, got mu={self.mu}")
        if not (self.lam >= 0.0):
            raise ValueError(f"first Lame modulus must be nonnegative, got lam={self.lam}")


def _trace(F: np.ndarray) -> np.ndarray:
    return np.trace(F, axis1=-2, axis2=-1)


def q3_isotropic(mu, lam, F: np.ndarray) -> np.ndarray:
    """Isotropic quadratic form 2*mu*|sym F|^2 + lam*(tr F)^2 on 3x3 arguments.

    mu and lam may be arrays broadcasting against the leading axes of F.
    """
    S = sym(F)
    return 2.0 * mu * frobenius2(S) + lam * _trace(F) ** 2


def q2_isotropic(mu, lam, F: np.ndarray) -> np.ndarray:
    """Planar relaxation of q3_isotropic on 2x2 arguments."""
    S = sym(F)
    kappa = 2.0 * mu * lam / (2.0 * mu + lam)
    return 2.0 * mu * frobenius2(S) + kappa * _trace(F) ** 2


def plane_stress_correction_isotropic(mu, lam, F: np.ndarray) -> np.ndarray:
    """Minimizing out-of-plane vector of the relaxation defining q2_isotropic."""
    F = np.asarray(F, dtype=float)
    c = np.zeros(F.shape[:-2] + (3,))
    c[..., 2] = -lam * _trace(F) / (2.0 * mu + lam)
    return c


def sym_outer_e3(c: np.ndarray) -> np.ndarray:
    """sym(c (x) e3) for a stack of vectors c of shape (..., 3)."""
    c = np.asarray(c, dtype=float)
    out = np.zeros(c.shape[:-1] + (3, 3))
    out[..., :, 2] = 0.5 * c
    out[..., 2, :] += 0.5 * c
    return out


def transverse_part(F: np.ndarray) -> np.ndarray:
    """Vector l with sym(F - star(minor2(F))) = sym(l (x) e3).

    Componentwise: (F13 + F31, F23 + F32, F33).
    """
    F = np.asarray(F, dtype=float)
    out = np.empty(F.shape[:-2] + (3,))
    out[..., 0] = F[..., 0, 2] + F[..., 2, 0]
    out[..., 1] = F[..., 1, 2] + F[..., 2, 1]
    out[..., 2] = F[..., 2, 2]
    return out


class EnergyDensity:
    """Base class: shared quadratic-form machinery over effective moduli."""

    kind = "abstract"

    def __init__(self, moduli: IsotropicModuli):
        self.moduli = moduli

    def energy(self, F: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, F: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def nondegeneracy_constant(self) -> float:
        """A constant c with energy >= c * dist2_SO3 near the rotation group."""
        raise NotImplementedError

    def q3(self, F: np.ndarray) -> np.ndarray:
        """Quadratic form of the density at the identity, on 3x3 arguments."""
        return q3_isotropic(self.moduli.mu, self.moduli.lam, F)

    def q2(self, F: np.ndarray) -> np.ndarray:
        """Out-of-plane relaxation of q3, on 2x2 arguments."""
        return q2_isotropic(self.moduli.mu, self.moduli.lam, F)

    def plane_stress_correction(self, F: np.ndarray) -> np.ndarray:
        """Vector c attaining q2(F) = q3(star(F) + sym(c (x) e3))."""
        return plane_stress_correction_isotropic(self.moduli.mu, self.moduli.lam, F)

    def _check_input(self, F: np.ndarray) -> np.ndarray:
        F = np.asarray(F, dtype=float)
        if F.shape[-2:] != (3, 3):
            raise ValueError(f"expected trailing 3x3 block, got shape {F.shape}")
        if not np.all(np.isfinite(F)):
            raise ValueError("deformation gradient contains non-finite entries")
        return F


class SVKDensity(EnergyDensity):
    """Saint Venant-Kirchhoff: (mu/4)|F^T F - I|^2 + (lam/8) tr(F^T F - I)^2."""

    kind = "svk"

    def energy(self, F: np.ndarray) -> np.ndarray:
        F = self._check_input(F)
        E = np.swapaxes(F, -1, -2) @ F
        E[..., 0, 0] -= 1.0
        E[..., 1, 1] -= 1.0
        E[..., 2, 2] -= 1.0
        mu, lam = self.moduli.mu, self.moduli.lam
        return 0.25 * mu * frobenius2(E) + 0.125 * lam * _trace(E) ** 2

    def gradient(self, F: np.ndarray) -> np.ndarray:
        F = self._check_input(F)
        E = np.swapaxes(F, -1, -2) @ F
        E[..., 0, 0] -= 1.0
        E[..., 1, 1] -= 1.0
        E[..., 2, 2] -= 1.0
        mu, lam = self.moduli.mu, self.moduli.lam
        P = mu * E
        tr = 0.5 * lam * _trace(E)
        P[..., 0, 0] += tr
        P[..., 1, 1] += tr
        P[..., 2, 2] += tr
        return F @ P

    @property
    def nondegeneracy_constant(self) -> float:
        # W = (mu/4)|U^2 - I|^2 + ... >= (mu/4) sigma_min(U + I)^2 |U - I|^2,
        # and sigma_min(U + I) >= 3/2 within Frobenius distance 1/2 of SO(3).
        return 0.5625 * self.moduli.mu


class Dist2Density(EnergyDensity):
    """Squared Frobenius distance to the rotation group."""

    kind = "dist2"

    def __init__(self, moduli: IsotropicModuli | None = None):
        # The Hessian at the identity is 2|sym F|^2 regardless of input moduli.
        super().__init__(IsotropicModuli(mu=1.0, lam=0.0))

    def energy(self, F: np.ndarray) -> np.ndarray:
        F = self._check_input(F)
        return dist2_SO3(F)

    def gradient(self, F: np.ndarray) -> np.ndarray:
        """2 (F - R(F)) with R the nearest rotation; needs det F > 0."""
        F = self._check_input(F)
        return 2.0 * (F - nearest_rotation(F))

    @property
    def nondegeneracy_constant(self) -> float:
        return 1.0


def make_density(kind: str, mu: float = 1.0, lam: float = 1.0) -> EnergyDensity:
    """Construct a density by name ('svk' or 'dist2')."""
    if kind == "svk":
        return SVKDensity(IsotropicModuli(mu=mu, lam=lam))
    if kind == "dist2":
        return Dist2Density()
    raise ValueError(f"unknown energy density kind {kind!r}")


def q2_bruteforce(mu, lam, F: np.ndarray, half_width: float = 10.0,
                  levels: int = 18, points_per_axis: int = 5,
                  chunk: int = 2048):
    """Numerical relaxation min_c q3(star(F) + sym(c (x) e3)) by grid refinement.

    Searches c in a cube of the given half width with a shrinking 5^3 stencil
    (the center is kept at every level, so the best value is monotone). The
    map c -> q3 is a separable convex quadratic and the minimizer satisfies
    |c3| <= |tr F|, so the box encloses it for moderate inputs. Returns
    (values, minimizing vectors) and serves as an independent check of the
    closed-form q2.
    """
    F = np.asarray(F, dtype=float)
    if F.shape[-2:] != (2, 2):
        raise ValueError(f"expected trailing 2x2 block, got shape {F.shape}")
    lead = F.shape[:-2]
    Fflat = F.reshape((-1, 2, 2))
    mu_flat = np.broadcast_to(np.asarray(mu, dtype=float), lead).reshape(-1)
    lam_flat = np.broadcast_to(np.asarray(lam, dtype=float), lead).reshape(-1)

    grid = np.linspace(-1.0, 1.0, points_per_axis)
    offsets = np.stack(np.meshgrid(grid, grid, grid, indexing="ij"),
                       axis=-1).reshape(-1, 3)

    n = Fflat.shape[0]
    values = np.empty(n)
    centers_out = np.empty((n, 3))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        base = star(Fflat[lo:hi])[:, None]
        mu_c = mu_flat[lo:hi, None]
        lam_c = lam_flat[lo:hi, None]
        centers = np.zeros((hi - lo, 3))
        radius = half_width
        best = None
        for _ in range(levels):
            cand = centers[:, None, :] + radius * offsets[None, :, :]
            vals = q3_isotropic(mu_c, lam_c, base + sym_outer_e3(cand))
            pick = np.argmin(vals, axis=1)
            rows = np.arange(hi - lo)
            centers = cand[rows, pick]
            best = vals[rows, pick]
            radius *= 0.5
        values[lo:hi] = best
        centers_out[lo:hi] = centers
    return values.reshape(lead), centers_out.reshape(lead + (3,))
