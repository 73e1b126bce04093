"""Explicit near-minimizing slab deformations built from a smooth displacement.

Given an analytic out-of-plane displacement v and prestrain (S, B, gamma),
the deformation

    u(x', x3) = (x', h^(gamma/2) v) + x3 (-h^(gamma/2) grad v, 1)
                + (1/2) h^(gamma/2) x3^2 d(x'),
    d = transverse_part(B) + plane_stress_correction(-hess v - minor2(sym B)),

drives the rescaled slab energy E_h / h^(gamma+2) to the bending functional
as h -> 0; the warping vector d relaxes the transverse strain so the limit
sees the relaxed planar form Q2 instead of Q3. The displacement must be
analytic because the energy of the ansatz involves third derivatives of v
(through grad d).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bending import BendingFunctional, bending_energy
from .fields import ScalarField2D
from .fitting import DEGENERATE_FLOOR, SlopeFit, fit_loglog_slope
from .material import EnergyDensity, transverse_part
from .plate3d import Deformation3D, EnergyBreakdown, EnergyWorkspace, PlateGrid
from .prestrain import PrestrainSpec
from .tensors import dist2_SO3, minor2, sym


class RefinementError(RuntimeError):
    """Grid refinement moved a reported energy too much to trust the grid."""


@dataclass(frozen=True)
class RecoveryInput:
    """Analytic displacement plus prestrain and density for the slab ansatz."""

    v3: ScalarField2D
    spec: PrestrainSpec
    density: EnergyDensity

    def __post_init__(self):
        if not getattr(self.v3, "is_analytic", False):
            raise ValueError(
                "recovery needs an analytic displacement (third derivatives of "
                "grid samples are not available)")


def warping_field(inp: RecoveryInput, x1, x2, with_gradient: bool = False):
    """Quadratic-in-thickness warping direction d(x') of the ansatz.

    With with_gradient=True also returns its planar derivatives as an
    (..., 2, 3) array (leading axis: derivative direction).
    """
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    B = inp.spec.B.value(x1, x2)
    hess = inp.v3.hessian(x1, x2)
    d = transverse_part(B) + inp.density.plane_stress_correction(
        -hess - minor2(sym(B)))
    if not with_gradient:
        return d
    grads = []
    for axis, (d1, d2) in enumerate(((1, 0), (0, 1))):
        dB = inp.spec.B.derivative(x1, x2, d1, d2)
        dhess = inp.v3.hessian_derivative(x1, x2, axis)
        grads.append(transverse_part(dB) + inp.density.plane_stress_correction(
            -dhess - minor2(sym(dB))))
    return d, np.stack(grads, axis=-2)


def deformation_values(inp: RecoveryInput, h: float, x1, x2, x3) -> np.ndarray:
    """Evaluate the ansatz at physical slab points (broadcasting)."""
    x1, x2, x3 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float),
                                     np.asarray(x3, float))
    scale = h**(0.5 * inp.spec.gamma)
    v = inp.v3.value(x1, x2)
    grad = inp.v3.gradient(x1, x2)
    d = warping_field(inp, x1, x2)
    out = np.empty(x1.shape + (3,))
    half_x3sq = 0.5 * x3**2
    out[..., 0] = x1 - scale * x3 * grad[..., 0] + scale * half_x3sq * d[..., 0]
    out[..., 1] = x2 - scale * x3 * grad[..., 1] + scale * half_x3sq * d[..., 1]
    out[..., 2] = scale * v + x3 + scale * half_x3sq * d[..., 2]
    return out


def deformation_gradient_analytic(inp: RecoveryInput, h: float, x1, x2, x3) -> np.ndarray:
    """Exact gradient of the ansatz (no finite differences)."""
    x1, x2, x3 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float),
                                     np.asarray(x3, float))
    scale = h**(0.5 * inp.spec.gamma)
    grad = inp.v3.gradient(x1, x2)
    hess = inp.v3.hessian(x1, x2)
    d, dgrad = warping_field(inp, x1, x2, with_gradient=True)

    G = np.zeros(x1.shape + (3, 3))
    G[..., 0, 0] = 1.0
    G[..., 1, 1] = 1.0
    G[..., 2, 2] = 1.0
    half_x3sq = (0.5 * x3**2)[..., None]
    # in-plane columns: entry (a, b), b < 3, is d_b u^a
    G[..., :2, :2] += -scale * x3[..., None, None] * hess
    G[..., :2, :2] += scale * half_x3sq[..., None] * np.swapaxes(dgrad, -1, -2)[..., :2, :]
    G[..., 2, :2] += scale * (grad + half_x3sq * dgrad[..., :, 2])
    # thickness column
    G[..., :2, 2] += -scale * grad
    G[..., :, 2] += scale * x3[..., None] * d
    return G


def recovery_deformation(inp: RecoveryInput, h: float, grid: PlateGrid) -> Deformation3D:
    """Sample the ansatz on a plate grid (physical x3 = h t)."""
    values = deformation_values(inp, h,
                                grid.x1[:, None, None],
                                grid.x2[None, :, None],
                                h * grid.t[None, None, :])
    return Deformation3D(values, grid)


def energy_with_exact_gradients(inp: RecoveryInput, h: float,
                                grid: PlateGrid) -> EnergyBreakdown:
    """Slab energy of the ansatz using its analytic gradient.

    Same quadrature as the discrete energy but no finite-difference error, so
    what remains is the model error of the ansatz plus quadrature error.
    """
    ws = EnergyWorkspace(inp.spec, inp.density, h, grid)
    G = deformation_gradient_analytic(inp, h,
                                      grid.x1[:, None, None],
                                      grid.x2[None, :, None],
                                      h * grid.t[None, None, :])
    F = G @ ws.Ainv
    W = inp.density.energy(F)
    det = np.linalg.det(F)
    return EnergyBreakdown(total=float(np.sum(ws.weights * W)),
                           max_dist2=float(np.max(dist2_SO3(F))),
                           min_det=float(np.min(det)),
                           degenerate_points=int(np.count_nonzero(det <= 0.0)))


@dataclass
class CurvePoint:
    h: float
    n1: int
    n2: int
    energy: float
    rescaled: float
    abs_error: float


@dataclass
class RescaledCurve:
    """Rescaled slab energies of the ansatz against the bending limit."""

    points: list
    reference: float
    fit: SlopeFit | None


def _grid_for(h: float, rect, mode: str, n1: int, n2: int, n_min: int, n_max: int):
    if mode == "fixed":
        return n1, n2
    if mode == "match_h":
        k1 = int(np.clip(round(rect.span1 / h) + 1, n_min, n_max))
        k2 = int(np.clip(round(rect.span2 / h) + 1, n_min, n_max))
        return k1, k2
    raise ValueError(f"unknown grid mode {mode!r}")


def rescaled_energy_curve(inp: RecoveryInput, hs, n1: int = 128, n2: int = 128,
                          m: int = 4, mode: str = "fixed", n_min: int = 8,
                          n_max: int = 256, refinement_rtol: float = 0.10,
                          analytic_gradient: bool = False,
                          reference_resolution: int = 257) -> RescaledCurve:
    """Rescaled energies E_h / h^(gamma+2) of the ansatz over a thickness sweep.

    The thickness list must be strictly decreasing in (0, 1/2]. Each point is
    recomputed on a doubled in-plane grid; a relative change beyond
    refinement_rtol raises RefinementError instead of reporting an
    under-resolved number. mode='match_h' sizes the grid so the in-plane
    spacing tracks h, which keeps the finite-difference contribution to the
    rescaled energy at second order in h.
    """
    hs = [float(h) for h in hs]
    if not hs:
        raise ValueError("empty thickness sweep")
    if any(not (0.0 < h <= 0.5) for h in hs):
        raise ValueError("thicknesses must lie in (0, 1/2]")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("thicknesses must be strictly decreasing")

    fnl = BendingFunctional(spec=inp.spec, density=inp.density)
    reference = bending_energy(inp.v3, fnl, reference_resolution, reference_resolution)

    def point_energy(h, k1, k2):
        grid = PlateGrid(k1, k2, m, inp.spec.omega)
        if analytic_gradient:
            return energy_with_exact_gradients(inp, h, grid).total
        u = recovery_deformation(inp, h, grid)
        return EnergyWorkspace(inp.spec, inp.density, h, grid).energy(u.values)

    points = []
    for h in hs:
        k1, k2 = _grid_for(h, inp.spec.omega, mode, n1, n2, n_min, n_max)
        energy = point_energy(h, k1, k2)
        rescaled = energy / h**(inp.spec.gamma + 2.0)
        fine = point_energy(h, 2 * k1 - 1, 2 * k2 - 1) / h**(inp.spec.gamma + 2.0)
        denom = max(abs(rescaled), abs(fine), 1e-300)
        if abs(fine - rescaled) > refinement_rtol * denom and abs(fine - rescaled) > 1e-14:
            raise RefinementError(
                f"rescaled energy at h={h:g} moved {abs(fine - rescaled) / denom:.1%} "
                f"under refinement ({k1}x{k2} -> {2 * k1 - 1}x{2 * k2 - 1})")
        points.append(CurvePoint(h=h, n1=k1, n2=k2, energy=energy,
                                 rescaled=rescaled,
                                 abs_error=abs(rescaled - reference)))

    fit = None
    errors = np.array([p.abs_error for p in points])
    if len(points) >= 3 and np.all(errors > DEGENERATE_FLOOR):
        fit = fit_loglog_slope(np.array(hs), errors)
    return RescaledCurve(points=points, reference=reference, fit=fit)
