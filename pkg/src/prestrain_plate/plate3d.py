"""Discrete three-dimensional slab energy on the rescaled domain.

Deformations live on a tensor grid over omega x (-1/2, 1/2): uniform in-plane
nodes and Gauss-Legendre nodes through the thickness. The energy

    (1/h) * integral over the physical slab of W(grad u . A_h^{-1})

is evaluated in rescaled coordinates (the 1/h is absorbed by the change of
variables x3 = h t): in-plane derivatives by second-order finite differences,
the t-derivative by the spectral differentiation matrix of the Gauss nodes,
quadrature by trapezoid (in-plane) times Gauss (thickness). The gradient is
exact for the discrete energy (adjoint of the difference operators), which
makes descent methods and finite-difference checks agree to roundoff.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fields import GridField2D, ScalarField2D
from .grids import (Rectangle, apply_matrix, diff1_matrix, gauss_legendre_half,
                    lagrange_diff_matrix, trapezoid_weights)
from .material import EnergyDensity, transverse_part
from .optimize import OptimOptions, OptimResult, lbfgs
from .prestrain import PrestrainSpec, growth_tensor
from .tensors import (SingularMatrixError, dist2_SO3, minor2, nearest_rotation,
                      sym)


class DegenerateDeformationError(RuntimeError):
    """det grad u <= 0 at a quadrature point for an orientation-requiring density."""


@dataclass(eq=False)
class PlateGrid:
    """Tensor product grid: n1 x n2 uniform in-plane nodes, m Gauss nodes in t."""

    n1: int
    n2: int
    m: int
    rect: Rectangle = Rectangle()

    def __post_init__(self):
        if self.n1 < 3 or self.n2 < 3:
            raise ValueError("in-plane resolution must be at least 3 nodes per axis")
        if self.m < 2:
            raise ValueError("need at least 2 through-thickness nodes")
        self.x1, self.x2 = self.rect.nodes(self.n1, self.n2)
        self.dx1 = self.rect.span1 / (self.n1 - 1)
        self.dx2 = self.rect.span2 / (self.n2 - 1)
        self.t, self.t_weights = gauss_legendre_half(self.m)
        self.D1 = diff1_matrix(self.n1, self.dx1)
        self.D2 = diff1_matrix(self.n2, self.dx2)
        self.D3 = lagrange_diff_matrix(self.t)
        self.w1 = trapezoid_weights(self.rect.span1, self.n1)
        self.w2 = trapezoid_weights(self.rect.span2, self.n2)
        self.weights = (self.w1[:, None, None] * self.w2[None, :, None]
                        * self.t_weights[None, None, :])

    @property
    def shape(self):
        return (self.n1, self.n2, self.m, 3)


@dataclass
class Deformation3D:
    """Nodal deformation values of shape (n1, n2, m, 3)."""

    values: np.ndarray
    grid: PlateGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("deformation contains non-finite values")


@dataclass
class EnergyBreakdown:
    """Discrete energy with pointwise diagnostics over quadrature nodes."""

    total: float
    max_dist2: float
    min_det: float
    degenerate_points: int


def identity_lift(grid: PlateGrid, h: float) -> Deformation3D:
    """The exact map (x', t) -> (x', h t) of the undeformed slab."""
    values = np.zeros(grid.shape)
    values[..., 0] = grid.x1[:, None, None]
    values[..., 1] = grid.x2[None, :, None]
    values[..., 2] = h * grid.t[None, None, :]
    return Deformation3D(values, grid)


class EnergyWorkspace:
    """Caches growth-tensor inverses and quadrature data for one (spec, h, grid).

    Use this when many energy or gradient evaluations share the same setup
    (minimization, finite-difference checks).
    """

    def __init__(self, spec: PrestrainSpec, density: EnergyDensity,
                 h: float, grid: PlateGrid):
        self.spec = spec
        self.density = density
        self.h = float(h)
        self.grid = grid
        X1 = grid.x1[:, None, None]
        X2 = grid.x2[None, :, None]
        X3 = self.h * grid.t[None, None, :]
        self.A = growth_tensor(spec, self.h, X1, X2, X3)
        det = np.linalg.det(self.A)
        if np.any(np.abs(det) <= 1e-10):
            raise SingularMatrixError("growth tensor is numerically singular on the grid")
        self.Ainv = np.linalg.inv(self.A)
        self.AinvT = np.ascontiguousarray(np.swapaxes(self.Ainv, -1, -2))
        self.weights = grid.weights

    def gradient_tensor(self, values: np.ndarray) -> np.ndarray:
        """Discrete grad u (physical x3 derivative) as columns of a (..., 3, 3) array."""
        g = self.grid
        d1 = apply_matrix(g.D1, values, axis=0)
        d2 = apply_matrix(g.D2, values, axis=1)
        d3 = apply_matrix(g.D3, values, axis=2) / self.h
        return np.stack([d1, d2, d3], axis=-1)

    def elastic_gradients(self, values: np.ndarray) -> np.ndarray:
        """F = grad u . A_h^{-1} at all quadrature nodes."""
        return self.gradient_tensor(values) @ self.Ainv

    def energy(self, values: np.ndarray) -> float:
        F = self.elastic_gradients(values)
        return float(np.sum(self.weights * self.density.energy(F)))

    def energy_diagnostics(self, values: np.ndarray) -> EnergyBreakdown:
        F = self.elastic_gradients(values)
        W = self.density.energy(F)
        det = np.linalg.det(F)
        return EnergyBreakdown(
            total=float(np.sum(self.weights * W)),
            max_dist2=float(np.max(dist2_SO3(F))),
            min_det=float(np.min(det)),
            degenerate_points=int(np.count_nonzero(det <= 0.0)))

    def energy_and_gradient(self, values: np.ndarray):
        """Exact gradient of the discrete energy with respect to nodal values."""
        G = self.gradient_tensor(values)
        F = G @ self.Ainv
        W = self.density.energy(F)
        dW = self.density.gradient(F)
        P = self.weights[..., None, None] * (dW @ self.AinvT)
        g = apply_matrix(self.grid.D1.T, P[..., :, 0], axis=0)
        g += apply_matrix(self.grid.D2.T, P[..., :, 1], axis=1)
        g += apply_matrix(self.grid.D3.T, P[..., :, 2], axis=2) / self.h
        return float(np.sum(self.weights * W)), g


def evaluate_energy(u: Deformation3D, spec: PrestrainSpec, density: EnergyDensity,
                    h: float) -> EnergyBreakdown:
    """Discrete slab energy with diagnostics.

    Raises DegenerateDeformationError for the distance density when the
    deformation gradient loses orientation at a quadrature node; the
    polynomial density only flags it in the breakdown.
    """
    ws = EnergyWorkspace(spec, density, h, u.grid)
    out = ws.energy_diagnostics(u.values)
    if out.degenerate_points:
        if density.kind == "dist2":
            raise DegenerateDeformationError(
                f"det grad u <= 0 at {out.degenerate_points} quadrature points")
        warnings.warn(f"deformation loses orientation at {out.degenerate_points} "
                      "quadrature points", RuntimeWarning, stacklevel=2)
    return out


def energy_gradient(u: Deformation3D, spec: PrestrainSpec, density: EnergyDensity,
                    h: float) -> np.ndarray:
    """Gradient of the discrete energy; same shape as the nodal values."""
    ws = EnergyWorkspace(spec, density, h, u.grid)
    return ws.energy_and_gradient(u.values)[1]


@dataclass
class MinimizeEnergyResult:
    deformation: Deformation3D
    breakdown: EnergyBreakdown
    optim: OptimResult


def minimize_energy(u0: Deformation3D, spec: PrestrainSpec, density: EnergyDensity,
                    h: float, opts: OptimOptions | None = None) -> MinimizeEnergyResult:
    """Descend the discrete energy from u0 by L-BFGS with Armijo backtracking.

    The returned energy never exceeds the starting energy. Trial points where
    the density is undefined (orientation loss for the distance density) are
    treated as infinite and rejected by the line search; a stalled line search
    terminates with the last iterate and a status flag rather than an error.
    """
    ws = EnergyWorkspace(spec, density, h, u0.grid)
    shape = u0.grid.shape

    def fun_grad(x):
        values = x.reshape(shape)
        try:
            f, g = ws.energy_and_gradient(values)
        except SingularMatrixError:
            return np.inf, np.zeros_like(x)
        if not np.isfinite(f):
            return np.inf, np.zeros_like(x)
        return f, g.reshape(-1)

    result = lbfgs(fun_grad, u0.values.reshape(-1), opts)
    u = Deformation3D(result.x.reshape(shape), u0.grid)
    return MinimizeEnergyResult(deformation=u,
                                breakdown=ws.energy_diagnostics(u.values),
                                optim=result)


class DisplacementFields(NamedTuple):
    v1: GridField2D
    v2: GridField2D
    v3: GridField2D


def scaled_displacement(u: Deformation3D, spec: PrestrainSpec, h: float) -> DisplacementFields:
    """Thickness-averaged displacement, rescaled by h^(gamma/2).

    V_h(x') = h^(-gamma/2) * (average over t of u(x', t) - (x', 0)).
    """
    g = u.grid
    ybar = np.tensordot(u.values, g.t_weights, axes=([2], [0]))
    ybar[..., 0] -= g.x1[:, None]
    ybar[..., 1] -= g.x2[None, :]
    V = ybar / h**(0.5 * spec.gamma)
    return DisplacementFields(GridField2D(V[..., 0], g.rect),
                              GridField2D(V[..., 1], g.rect),
                              GridField2D(V[..., 2], g.rect))


@dataclass
class RotationDiagnostic:
    """Per-cell rotations and the rigidity misfit they achieve."""

    rotations: np.ndarray        # (n1-1, n2-1, 3, 3)
    misfit: float                # (1/h) integral |grad u - R A_h|^2


def rotation_misfit_diagnostic(u: Deformation3D, spec: PrestrainSpec,
                               h: float) -> RotationDiagnostic:
    """Compare grad u against rotated growth tensors on in-plane cells.

    On each cell the gradient is formed at the cell center (edge-averaged
    differences in-plane, spectral differentiation in t), R is the nearest
    rotation to the thickness-averaged gradient, and the misfit integral uses
    the midpoint rule in-plane and Gauss quadrature in t.
    """
    g = u.grid
    vals = u.values

    du1 = np.diff(vals, axis=0) / g.dx1
    dc1 = 0.5 * (du1[:, 1:] + du1[:, :-1])
    du2 = np.diff(vals, axis=1) / g.dx2
    dc2 = 0.5 * (du2[1:] + du2[:-1])
    d3 = apply_matrix(g.D3, vals, axis=2) / h
    dc3 = 0.25 * (d3[1:, 1:] + d3[:-1, 1:] + d3[1:, :-1] + d3[:-1, :-1])
    G = np.stack([dc1, dc2, dc3], axis=-1)

    Gbar = np.tensordot(G, g.t_weights, axes=([2], [0]))
    R = nearest_rotation(Gbar)

    xc1 = 0.5 * (g.x1[1:] + g.x1[:-1])
    xc2 = 0.5 * (g.x2[1:] + g.x2[:-1])
    A = growth_tensor(spec, h, xc1[:, None, None], xc2[None, :, None],
                      h * g.t[None, None, :])
    diff = G - R[:, :, None, :, :] @ A
    cellw = g.dx1 * g.dx2
    misfit = float(cellw * np.sum(g.t_weights[None, None, :]
                                  * np.sum(diff * diff, axis=(-1, -2))))
    return RotationDiagnostic(rotations=R, misfit=misfit)


def deformation_from_displacement(v3, spec: PrestrainSpec, density: EnergyDensity,
                                  h: float, grid: PlateGrid) -> Deformation3D:
    """Bending-consistent lift of an out-of-plane displacement to the slab.

    Seeds the 3D minimizer: the displacement tilts the material normal and a
    quadratic-in-t warping relaxes the transverse stress,

        u = (x', h^(gamma/2) v) + x3 (-h^(gamma/2) grad v, 1)
            + (1/2) h^(gamma/2) x3^2 d(x'),
        d = transverse_part(B) + plane_stress_correction(-hess v - minor2(sym B)).

    Accepts an analytic displacement or grid samples matching the plate grid
    (derivatives then come from the grid's difference stencils).
    """
    X1 = grid.x1[:, None]
    X2 = grid.x2[None, :]
    if isinstance(v3, GridField2D):
        if v3.values.shape != (grid.n1, grid.n2) or v3.rect != grid.rect:
            raise ValueError("grid displacement must live on the plate's in-plane grid")
        v = v3.values
        g1, g2 = v3.gradient_arrays()
        h11, h12, h22 = v3.hessian_arrays()
        hess = np.stack([np.stack([h11, h12], axis=-1),
                         np.stack([h12, h22], axis=-1)], axis=-2)
    elif isinstance(v3, ScalarField2D):
        v = v3.value(X1, X2)
        grad = v3.gradient(X1, X2)
        g1, g2 = grad[..., 0], grad[..., 1]
        hess = v3.hessian(X1, X2)
    else:
        raise TypeError(f"unsupported displacement type {type(v3).__name__}")

    Bv = spec.B.value(X1, X2)
    d = transverse_part(Bv) + density.plane_stress_correction(-hess - minor2(sym(Bv)))

    scale = h**(0.5 * spec.gamma)
    x3 = (h * grid.t)[None, None, :]
    values = np.empty(grid.shape)
    values[..., 0] = X1[..., None] - scale * x3 * g1[..., None] \
        + 0.5 * scale * x3**2 * d[..., None, 0]
    values[..., 1] = X2[..., None] - scale * x3 * g2[..., None] \
        + 0.5 * scale * x3**2 * d[..., None, 1]
    values[..., 2] = scale * v[..., None] + x3 + 0.5 * scale * x3**2 * d[..., None, 2]
    return Deformation3D(values, grid)
