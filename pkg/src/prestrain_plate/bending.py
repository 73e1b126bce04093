"""The dimension-reduced bending functional and its constrained minimization.

For an out-of-plane displacement v the functional is

    (1/24) * integral over omega of Q2(hess v + minor2(sym B)) dx',

with Q2 the planar relaxation of the density's quadratic form. Discretely, v
lives on a uniform grid, the Hessian is taken with second-order difference
matrices, and the integral is a trapezoid sum. The discrete problem is a
convex quadratic whose kernel is spanned by affine functions, so the
minimizer is pinned by three linear constraints (zero mean, zero mean
gradient) and computed by preconditioned conjugate gradients on the
constraint complement, or optionally by a sparse direct KKT solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import GridField2D, ScalarField2D
from .material import EnergyDensity
from .grids import diff1_matrix, diff2_matrix, trapezoid_weights
from .prestrain import PrestrainSpec
from .tensors import minor2, star, sym


class ConvergenceError(RuntimeError):
    """Iterative solver exhausted its iteration budget."""


@dataclass(frozen=True)
class BendingFunctional:
    """Bending functional data: prestrain (for B and omega) plus a density (for Q2)."""

    spec: PrestrainSpec
    density: EnergyDensity


@dataclass
class BendingMinimum:
    """Constrained minimizer of the discrete bending functional."""

    field: GridField2D
    value: float
    residual: float
    iterations: int
    method: str


def _offset_grid(fnl: BendingFunctional, n1: int, n2: int):
    """Nodes, weights, and the planar bending offset minor2(sym B) on the grid."""
    rect = fnl.spec.omega
    x1, x2 = rect.nodes(n1, n2)
    w = np.outer(trapezoid_weights(rect.span1, n1), trapezoid_weights(rect.span2, n2))
    M = minor2(sym(fnl.spec.B.value(x1[:, None], x2[None, :])))
    return x1, x2, w, M


def bending_energy(v3, fnl: BendingFunctional, n1: int | None = None,
                   n2: int | None = None) -> float:
    """Evaluate the discrete bending functional at a displacement.

    Analytic fields need a quadrature resolution (n1, n2); grid fields bring
    their own nodes and are differentiated by finite differences.
    """
    if isinstance(v3, GridField2D):
        n1, n2 = v3.values.shape
        _, _, w, M = _offset_grid(fnl, n1, n2)
        h11, h12, h22 = v3.hessian_arrays()
        H = np.stack([np.stack([h11, h12], axis=-1),
                      np.stack([h12, h22], axis=-1)], axis=-2)
    elif isinstance(v3, ScalarField2D):
        if n1 is None or n2 is None:
            raise ValueError("analytic displacements need a quadrature resolution")
        x1, x2, w, M = _offset_grid(fnl, n1, n2)
        H = v3.hessian(x1[:, None], x2[None, :])
    else:
        raise TypeError(f"unsupported displacement type {type(v3).__name__}")
    vals = fnl.density.q2(H + M)
    return float(np.sum(w * vals) / 24.0)


def _assemble(fnl: BendingFunctional, n1: int, n2: int):
    """Sparse Hessian operator A, linear term b, and constraint basis.

    The discrete functional is E(v) = (1/2) v^T A v + b^T v + c0 on flattened
    grids (C order, x1 major).
    """
    rect = fnl.spec.omega
    dx1 = rect.span1 / (n1 - 1)
    dx2 = rect.span2 / (n2 - 1)
    D1 = sp.csr_matrix(diff1_matrix(n1, dx1))
    D2 = sp.csr_matrix(diff1_matrix(n2, dx2))
    Dxx = sp.kron(sp.csr_matrix(diff2_matrix(n1, dx1)), sp.identity(n2), format="csr")
    Dyy = sp.kron(sp.identity(n1), sp.csr_matrix(diff2_matrix(n2, dx2)), format="csr")
    Dxy = sp.kron(D1, D2, format="csr")
    Dx = sp.kron(D1, sp.identity(n2), format="csr")
    Dy = sp.kron(sp.identity(n1), D2, format="csr")

    _, _, w, M = _offset_grid(fnl, n1, n2)
    wf = w.reshape(-1)
    W = sp.diags(wf)
    mu = fnl.density.moduli.mu
    lam = fnl.density.moduli.lam
    kappa = 2.0 * mu * lam / (2.0 * mu + lam)
    L = Dxx + Dyy

    A = (2.0 * mu * (Dxx.T @ W @ Dxx + 2.0 * (Dxy.T @ W @ Dxy) + Dyy.T @ W @ Dyy)
         + kappa * (L.T @ W @ L)) / 12.0
    A = sp.csr_matrix(A)

    m11 = M[..., 0, 0].reshape(-1)
    m12 = M[..., 0, 1].reshape(-1)
    m22 = M[..., 1, 1].reshape(-1)
    trm = m11 + m22
    b = (2.0 * mu * (Dxx.T @ (wf * m11) + 2.0 * (Dxy.T @ (wf * m12))
                     + Dyy.T @ (wf * m22))
         + kappa * (L.T @ (wf * trm))) / 12.0

    q2_offset = fnl.density.q2(M)
    c0 = float(np.sum(w * q2_offset) / 24.0)

    constraints = np.column_stack([wf, Dx.T @ wf, Dy.T @ wf])
    return A, b, c0, constraints


def _projected_cg(A, b, Q, tol, maxiter):
    """CG for A x = b restricted to the orthogonal complement of range(Q).

    A is positive definite there; Jacobi preconditioning, projected every
    application so roundoff cannot drift out of the subspace.
    """

    def project(z):
        return z - Q @ (Q.T @ z)

    diag = A.diagonal()
    diag = np.where(diag > 0.0, diag, 1.0)

    rhs = project(b)
    rhs_norm = np.linalg.norm(rhs)
    x = np.zeros_like(b)
    if rhs_norm == 0.0:
        return x, 0
    r = rhs.copy()
    z = project(r / diag)
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, maxiter + 1):
        Ap = project(A @ p)
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * rhs_norm:
            return project(x), it
        z = project(r / diag)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(
        f"conjugate gradients did not reach tolerance {tol:g} in {maxiter} iterations")


def minimize_bending_energy(fnl: BendingFunctional, n1: int, n2: int,
                            cg_tol: float = 1e-10, cg_maxiter: int | None = None,
                            direct: bool = False) -> BendingMinimum:
    """Minimize the discrete bending functional subject to zero affine moments.

    The constraints (weighted mean and mean gradient vanish) remove the affine
    kernel of the discrete Hessian; the reported residual is the infinity norm
    of the projected gradient at the minimizer.
    """
    if n1 < 5 or n2 < 5:
        raise ValueError("minimization needs at least a 5x5 grid")
    A, b, c0, R = _assemble(fnl, n1, n2)
    Q, _ = np.linalg.qr(R)

    if direct:
        k = R.shape[1]
        KKT = sp.bmat([[A, R], [R.T, None]], format="csc")
        rhs = np.concatenate([-b, np.zeros(k)])
        sol = spla.spsolve(KKT, rhs)
        x = sol[:-k]
        x -= Q @ (Q.T @ x)
        iters = 0
        method = "direct"
    else:
        if cg_maxiter is None:
            cg_maxiter = 100_000
        x, iters = _projected_cg(A, -b, Q, cg_tol, cg_maxiter)
        method = "cg"

    grad = A @ x + b
    grad -= Q @ (Q.T @ grad)
    field = GridField2D(x.reshape(n1, n2), fnl.spec.omega)
    value = bending_energy(field, fnl)
    return BendingMinimum(field=field, value=value,
                          residual=float(np.max(np.abs(grad))),
                          iterations=iters, method=method)


def formal_energy_split(v3: ScalarField2D, spec: PrestrainSpec,
                        density: EnergyDensity, n1: int, n2: int):
    """Leading stretching and bending contributions of the two-scale ansatz.

    Returns the pair

        (1/8)  * integral Q3(-2 sym S + star(grad v (x) grad v)),
        (1/24) * integral Q3(-sym B - star(hess v)),

    both with the unrelaxed quadratic form, so the bending term dominates the
    relaxed functional.
    """
    rect = spec.omega
    x1, x2 = rect.nodes(n1, n2)
    X1, X2 = x1[:, None], x2[None, :]
    w = np.outer(trapezoid_weights(rect.span1, n1), trapezoid_weights(rect.span2, n2))

    g = v3.gradient(X1, X2)
    outer = g[..., :, None] * g[..., None, :]
    stretch_arg = -2.0 * sym(spec.S.value(X1, X2)) + star(outer)
    stretching = float(np.sum(w * density.q3(stretch_arg)) / 8.0)

    bend_arg = -sym(spec.B.value(X1, X2)) - star(v3.hessian(X1, X2))
    bending = float(np.sum(w * density.q3(bend_arg)) / 24.0)
    return stretching, bending
