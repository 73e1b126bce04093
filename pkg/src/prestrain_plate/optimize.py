"""Limited-memory BFGS with Armijo backtracking.

Kept in-house because the stopping rule (infinity norm of the gradient,
scaled by its starting value) and the per-iteration log are part of the
experiment contract; the two-loop recursion is standard.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimOptions:
    tol: float | None = None          # None: 1e-8 * |grad at start|_inf
    max_iter: int = 500
    memory: int = 10
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    grad_norm: float
    step: float


@dataclass
class OptimResult:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    status: str                        # converged | max_iter | line_search_failure
    log: list = field(default_factory=list)


def lbfgs(fun_grad, x0: np.ndarray, opts: OptimOptions | None = None) -> OptimResult:
    """Minimize fun_grad(x) -> (f, g); f may be +inf outside the domain.

    Every accepted step satisfies the Armijo decrease condition, so the
    energy log is nonincreasing. Updates with nonpositive curvature are
    skipped to keep the inverse Hessian approximation positive definite.
    """
    opts = opts or OptimOptions()
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun_grad(x)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    tol = opts.tol if opts.tol is not None else 1e-8 * max(gnorm, 1e-300)

    log = [IterationRecord(0, float(f), gnorm, 0.0)]
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    rho_list: list[float] = []
    status = "max_iter"

    for it in range(1, opts.max_iter + 1):
        if gnorm <= tol:
            status = "converged"
            break

        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if y_list:
            y = y_list[-1]
            q *= float(s_list[-1] @ y) / float(y @ y)
        for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        d = -q

        slope = float(g @ d)
        if slope >= 0.0:
            s_list.clear(); y_list.clear(); rho_list.clear()
            d = -g
            slope = -float(g @ g)
            if slope == 0.0:
                status = "converged"
                break

        step = 1.0
        accepted = False
        for _ in range(opts.max_backtracks):
            x_new = x + step * d
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= f + opts.armijo_c1 * step * slope:
                accepted = True
                break
            step *= opts.backtrack
        if not accepted:
            status = "line_search_failure"
            break

        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s); y_list.append(y); rho_list.append(1.0 / sy)
            if len(s_list) > opts.memory:
                s_list.pop(0); y_list.pop(0); rho_list.pop(0)

        x, f, g = x_new, f_new, g_new
        gnorm = float(np.max(np.abs(g)))
        log.append(IterationRecord(it, float(f), gnorm, step))
    else:
        if gnorm <= tol:
            status = "converged"

    return OptimResult(x=x, f=float(f), grad_norm=gnorm,
                       iterations=log[-1].iteration, status=status, log=log)
