"""Experiment orchestration: TOML configs, sweep runners, CSV reports.

A config names a material, a prestrain pair (S, B) with exponent gamma, an
optional analytic displacement, a grid, a thickness sweep, and solver
options. Runners write deterministic CSV files plus a plain-text summary into
an output directory (the config itself is echoed alongside, so a report can
be reproduced from its own directory). No wall-clock data goes into the
files; identical configs produce byte-identical outputs.
"""
from __future__ import annotations

import csv
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                     # Python 3.10
    import tomli as tomllib

from .bending import BendingFunctional, BendingMinimum, minimize_bending_energy
from .fields import (ConstantMatrixField, PolynomialField2D, PolynomialMatrixField,
                     ScalarField2D, TrigMatrixField, TrigProductField2D,
                     hessian_matrix_field, zero_matrix_field, zero_scalar_field)
from .fitting import DEGENERATE_FLOOR, SlopeFit, fit_loglog_slope
from .grids import Rectangle
from .material import (EnergyDensity, make_density, plane_stress_correction_isotropic,
                       q2_bruteforce, q2_isotropic)
from .optimize import OptimOptions
from .plate3d import (EnergyWorkspace, PlateGrid, deformation_from_displacement,
                      minimize_energy, rotation_misfit_diagnostic)
from .prestrain import PrestrainSpec, bending_incompatibility, linearized_gauss_curvature
from .recovery import RecoveryInput, recovery_deformation, rescaled_energy_curve

Q2_CHECK_SAMPLES = 10_000
Q2_CHECK_SEED = 20260815


class ConfigError(ValueError):
    """A config file violates the schema or a model constraint."""


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key {where}.{key}")
    return table[key]


def _matrix33(raw, where: str) -> np.ndarray:
    M = np.asarray(raw, dtype=float)
    if M.shape != (3, 3):
        raise ConfigError(f"{where} must be a 3x3 matrix, got shape {M.shape}")
    return M


def _matrix_field_from(table: dict, where: str):
    kind = _require(table, "kind", where)
    params = table.get("params", {})
    if kind == "zero":
        return zero_matrix_field()
    if kind == "constant":
        return ConstantMatrixField(_matrix33(_require(params, "matrix", where + ".params"), where))
    if kind == "polynomial":
        terms = _require(params, "terms", where + ".params")
        degree = max(int(t["powers"][0]) + int(t["powers"][1]) for t in terms)
        coeffs = np.zeros((degree + 1, degree + 1, 3, 3))
        for t in terms:
            i, j = (int(p) for p in t["powers"])
            coeffs[i, j] += _matrix33(t["matrix"], where + ".params.terms.matrix")
        return PolynomialMatrixField(coeffs)
    if kind == "trig":
        return TrigMatrixField(
            amplitude=_matrix33(_require(params, "amplitude", where + ".params"), where),
            frequency=_require(params, "frequency", where + ".params"),
            phase=float(params.get("phase", 0.0)))
    if kind == "hessian":
        terms = _require(params, "terms", where + ".params")
        degree = max(int(t["powers"][0]) + int(t["powers"][1]) for t in terms)
        coeffs = np.zeros((degree + 1, degree + 1))
        for t in terms:
            i, j = (int(p) for p in t["powers"])
            coeffs[i, j] += float(t["coeff"])
        return hessian_matrix_field(PolynomialField2D(coeffs))
    raise ConfigError(f"{where}.kind must be zero|constant|polynomial|trig|hessian, got {kind!r}")


def _scalar_field_from(table: dict, where: str) -> ScalarField2D:
    kind = _require(table, "kind", where)
    params = table.get("params", {})
    if kind == "zero":
        return zero_scalar_field()
    if kind == "polynomial":
        terms = _require(params, "terms", where + ".params")
        degree = max(int(t["powers"][0]) + int(t["powers"][1]) for t in terms)
        coeffs = np.zeros((degree + 1, degree + 1))
        for t in terms:
            i, j = (int(p) for p in t["powers"])
            coeffs[i, j] += float(t["coeff"])
        return PolynomialField2D(coeffs)
    if kind == "trig_product":
        terms = []
        for t in _require(params, "terms", where + ".params"):
            terms.append((float(t.get("amplitude", 1.0)),
                          (t.get("fx", "sin"), float(t["kx"]), float(t.get("px", 0.0))),
                          (t.get("fy", "sin"), float(t["ky"]), float(t.get("py", 0.0)))))
        return TrigProductField2D(terms)
    raise ConfigError(f"{where}.kind must be zero|polynomial|trig_product, got {kind!r}")


@dataclass
class ExperimentConfig:
    density: EnergyDensity
    spec: PrestrainSpec
    displacement: ScalarField2D | None
    n1: int
    n2: int
    m: int
    hs: list
    grid_mode: str
    opt: OptimOptions
    cg_tol: float
    cg_maxiter: int
    direct: bool
    outdir: str
    path: Path | None = None
    raw: dict = field(default_factory=dict)


def load_config(path) -> ExperimentConfig:
    """Parse and validate a TOML experiment config."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}")

    mat = raw.get("material", {})
    kind = mat.get("kind", "svk")
    if kind not in ("svk", "dist2"):
        raise ConfigError(f"material.kind must be 'svk' or 'dist2', got {kind!r}")
    mu = float(mat.get("mu", 1.0))
    lam = float(mat.get("lambda", 1.0))
    if mu <= 0.0:
        raise ConfigError(f"material.mu must be positive, got {mu}")
    if lam < 0.0:
        raise ConfigError(f"material.lambda must be nonnegative, got {lam}")
    density = make_density(kind, mu=mu, lam=lam)

    rect_raw = raw.get("domain", {}).get("rect", [0.0, 1.0, 0.0, 1.0])
    if len(rect_raw) != 4:
        raise ConfigError("domain.rect must be [x1_min, x1_max, x2_min, x2_max]")
    try:
        rect = Rectangle(*(float(v) for v in rect_raw))
    except ValueError as exc:
        raise ConfigError(f"domain.rect: {exc}")

    pre = raw.get("prestrain", {})
    gamma = float(_require(pre, "gamma", "prestrain"))
    if not (gamma > 2.0):
        raise ConfigError(
            f"prestrain.gamma must exceed 2 (very weak prestrain regime), got {gamma}")
    S = _matrix_field_from(pre.get("S", {"kind": "zero"}), "prestrain.S")
    B = _matrix_field_from(pre.get("B", {"kind": "zero"}), "prestrain.B")
    spec = PrestrainSpec(S=S, B=B, gamma=gamma, omega=rect)

    displacement = None
    if "displacement" in raw:
        displacement = _scalar_field_from(raw["displacement"], "displacement")

    grid = raw.get("grid", {})
    n1 = int(grid.get("n1", 64))
    n2 = int(grid.get("n2", 64))
    m = int(grid.get("m", 4))
    if n1 < 3 or n2 < 3:
        raise ConfigError(f"grid.n1 and grid.n2 must be at least 3, got {n1}x{n2}")
    if m < 2:
        raise ConfigError(f"grid.m must be at least 2, got {m}")

    sweep = raw.get("sweep", {})
    hs = [float(h) for h in sweep.get("h", [1/8, 1/16, 1/32, 1/64, 1/128])]
    if not hs:
        raise ConfigError("sweep.h must not be empty")
    if any(not (0.0 < h <= 0.5) for h in hs):
        raise ConfigError(f"sweep.h entries must lie in (0, 1/2], got {hs}")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("sweep.h must be strictly decreasing")
    grid_mode = sweep.get("grid_mode", "fixed")
    if grid_mode not in ("fixed", "match_h"):
        raise ConfigError(f"sweep.grid_mode must be 'fixed' or 'match_h', got {grid_mode!r}")

    opt_raw = raw.get("opt", {})
    tol = float(opt_raw.get("tol", 0.0))
    if tol < 0.0:
        raise ConfigError(f"opt.tol must be nonnegative, got {tol}")
    opt = OptimOptions(tol=tol if tol > 0.0 else None,
                       max_iter=int(opt_raw.get("max_iter", 400)))
    if opt.max_iter < 1:
        raise ConfigError("opt.max_iter must be positive")

    lim = raw.get("limit", {})
    cg_tol = float(lim.get("cg_tol", 1e-10))
    cg_maxiter = int(lim.get("cg_maxiter", 100_000))
    if cg_tol <= 0.0 or cg_maxiter < 1:
        raise ConfigError("limit.cg_tol must be positive and limit.cg_maxiter at least 1")

    outdir = raw.get("output", {}).get("directory", "out")
    return ExperimentConfig(density=density, spec=spec, displacement=displacement,
                            n1=n1, n2=n2, m=m, hs=hs, grid_mode=grid_mode, opt=opt,
                            cg_tol=cg_tol, cg_maxiter=cg_maxiter, direct=False,
                            outdir=outdir, path=path, raw=raw)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _prepare_outdir(cfg: ExperimentConfig, outdir) -> Path:
    out = Path(outdir if outdir is not None else cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.path is not None and cfg.path.exists():
        shutil.copyfile(cfg.path, out / "config_echo.toml")
    return out


def _slope_rows(slopes: dict):
    rows = []
    for name, fit in slopes.items():
        if fit is None:
            rows.append([name, "undefined", "undefined", "undefined", "undefined"])
        else:
            rows.append([name, fit.slope, fit.intercept, fit.r2, fit.stderr])
    return rows


def _try_fit(hs, values) -> SlopeFit | None:
    values = np.asarray(values, dtype=float)
    if values.size == 0 or np.max(np.abs(values)) <= DEGENERATE_FLOOR:
        return None
    try:
        return fit_loglog_slope(np.asarray(hs), values)
    except ValueError:
        return None


@dataclass
class ReportRow:
    h: float
    energy_initial: float
    energy_minimized: float
    rescaled_initial: float
    rescaled_minimized: float
    rotation_misfit: float
    opt_status: str
    opt_iterations: int
    grad_norm: float


@dataclass
class ExperimentReport:
    limit: BendingMinimum
    rows: list
    slopes: dict
    logs: dict


def _full_min_point(args):
    """One thickness point of the minimization sweep (picklable for workers)."""
    spec, density, v3_field, n1, n2, m, h, opt = args
    grid = PlateGrid(n1, n2, m, spec.omega)
    u0 = deformation_from_displacement(v3_field, spec, density, h, grid)
    e0 = EnergyWorkspace(spec, density, h, grid).energy(u0.values)
    res = minimize_energy(u0, spec, density, h, opt)
    diag = rotation_misfit_diagnostic(res.deformation, spec, h)
    scale = h**(spec.gamma + 2.0)
    row = ReportRow(h=h, energy_initial=e0, energy_minimized=res.breakdown.total,
                    rescaled_initial=e0 / scale,
                    rescaled_minimized=res.breakdown.total / scale,
                    rotation_misfit=diag.misfit,
                    opt_status=res.optim.status,
                    opt_iterations=res.optim.iterations,
                    grad_norm=res.optim.grad_norm)
    log = [(r.iteration, r.energy, r.grad_norm, r.step) for r in res.optim.log]
    return row, log


def run_gamma_limit_experiment(cfg: ExperimentConfig, outdir=None,
                               threads: int = 1) -> ExperimentReport:
    """Minimize the bending limit, then the slab energy across the sweep.

    Each thickness is seeded with the lifted planar minimizer, so minimized
    energies can only improve on the explicit construction. Partial results
    are flushed to report.csv before an error is re-raised.
    """
    out = _prepare_outdir(cfg, outdir)
    fnl = BendingFunctional(spec=cfg.spec, density=cfg.density)
    bm = minimize_bending_energy(fnl, cfg.n1, cfg.n2, cg_tol=cfg.cg_tol,
                                 cg_maxiter=cfg.cg_maxiter, direct=cfg.direct)
    print(f"limit minimum {bm.value:.10g} ({bm.method}, {bm.iterations} iterations)",
          flush=True)

    jobs = [(cfg.spec, cfg.density, bm.field, cfg.n1, cfg.n2, cfg.m, h, cfg.opt)
            for h in cfg.hs]
    rows, logs = [], {}
    header = ["h", "energy_initial", "energy_minimized", "rescaled_initial",
              "rescaled_minimized", "rotation_misfit", "opt_status",
              "opt_iterations", "grad_norm"]

    def flush():
        _write_csv(out / "report.csv", header,
                   [[r.h, r.energy_initial, r.energy_minimized, r.rescaled_initial,
                     r.rescaled_minimized, r.rotation_misfit, r.opt_status,
                     r.opt_iterations, r.grad_norm] for r in rows])

    try:
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for row, log in pool.map(_full_min_point, jobs):
                    rows.append(row)
                    logs[row.h] = log
                    print(f"h={row.h:g}: minimized {row.energy_minimized:.6e} "
                          f"({row.opt_status})", flush=True)
        else:
            for job in jobs:
                row, log = _full_min_point(job)
                rows.append(row)
                logs[row.h] = log
                print(f"h={row.h:g}: minimized {row.energy_minimized:.6e} "
                      f"({row.opt_status})", flush=True)
    except Exception:
        flush()
        raise
    flush()

    hs = [r.h for r in rows]
    slopes = {
        "energy_initial": _try_fit(hs, [r.energy_initial for r in rows]),
        "energy_minimized": _try_fit(hs, [r.energy_minimized for r in rows]),
        "rotation_misfit": _try_fit(hs, [r.rotation_misfit for r in rows]),
    }
    _write_csv(out / "slopes.csv",
               ["quantity", "slope", "intercept", "r2", "stderr"], _slope_rows(slopes))
    for i, h in enumerate(hs):
        _write_csv(out / f"iterations_{i:02d}.csv",
                   ["iteration", "energy", "grad_norm", "step"], logs[h])

    with open(out / "summary.txt", "w") as fh:
        fh.write("minimization sweep\n")
        fh.write(f"limit minimum: {_fmt(bm.value)} (residual {_fmt(bm.residual)}, "
                 f"{bm.method}, {bm.iterations} iterations)\n")
        fh.write(f"grid: {cfg.n1}x{cfg.n2}x{cfg.m}, gamma: {_fmt(cfg.spec.gamma)}\n")
        for r in rows:
            fh.write(f"h={_fmt(r.h)}: initial {_fmt(r.energy_initial)}, minimized "
                     f"{_fmt(r.energy_minimized)}, rescaled {_fmt(r.rescaled_minimized)}, "
                     f"misfit {_fmt(r.rotation_misfit)}, {r.opt_status}\n")
        for name, fit in slopes.items():
            if fit is None:
                fh.write(f"slope[{name}]: undefined (degenerate data)\n")
            else:
                fh.write(f"slope[{name}]: {fit.slope:.4f} +/- {fit.stderr:.4f} "
                         f"(r2={fit.r2:.6f})\n")
    return ExperimentReport(limit=bm, rows=rows, slopes=slopes, logs=logs)


def run_full_min(cfg: ExperimentConfig, outdir=None, threads: int = 1) -> ExperimentReport:
    return run_gamma_limit_experiment(cfg, outdir=outdir, threads=threads)


def run_recovery_sweep(cfg: ExperimentConfig, outdir=None, threads: int = 1):
    """Rescaled energies of the explicit construction across the sweep."""
    if cfg.displacement is None:
        raise ConfigError("recovery sweep needs a [displacement] section")
    out = _prepare_outdir(cfg, outdir)
    inp = RecoveryInput(v3=cfg.displacement, spec=cfg.spec, density=cfg.density)
    curve = rescaled_energy_curve(inp, cfg.hs, n1=cfg.n1, n2=cfg.n2, m=cfg.m,
                                  mode=cfg.grid_mode)
    _write_csv(out / "curve.csv",
               ["h", "n1", "n2", "energy", "rescaled", "reference", "abs_error"],
               [[p.h, p.n1, p.n2, p.energy, p.rescaled, curve.reference, p.abs_error]
                for p in curve.points])
    _write_csv(out / "slopes.csv",
               ["quantity", "slope", "intercept", "r2", "stderr"],
               _slope_rows({"abs_error": curve.fit}))
    with open(out / "summary.txt", "w") as fh:
        fh.write("recovery sweep\n")
        fh.write(f"bending reference: {_fmt(curve.reference)}\n")
        for p in curve.points:
            fh.write(f"h={_fmt(p.h)} ({p.n1}x{p.n2}x{cfg.m}): rescaled "
                     f"{_fmt(p.rescaled)}, abs error {_fmt(p.abs_error)}\n")
        if curve.fit is None:
            fh.write("error slope: undefined (degenerate data)\n")
        else:
            fh.write(f"error slope: {curve.fit.slope:.4f} +/- {curve.fit.stderr:.4f} "
                     f"(r2={curve.fit.r2:.6f})\n")
    return curve


def run_limit_min(cfg: ExperimentConfig, outdir=None) -> BendingMinimum:
    """Constrained minimization of the bending functional alone."""
    out = _prepare_outdir(cfg, outdir)
    fnl = BendingFunctional(spec=cfg.spec, density=cfg.density)
    bm = minimize_bending_energy(fnl, cfg.n1, cfg.n2, cg_tol=cfg.cg_tol,
                                 cg_maxiter=cfg.cg_maxiter, direct=cfg.direct)
    x1, x2 = bm.field.nodes()
    rows = [[x1[i], x2[j], bm.field.values[i, j]]
            for i in range(cfg.n1) for j in range(cfg.n2)]
    _write_csv(out / "minimizer.csv", ["x1", "x2", "v3"], rows)
    with open(out / "summary.txt", "w") as fh:
        fh.write("bending minimization\n")
        fh.write(f"value: {_fmt(bm.value)}\n")
        fh.write(f"projected gradient norm: {_fmt(bm.residual)}\n")
        fh.write(f"method: {bm.method}, iterations: {bm.iterations}\n")
    return bm


@dataclass
class Q2CheckResult:
    samples: int
    max_value_deviation: float
    max_argmin_deviation: float
    passed: bool


def run_q2_check(cfg: ExperimentConfig | None = None, outdir=None,
                 samples: int = Q2_CHECK_SAMPLES) -> Q2CheckResult:
    """Closed-form planar relaxation against brute-force minimization.

    Random symmetric arguments with moduli drawn per sample; deviations are
    checked against 1e-6 (values) and 1e-4 (minimizing vectors).
    """
    rng = np.random.default_rng(Q2_CHECK_SEED)
    F = rng.uniform(-2.0, 2.0, size=(samples, 2, 2))
    F = 0.5 * (F + np.swapaxes(F, -1, -2))
    mu = rng.uniform(0.5, 4.0, size=samples)
    lam = rng.uniform(0.0, 4.0, size=samples)

    closed = q2_isotropic(mu, lam, F)
    cvec = plane_stress_correction_isotropic(mu, lam, F)
    brute, brute_c = q2_bruteforce(mu, lam, F)
    dev_val = float(np.max(np.abs(closed - brute)))
    dev_arg = float(np.max(np.abs(cvec - brute_c)))
    result = Q2CheckResult(samples=samples, max_value_deviation=dev_val,
                           max_argmin_deviation=dev_arg,
                           passed=dev_val <= 1e-6 and dev_arg <= 1e-4)
    if outdir is not None and cfg is not None:
        out = _prepare_outdir(cfg, outdir)
        with open(out / "q2_check.txt", "w") as fh:
            fh.write(f"samples: {samples}\n")
            fh.write(f"max value deviation: {_fmt(dev_val)}\n")
            fh.write(f"max argmin deviation: {_fmt(dev_arg)}\n")
            fh.write(f"passed: {result.passed}\n")
    return result


def run_diagnostics(cfg: ExperimentConfig, outdir=None):
    """Curvature/incompatibility fields and, if possible, the rigidity sweep."""
    out = _prepare_outdir(cfg, outdir)
    x1, x2 = cfg.spec.omega.nodes(cfg.n1, cfg.n2)
    X1, X2 = x1[:, None], x2[None, :]
    curv_S = linearized_gauss_curvature(cfg.spec.S, X1, X2)
    incomp_B = bending_incompatibility(cfg.spec.B, X1, X2)
    rows = [[x1[i], x2[j], curv_S[i, j], incomp_B[i, j]]
            for i in range(cfg.n1) for j in range(cfg.n2)]
    _write_csv(out / "diagnostics.csv",
               ["x1", "x2", "curvature_S", "incompatibility_B"], rows)

    misfit_fit = None
    misfits = []
    if cfg.displacement is not None:
        inp = RecoveryInput(v3=cfg.displacement, spec=cfg.spec, density=cfg.density)
        grid = PlateGrid(cfg.n1, cfg.n2, cfg.m, cfg.spec.omega)
        for h in cfg.hs:
            u = recovery_deformation(inp, h, grid)
            misfits.append(rotation_misfit_diagnostic(u, cfg.spec, h).misfit)
        _write_csv(out / "misfit.csv", ["h", "rotation_misfit"],
                   list(zip(cfg.hs, misfits)))
        misfit_fit = _try_fit(cfg.hs, misfits)

    with open(out / "summary.txt", "w") as fh:
        fh.write("diagnostics\n")
        fh.write(f"max |curvature(S)|: {_fmt(float(np.max(np.abs(curv_S))))}\n")
        fh.write(f"max |incompatibility(B)|: {_fmt(float(np.max(np.abs(incomp_B))))}\n")
        if misfits:
            if misfit_fit is None:
                fh.write("misfit slope: undefined (degenerate data)\n")
            else:
                fh.write(f"misfit slope: {misfit_fit.slope:.4f} +/- "
                         f"{misfit_fit.stderr:.4f} (r2={misfit_fit.r2:.6f})\n")
    return misfit_fit


def run_report(outdir) -> Path:
    """Aggregate the CSV artifacts of an output directory into summary.txt."""
    out = Path(outdir)
    if not out.is_dir():
        raise ConfigError(f"output directory not found: {out}")
    sections = []
    for name in ("curve.csv", "report.csv", "misfit.csv"):
        path = out / name
        if not path.exists():
            continue
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
        lines = [f"[{name}] {len(rows)} rows"]
        for col in reader.fieldnames or []:
            try:
                vals = np.array([float(r[col]) for r in rows])
            except ValueError:
                continue
            lines.append(f"  {col}: min {_fmt(float(vals.min()))} "
                         f"max {_fmt(float(vals.max()))}")
        hs = [float(r["h"]) for r in rows if "h" in r]
        for col in ("abs_error", "energy_minimized", "rotation_misfit"):
            if rows and col in rows[0]:
                fit = _try_fit(hs, [float(r[col]) for r in rows])
                if fit is not None:
                    lines.append(f"  slope[{col}]: {fit.slope:.4f} (r2={fit.r2:.6f})")
                else:
                    lines.append(f"  slope[{col}]: undefined (degenerate data)")
        sections.append("\n".join(lines))
    if not sections:
        raise ConfigError(f"no report artifacts (curve.csv/report.csv) in {out}")
    target = out / "summary.txt"
    with open(target, "w") as fh:
        fh.write("aggregated report\n" + "\n".join(sections) + "\n")
    return target
