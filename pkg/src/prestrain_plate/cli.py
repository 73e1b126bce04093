"""Command-line entry point.

    prestrain-plate <subcommand> --config <path> [--out <dir>] [--threads N]
                    [--direct-solve]

Subcommands: q2-check, limit-min, recovery-sweep, full-min, diagnostics,
report. Failures print a single machine-parsable line
``error: <category>: <message>`` to stderr and exit 1; usage errors exit 2.
"""
from __future__ import annotations

import argparse
import sys

from .bending import ConvergenceError
from .harness import (ConfigError, load_config, run_diagnostics, run_full_min,
                      run_limit_min, run_q2_check, run_recovery_sweep, run_report)
from .plate3d import DegenerateDeformationError
from .recovery import RefinementError
from .tensors import SingularMatrixError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prestrain-plate",
        description="Prestrained-plate energy experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, needs_config=True):
        p = sub.add_parser(name, help=help_text)
        if needs_config:
            p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes for sweep points")
        p.add_argument("--direct-solve", action="store_true",
                       help="sparse direct KKT solve instead of conjugate gradients")
        return p

    add("q2-check", "closed-form planar relaxation vs brute-force minimization")
    add("limit-min", "minimize the bending functional")
    add("recovery-sweep", "rescaled energies of the explicit construction")
    add("full-min", "minimize the 3d slab energy across the thickness sweep")
    add("diagnostics", "curvature/incompatibility fields and rigidity sweep")
    add("report", "aggregate CSV artifacts in an output directory", needs_config=False)
    return parser


_CATEGORIES = (
    (ConfigError, "config-validation"),
    (RefinementError, "refinement-check"),
    (DegenerateDeformationError, "degenerate-deformation"),
    (ConvergenceError, "convergence"),
    (SingularMatrixError, "singular-matrix"),
    (OSError, "io"),
    (ValueError, "invalid-input"),
)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "report":
            if args.out is None:
                print("error: config-validation: report needs --out", file=sys.stderr)
                return 1
            target = run_report(args.out)
            print(f"wrote {target}")
            return 0

        cfg = load_config(args.config)
        cfg.direct = args.direct_solve
        if args.command == "q2-check":
            result = run_q2_check(cfg, outdir=args.out)
            print(f"q2 check on {result.samples} samples: max value deviation "
                  f"{result.max_value_deviation:.3e}, max argmin deviation "
                  f"{result.max_argmin_deviation:.3e}")
            if not result.passed:
                print("error: oracle-mismatch: brute-force relaxation deviates "
                      "beyond tolerance", file=sys.stderr)
                return 1
        elif args.command == "limit-min":
            bm = run_limit_min(cfg, outdir=args.out)
            print(f"bending minimum {bm.value:.10g} "
                  f"(residual {bm.residual:.3e}, {bm.iterations} iterations)")
        elif args.command == "recovery-sweep":
            curve = run_recovery_sweep(cfg, outdir=args.out, threads=args.threads)
            slope = "undefined" if curve.fit is None else f"{curve.fit.slope:.4f}"
            print(f"recovery sweep done: reference {curve.reference:.10g}, "
                  f"error slope {slope}")
        elif args.command == "full-min":
            report = run_full_min(cfg, outdir=args.out, threads=args.threads)
            fit = report.slopes.get("energy_minimized")
            slope = "undefined" if fit is None else f"{fit.slope:.4f}"
            print(f"minimization sweep done: energy slope {slope}")
        elif args.command == "diagnostics":
            run_diagnostics(cfg, outdir=args.out)
            print("diagnostics written")
        return 0
    except tuple(c for c, _ in _CATEGORIES) as exc:
        for cls, category in _CATEGORIES:
            if isinstance(exc, cls):
                print(f"error: {category}: {exc}", file=sys.stderr)
                return 1
        raise  # unreachable
    except Exception as exc:  # keep the contract: one line, nonzero exit
        print(f"error: internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
