"""Command-line convergence-study runner.

Exit codes: 0 success, 2 incompatible configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys

from .core import EmptyConstrainedSpace, PowerIterationStalled
from .fem import NotRectangular, NotTriangular
from .fvm import NotAdmissible
from .linalg import NonPositiveCurvature, NotConverged
from .mesh import DegenerateFace
from .recovery import InvalidRho
from .study import (
    SCHEMES,
    STUDY_TOL,
    IncompatibleSchemeMesh,
    run_diagnostics,
    run_study,
    write_report,
)

PROBLEMS = ("sq-sin2", "sq-poly", "sq-trig", "sq-exp", "lshape")

_CONFIG_ERRORS = (IncompatibleSchemeMesh, NotTriangular, NotRectangular,
                  NotAdmissible, InvalidRho, DegenerateFace,
                  EmptyConstrainedSpace, KeyError)
_SOLVER_ERRORS = (NotConverged, NonPositiveCurvature, PowerIterationStalled)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hdmlab",
        description="Convergence studies for Hessian discretisations of "
                    "the clamped biharmonic problem.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "error convergence study"),
                           ("diagnostics", "accuracy-measure sweep")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--scheme", required=True, choices=SCHEMES)
        p.add_argument("--problem", required=True, choices=PROBLEMS)
        p.add_argument("--levels", type=int, default=4,
                       help="number of refinement levels (starting at 2)")
        p.add_argument("--rho", type=float, default=1.0,
                       help="stabilisation weight for the gr scheme")
        p.add_argument("--b", choices=("identity", "laplacian"),
                       default="identity")
        p.add_argument("--out", default=None, help="CSV output path")
        p.add_argument("--pretty", action="store_true",
                       help="print a formatted table")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized diagnostics")
        p.add_argument("--tol", type=float, default=STUDY_TOL,
                       help="relative CG residual tolerance")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run_study(args.scheme, args.problem, args.levels,
                               rho=args.rho, b=args.b, tol=args.tol)
            if args.out:
                write_report(report, args.out)
            lines = (report.pretty_lines() if args.pretty
                     else report.csv_lines())
            print("\n".join(lines))
        else:
            rows = run_diagnostics(args.scheme, args.problem, args.levels,
                                   rho=args.rho, b=args.b, seed=args.seed,
                                   out=args.out)
            if args.pretty:
                print(f"{'h':>12} {'S_D':>12} {'W_D':>12} {'C_D':>12}")
                for r in rows:
                    print(f"{r.h:12.4e} {r.SD:12.4e} {r.WD:12.4e} "
                          f"{r.CD:12.4e}")
            else:
                print("level,h,SD,WD,CD,ndofs")
                for r in rows:
                    print(f"{r.level},{r.h:.12e},{r.SD:.12e},{r.WD:.12e},"
                          f"{r.CD:.12e},{r.ndofs}")
    except _CONFIG_ERRORS as exc:
        print(f"error: incompatible configuration: {exc}", file=sys.stderr)
        return 2
    except _SOLVER_ERRORS as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
