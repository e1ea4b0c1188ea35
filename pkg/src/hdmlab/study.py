"""Convergence studies and accuracy-measure sweeps."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import problems as prob
from .core import (
    BTensor,
    coercivity_measure_CD,
    consistency_measure_SD,
    error_norms,
    limit_conformity_WD,
    solve_hessian_scheme,
)
from .fem import adini_ops, morley_ops
from .fvm import fvm_ops
from .mesh import (
    generate_lshape_triangular,
    generate_square_rectangular,
    generate_square_triangular,
)
from .recovery import gr_ops

SCHEMES = ("morley", "adini", "fvm", "mfvm", "gr")
STUDY_TOL = 1e-9


class IncompatibleSchemeMesh(Exception):
    pass


def _mesh_for(scheme, problem, level):
    if scheme in ("adini", "fvm", "mfvm"):
        if problem.domain != "square":
            raise IncompatibleSchemeMesh(
                f"{scheme} runs on rectangular meshes of the unit square"
            )
        return generate_square_rectangular(level)
    if problem.domain == "square":
        return generate_square_triangular(level)
    return generate_lshape_triangular(level)


def _ops_for(scheme, mesh, rho, b):
    btensor = BTensor("tracelap" if b == "laplacian" else "identity")
    if scheme == "morley":
        return morley_ops(mesh, btensor=btensor)
    if scheme == "adini":
        return adini_ops(mesh, btensor=btensor)
    if scheme == "fvm":
        return fvm_ops(mesh)
    if scheme == "mfvm":
        return fvm_ops(mesh, modified=True)
    if scheme == "gr":
        return gr_ops(mesh, rho=rho, btensor=btensor)
    raise IncompatibleSchemeMesh(f"unknown scheme {scheme!r}")


@dataclass
class StudyRow:
    level: int
    h: float
    errL2: float
    eocL2: float
    errH1: float
    eocH1: float
    errH2: float
    eocH2: float
    ndofs: int
    iters: int
    seconds: float


@dataclass
class ConvergenceReport:
    scheme: str
    problem: str
    b: str
    rho: float
    rows: list = field(default_factory=list)

    def eoc_final(self, norm):
        return getattr(self.rows[-1], "eoc" + norm)

    def csv_lines(self):
        lines = ["level,h,errL2,eocL2,errH1,eocH1,errH2,eocH2,"
                 "ndofs,iters,seconds"]
        for r in self.rows:
            eocs = [("" if np.isnan(e) else f"{e:.4f}")
                    for e in (r.eocL2, r.eocH1, r.eocH2)]
            lines.append(
                f"{r.level},{r.h:.12e},{r.errL2:.12e},{eocs[0]},"
                f"{r.errH1:.12e},{eocs[1]},{r.errH2:.12e},{eocs[2]},"
                f"{r.ndofs},{r.iters},{r.seconds:.3f}"
            )
        return lines

    def pretty_lines(self):
        head = (f"scheme={self.scheme} problem={self.problem} "
                f"b={self.b} rho={self.rho}")
        lines = [head,
                 f"{'h':>12} {'errL2':>12} {'eoc':>7} {'errH1':>12} "
                 f"{'eoc':>7} {'errH2':>12} {'eoc':>7} {'ndofs':>8}"]
        for r in self.rows:
            eocs = [("   --  " if np.isnan(e) else f"{e:7.4f}")
                    for e in (r.eocL2, r.eocH1, r.eocH2)]
            lines.append(
                f"{r.h:12.4e} {r.errL2:12.4e} {eocs[0]} {r.errH1:12.4e} "
                f"{eocs[1]} {r.errH2:12.4e} {eocs[2]} {r.ndofs:8d}"
            )
        return lines


def eoc(e_prev, e_cur, h_prev, h_cur):
    return float(np.log(e_prev / e_cur) / np.log(h_prev / h_cur))


def run_study(scheme, problem, levels, rho=1.0, b="identity",
              tol=STUDY_TOL, out=None):
    """Solve the scheme over a level sweep and tabulate errors and EOCs."""
    if isinstance(problem, str):
        problem = prob.by_name(problem)
    if isinstance(levels, int):
        levels = range(2, 2 + levels)
    report = ConvergenceReport(scheme, problem.name, b, rho)
    prev = None
    for level in levels:
        t0 = time.perf_counter()
        mesh = _mesh_for(scheme, problem, level)
        ops = _ops_for(scheme, mesh, rho, b)
        sol = solve_hessian_scheme(ops, problem.f, tol=tol)
        err = error_norms(sol, problem)
        dt = time.perf_counter() - t0
        h = mesh.table_h
        e = (err.relL2, err.relH1, err.relH2B)
        if prev is None:
            eocs = (np.nan, np.nan, np.nan)
        else:
            hp, ep = prev
            eocs = tuple(eoc(ep[i], e[i], hp, h) for i in range(3))
        report.rows.append(StudyRow(level, h, e[0], eocs[0], e[1], eocs[1],
                                    e[2], eocs[2], ops.n_free,
                                    sol.iterations, dt))
        prev = (h, e)
    if out is not None:
        write_report(report, out)
    return report


def write_report(report, path):
    path = str(path)
    with open(path, "w") as fh:
        fh.write("\n".join(report.csv_lines()) + "\n")
    stem = path[:-4] if path.endswith(".csv") else path
    for norm, attr in (("l2", "errL2"), ("h1", "errH1"), ("h2", "errH2")):
        with open(f"{stem}-{norm}.dat", "w") as fh:
            for r in report.rows:
                fh.write(f"{r.h:.12e} {getattr(r, attr):.12e}\n")


@dataclass
class DiagnosticsRow:
    level: int
    h: float
    SD: float
    WD: float
    CD: float
    ndofs: int


def run_diagnostics(scheme, problem, levels, rho=1.0, b="identity",
                    seed=0, out=None):
    """Sweep the consistency, limit-conformity and coercivity measures.

    The limit-conformity probe is xi = Hessian of the exact solution, for
    which the continuous defect integrand reduces to the source term.
    """
    if isinstance(problem, str):
        problem = prob.by_name(problem)
    if isinstance(levels, int):
        levels = range(2, 2 + levels)
    rows = []
    for level in levels:
        mesh = _mesh_for(scheme, problem, level)
        ops = _ops_for(scheme, mesh, rho, b)
        sd = consistency_measure_SD(ops, problem.u, problem.grad_u,
                                    problem.hess_u)
        wd = limit_conformity_WD(ops, problem.hess_u, problem.f)
        cd = coercivity_measure_CD(ops, seed=seed)
        rows.append(DiagnosticsRow(level, mesh.table_h, sd, wd, cd,
                                   ops.n_free))
    if out is not None:
        with open(str(out), "w") as fh:
            fh.write("level,h,SD,WD,CD,ndofs\n")
            for r in rows:
                fh.write(f"{r.level},{r.h:.12e},{r.SD:.12e},{r.WD:.12e},"
                         f"{r.CD:.12e},{r.ndofs}\n")
    return rows
