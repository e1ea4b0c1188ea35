"""Hessian discretisation methods for fourth-order elliptic problems."""

from .core import (
    BTensor,
    DiscretisationOps,
    DiscreteSolution,
    assemble_hessian_scheme,
    coercivity_measure_CD,
    consistency_measure_SD,
    error_norms,
    gram_matrix,
    limit_conformity_WD,
    solve_hessian_scheme,
    source_vector,
)
from .fem import adini_interpolant, adini_ops, morley_interpolant, morley_ops
from .fvm import (
    consistent_gradient,
    fvm_ops,
    modified_fvm_rhs,
    tpfa_interpolant,
)
from .mesh import (
    Mesh,
    build_mesh,
    check_delta_adapted,
    generate_lshape_triangular,
    generate_square_rectangular,
    generate_square_triangular,
)
from .problems import (
    Problem,
    by_name,
    problem_lshape_singular,
    problem_sq_exp,
    problem_sq_poly,
    problem_sq_sin2,
    problem_sq_trig,
)
from .recovery import gr_interpolant, gr_ops
from .study import ConvergenceReport, run_diagnostics, run_study

__all__ = [
    "BTensor", "DiscretisationOps", "DiscreteSolution", "Mesh", "Problem",
    "ConvergenceReport", "adini_interpolant", "adini_ops",
    "assemble_hessian_scheme", "build_mesh", "by_name",
    "check_delta_adapted", "coercivity_measure_CD",
    "consistency_measure_SD", "consistent_gradient", "error_norms",
    "fvm_ops", "generate_lshape_triangular", "generate_square_rectangular",
    "generate_square_triangular", "gr_interpolant", "gr_ops", "gram_matrix",
    "limit_conformity_WD", "modified_fvm_rhs", "morley_interpolant",
    "morley_ops", "problem_lshape_singular", "problem_sq_exp",
    "problem_sq_poly", "problem_sq_sin2", "problem_sq_trig",
    "run_diagnostics", "run_study", "solve_hessian_scheme", "source_vector",
    "tpfa_interpolant",
]

__version__ = "0.1.0"
