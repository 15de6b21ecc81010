from .catalog import EMPTY, ConstraintCatalog, GramIndex, compile_constraints
from .solver import (
    GramState,
    LinearTerms,
    MomentMatrix,
    Problem,
    SolveResult,
    SolverConfig,
    SolverDivergence,
    SweepRecord,
    assemble_local,
    constraint_values,
    init_state,
    integral_state,
    linear_terms,
    moment_matrix,
    partial_sos,
    residual_norm,
    sdp_objective,
)
from .subproblem import LocalSystem, solve_subproblem, sphere_argmax

__all__ = [
    "EMPTY", "ConstraintCatalog", "GramIndex", "compile_constraints", "GramState", "LinearTerms",
    "MomentMatrix", "Problem", "SolveResult", "SolverConfig", "SolverDivergence", "SweepRecord",
    "assemble_local", "constraint_values", "init_state", "integral_state", "linear_terms",
    "moment_matrix", "partial_sos", "residual_norm", "sdp_objective", "LocalSystem",
    "solve_subproblem", "sphere_argmax",
]
