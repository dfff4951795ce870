"""Exact and heuristic solvers for quadratic programs over small integer level sets."""
from .core import (
    Assignment,
    DimensionMismatch,
    InvalidInstance,
    LevelSet,
    NotInS,
    NQPError,
    QPInstance,
    SolveResult,
    evaluate_objective,
    generate_random_instance,
    validate_instance,
)
from .reduction import (
    NotBinary,
    ReductionCertificate,
    TwoValueProblem,
    compute_penalty_params,
    gershgorin_bound,
    lift_solution,
    penalty_G,
    reduce_ubqp_to_unqp,
    shift_scale_transform,
)
from .solvers import (
    AnnealSchedule,
    BudgetExceeded,
    SolverBudget,
    solve_anneal,
    solve_brute_force,
    solve_local_search,
    solve_multi_start,
)

__version__ = "0.1.0"
