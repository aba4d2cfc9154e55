"""Canonical primal-dual solver for nonconvex composite-quadratic minimization."""

from .complementary import (
    InfeasiblePointError,
    PerturbationState,
    dual_value,
    min_eig,
    perturbed_dual_grad,
    perturbed_dual_value,
    recover_primal,
    saddle_linear,
    saddle_matrix,
    saddle_value,
)
from .core import (
    CanonicalProblem,
    LeastSquaresCanonical,
    QuadraticComponent,
    QuadraticMap,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
)
from .inner import (
    BarrierConfig,
    InfeasibleProblemError,
    InnerResult,
    barrier_grad,
    barrier_value,
    classify,
    maximize_dual,
    restore_feasible,
)
from .instances import four_well_problem, one_dim_problem, planted_quartic, random_problem
from .oracle import grid_local_minima, grid_search, multistart
from .outer import (
    CertificateReport,
    OuterConfig,
    SaddleResult,
    Schedule,
    certificate_report,
    interior_solve,
    perturb_linear,
    saddle_solve,
    solve_and_refine,
)
from .refine import RefineConfig, RefineResult, local_minimize

__version__ = "0.1.0"

__all__ = [
    "BarrierConfig",
    "CanonicalProblem",
    "CertificateReport",
    "InfeasiblePointError",
    "InfeasibleProblemError",
    "InnerResult",
    "LeastSquaresCanonical",
    "OuterConfig",
    "PerturbationState",
    "QuadraticComponent",
    "QuadraticMap",
    "RefineConfig",
    "RefineResult",
    "SaddleResult",
    "Schedule",
    "barrier_grad",
    "barrier_value",
    "certificate_report",
    "classify",
    "dual_value",
    "four_well_problem",
    "grid_local_minima",
    "grid_search",
    "interior_solve",
    "load_problem",
    "local_minimize",
    "maximize_dual",
    "min_eig",
    "multistart",
    "one_dim_problem",
    "perturb_linear",
    "perturbed_dual_grad",
    "perturbed_dual_value",
    "planted_quartic",
    "problem_from_dict",
    "problem_to_dict",
    "random_problem",
    "recover_primal",
    "restore_feasible",
    "saddle_linear",
    "saddle_matrix",
    "saddle_solve",
    "saddle_value",
    "save_problem",
    "solve_and_refine",
]
