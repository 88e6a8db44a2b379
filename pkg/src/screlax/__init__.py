"""screlax: nonnegative elastic-net solver with safe screening and relaxing.

Solves  min_{x >= 0}  0.5*||y - Ax||^2 + lam'x + (eps/2)*||x||^2  with an
accelerated proximal gradient loop that certifies coordinates as zero
(screening) or strictly positive (relaxing) on the fly and shrinks the
problem accordingly.  See `solve.solve` for the solver, `bench` for the
synthetic benchmark harness and `cli` for the command-line front end.
"""

from .backend import HAVE_COMPILED, get_backend
from .bench import (
    DEFAULT_TAU_GRID,
    SETUPS,
    ExperimentConfig,
    ProfilePoint,
    ResultRow,
    build_instance,
    dolan_more,
    gen_dictionary,
    gen_observation,
    read_config,
    read_results,
    run_experiment,
    write_profile,
    write_results,
)
from .core import (
    Problem,
    ProblemFormatError,
    duality_gap,
    dual_objective,
    kkt_residual,
    lambda_max,
    primal_objective,
    read_problem,
    write_problem,
)
from .identify import Sphere, TestOutcome, gap_sphere, relax_test, run_tests, screen_test
from .oracle import OracleError, OracleSolution, kkt_margin, oracle_solve, reference_solve
from .reduce import (
    FactorizationError,
    Partition,
    ReducedProblem,
    finalize,
    init_partition,
    lift,
    reduced_objective,
    update_partition,
)
from .solve import (
    VARIANTS,
    SolverConfig,
    SolverState,
    Trace,
    charge_flops,
    descent_step,
    estimate_lipschitz,
    flop_cost,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "HAVE_COMPILED",
    "get_backend",
    "DEFAULT_TAU_GRID",
    "SETUPS",
    "ExperimentConfig",
    "ProfilePoint",
    "ResultRow",
    "build_instance",
    "dolan_more",
    "gen_dictionary",
    "gen_observation",
    "read_config",
    "read_results",
    "run_experiment",
    "write_profile",
    "write_results",
    "Problem",
    "ProblemFormatError",
    "duality_gap",
    "dual_objective",
    "kkt_residual",
    "lambda_max",
    "primal_objective",
    "read_problem",
    "write_problem",
    "Sphere",
    "TestOutcome",
    "gap_sphere",
    "relax_test",
    "run_tests",
    "screen_test",
    "OracleError",
    "OracleSolution",
    "kkt_margin",
    "oracle_solve",
    "reference_solve",
    "FactorizationError",
    "Partition",
    "ReducedProblem",
    "finalize",
    "init_partition",
    "lift",
    "reduced_objective",
    "update_partition",
    "VARIANTS",
    "SolverConfig",
    "SolverState",
    "Trace",
    "charge_flops",
    "descent_step",
    "estimate_lipschitz",
    "flop_cost",
    "solve",
]
