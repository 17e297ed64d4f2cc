"""micqp — mixed-integer conic-quadratic programming via lifted LP relaxations."""

from micqp.bench import (
    CONFIGS,
    ProfileCurve,
    RunRecord,
    SummaryRow,
    profile,
    read_records,
    run_suite,
    summarize,
    write_records,
)
from micqp.bnb import (
    CONE_FEAS_TOL,
    INT_TOL,
    Limits,
    RefineStrategy,
    SolveResult,
    SolveStats,
    branch_variable_selection,
    solve_lifted,
    solve_oa,
)
from micqp.conic import ConicResult, ConicWorker, solve_conic
from micqp.model import (
    ConeBlock,
    MicqpInstance,
    Solution,
    Status,
    max_cone_violation,
    read_instance,
    write_instance,
)
from micqp.portfolio import (
    Family,
    PortfolioParams,
    gen_classical,
    gen_fball,
    gen_random_suite,
    gen_robust,
    gen_shortfall,
    inv_norm_cdf,
)
from micqp.reform import (
    REFORMS,
    NotApplicable,
    ReformulatedInstance,
    reform_sep,
    reform_tower,
    reform_towersep,
    strengthen_perspective,
)

__version__ = "0.1.0"

__all__ = [
    "CONE_FEAS_TOL",
    "CONFIGS",
    "ConeBlock",
    "ConicResult",
    "ConicWorker",
    "Family",
    "INT_TOL",
    "Limits",
    "MicqpInstance",
    "NotApplicable",
    "PortfolioParams",
    "ProfileCurve",
    "REFORMS",
    "RefineStrategy",
    "ReformulatedInstance",
    "RunRecord",
    "Solution",
    "SolveResult",
    "SolveStats",
    "Status",
    "SummaryRow",
    "branch_variable_selection",
    "gen_classical",
    "gen_fball",
    "gen_random_suite",
    "gen_robust",
    "gen_shortfall",
    "inv_norm_cdf",
    "max_cone_violation",
    "profile",
    "read_instance",
    "read_records",
    "reform_sep",
    "reform_tower",
    "reform_towersep",
    "run_suite",
    "solve_conic",
    "solve_lifted",
    "solve_oa",
    "strengthen_perspective",
    "summarize",
    "write_instance",
    "write_records",
    "__version__",
]
