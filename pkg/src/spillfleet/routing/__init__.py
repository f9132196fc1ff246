"""Fleet routing: damage objective, heuristics, exact search, MILP export."""

from .evaluate import RouteSet, evaluate_damage, validate_route_set
from .exact import (ALL_STAGES, SolveReport, brute_force_oracle,
                    solve_exact_bnb, solve_pipeline)
from .heuristics import (DP_CAP_DEFAULT, dp_order, greedy_assign,
                         greedy_order, ils_refine)
from .milp import (MilpConstraint, MilpModel, build_milp, check_assignment,
                   export_milp, f_variable_count, route_set_to_assignment,
                   to_lp_text)

__all__ = [
    "RouteSet", "evaluate_damage", "validate_route_set",
    "SolveReport", "brute_force_oracle", "solve_exact_bnb", "solve_pipeline",
    "ALL_STAGES", "DP_CAP_DEFAULT",
    "dp_order", "greedy_assign", "greedy_order", "ils_refine",
    "MilpConstraint", "MilpModel", "build_milp", "check_assignment",
    "export_milp", "f_variable_count", "route_set_to_assignment",
    "to_lp_text",
]
