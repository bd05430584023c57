"""Optional backend that hands the problem to SciPy's HiGHS MILP solver."""

from typing import Optional

import numpy as np
from scipy import optimize

from bbsimplex import constants
from bbsimplex.problem import (MilpProblem, MilpSolution, SolverOptions,
                               objective_value)

_STATUS = {
    0: constants.OPTIMAL,
    1: constants.TIME_LIMIT,
    2: constants.INFEASIBLE,
    3: constants.UNBOUNDED,
}


def solve_milp_highs(problem: MilpProblem,
                     options: Optional[SolverOptions] = None) -> MilpSolution:
    """Same contract as `solve_milp`, solved by `scipy.optimize.milp`."""
    if options is None:
        options = SolverOptions()
    sign = -1.0 if problem.maximize else 1.0
    relations = np.asarray(problem.relations, dtype=object)
    lower = np.where(relations == constants.LESS_EQUAL, -np.inf, problem.rhs)
    upper = np.where(relations == constants.GREATER_EQUAL, np.inf,
                     problem.rhs)
    constraints = []
    if problem.num_constraints:
        constraints.append(
            optimize.LinearConstraint(problem.matrix, lower, upper))
    result = optimize.milp(sign * problem.objective,
                           integrality=problem.integer.astype(int),
                           bounds=optimize.Bounds(
                               np.zeros(problem.num_variables),
                               problem.upper),
                           constraints=constraints,
                           options={
                               'mip_rel_gap': options.relative_gap,
                               'time_limit': options.time_limit,
                               'node_limit': options.node_limit,
                           })
    status = _STATUS.get(result.status, constants.ITERATION_LIMIT)
    nodes = int(getattr(result, 'mip_node_count', 0) or 0)
    if result.x is None:
        value = float('nan')
        if status == constants.UNBOUNDED:
            value = float('inf' if problem.maximize else '-inf')
        return MilpSolution(status=status,
                            objective_value=value,
                            x=np.full(problem.num_variables, np.nan),
                            gap=float('nan'),
                            nodes=nodes)
    x = np.asarray(result.x, dtype=float)
    gap = getattr(result, 'mip_gap', 0.0)
    return MilpSolution(status=status,
                        objective_value=objective_value(problem, x),
                        x=x,
                        gap=float(gap if gap is not None else 0.0),
                        nodes=nodes)
