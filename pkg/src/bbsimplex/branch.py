"""Best-bound branch-and-bound over the simplex relaxation."""

import heapq
import math
import time
from typing import Optional

import numpy as np

from bbsimplex import constants
from bbsimplex.problem import (MilpProblem, MilpSolution, SolverOptions,
                               objective_value, relax)
from bbsimplex.simplex import solve_bounded_lp, solve_lp


def _relative_gap(incumbent: float, bound: float) -> float:
    """Gap between minimization-form incumbent and bound."""
    if math.isinf(incumbent):
        return math.inf
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


def _most_fractional(x: np.ndarray, integer: np.ndarray,
                     tolerance: float) -> int:
    """Index of the integer variable farthest from a whole number, or -1."""
    fractionality = np.zeros_like(x)
    frac = x[integer] - np.floor(x[integer])
    fractionality[integer] = np.minimum(frac, 1.0 - frac)
    best = int(np.argmax(fractionality)) if len(x) else -1
    if best < 0 or fractionality[best] <= tolerance:
        return -1
    return best


def solve_milp(problem: MilpProblem,
               options: Optional[SolverOptions] = None) -> MilpSolution:
    """Solves the problem exactly up to `options.relative_gap`.

    Nodes are explored best bound first, ties broken by creation order, and
    each node branches on its most fractional integer variable.

    Args:
        problem: Problem to solve.
        options: Tolerances and node/time limits.

    Returns:
        The best solution found. On a node or time limit the status names
        the limit, `x` holds the incumbent (NaN if none) and `gap` the
        achieved relative gap.
    """
    if options is None:
        options = SolverOptions()
    start = time.monotonic()
    deadline = start + options.time_limit
    num_vars = problem.num_variables
    sign = -1.0 if problem.maximize else 1.0
    offset = problem.objective_offset
    continuous = relax(problem)

    # Minimization-form incumbent value, excluding the offset.
    incumbent_value = math.inf
    incumbent_x = None
    nodes = 0
    lp_iterations = 0
    sequence = 0
    lower = np.zeros(num_vars)
    upper = np.where(problem.integer, np.floor(problem.upper + 1e-9),
                     problem.upper)
    heap = [(-math.inf, sequence, lower, upper)]
    status = None
    while heap:
        bound = heap[0][0]
        if incumbent_x is not None and _relative_gap(
                incumbent_value, bound) <= options.relative_gap:
            break
        if nodes >= options.node_limit:
            status = constants.NODE_LIMIT
            break
        if time.monotonic() > deadline:
            status = constants.TIME_LIMIT
            break
        _, _, node_lower, node_upper = heapq.heappop(heap)
        result = solve_bounded_lp(continuous, node_lower, node_upper, options,
                                  deadline)
        nodes += 1
        lp_iterations += result.iterations
        if result.status == constants.INFEASIBLE:
            continue
        if result.status == constants.UNBOUNDED:
            if nodes == 1:
                status = constants.UNBOUNDED
                break
            continue
        if result.status != constants.OPTIMAL:
            # The LP ran out of budget; the node is put back for accounting.
            heapq.heappush(heap, (bound, sequence, node_lower, node_upper))
            status = result.status
            break
        value = sign * (result.objective_value - offset)
        if incumbent_x is not None and _relative_gap(
                incumbent_value, value) <= options.relative_gap:
            continue
        branch_var = _most_fractional(result.x, problem.integer,
                                      options.integrality_tolerance)
        if branch_var < 0:
            if value < incumbent_value:
                incumbent_value = value
                incumbent_x = result.x
            continue
        down_upper = node_upper.copy()
        down_upper[branch_var] = math.floor(result.x[branch_var])
        up_lower = node_lower.copy()
        up_lower[branch_var] = math.ceil(result.x[branch_var])
        sequence += 1
        heapq.heappush(heap, (value, sequence, node_lower, down_upper))
        sequence += 1
        heapq.heappush(heap, (value, sequence, up_lower, node_upper))

    if status == constants.UNBOUNDED:
        return MilpSolution(
            status=status,
            objective_value=float('inf' if problem.maximize else '-inf'),
            x=np.full(num_vars, np.nan),
            gap=float('nan'),
            nodes=nodes,
            lp_iterations=lp_iterations)
    best_bound = heap[0][0] if heap else incumbent_value
    if incumbent_x is None:
        if status is None:
            status = constants.INFEASIBLE
        return MilpSolution(status=status,
                            objective_value=float('nan'),
                            x=np.full(num_vars, np.nan),
                            gap=float('nan') if status == constants.INFEASIBLE
                            else math.inf,
                            nodes=nodes,
                            lp_iterations=lp_iterations)
    return MilpSolution(
        status=constants.OPTIMAL if status is None else status,
        objective_value=objective_value(problem, incumbent_x),
        x=incumbent_x,
        gap=_relative_gap(incumbent_value, min(best_bound, incumbent_value)),
        nodes=nodes,
        lp_iterations=lp_iterations)


def dual_bound(problem: MilpProblem,
               options: Optional[SolverOptions] = None) -> float:
    """Objective of the LP relaxation, a bound on the MILP optimum.

    An infeasible relaxation gives -inf for maximization (+inf for
    minimization); an unbounded one gives the opposite infinity; an LP that
    hit a limit gives NaN.
    """
    solution = solve_lp(relax(problem), options)
    if solution.status == constants.INFEASIBLE:
        return float('-inf' if problem.maximize else 'inf')
    return solution.objective_value
