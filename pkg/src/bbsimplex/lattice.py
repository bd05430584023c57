"""Exhaustive lattice enumeration for small bounded integer programs."""

import itertools
from typing import Optional, Tuple

import numpy as np

from bbsimplex import constants
from bbsimplex.problem import MilpProblem, objective_value


def enumerate_optimum(
        problem: MilpProblem,
        tolerance: float = 1e-9) -> Tuple[float, Optional[np.ndarray]]:
    """Finds the optimum by checking every lattice point inside the bounds.

    Requires every variable to be integer with a finite upper bound.

    Returns:
        (objective value, point), or (NaN, None) when no point is feasible.
    """
    if not np.all(problem.integer) or not np.all(np.isfinite(problem.upper)):
        raise ValueError('Enumeration needs bounded integer variables.')
    upper = np.floor(problem.upper + 1e-9).astype(int)
    if not len(upper):
        return objective_value(problem, np.zeros(0)), np.zeros(0)
    matrix = problem.matrix.toarray()
    relations = np.asarray(problem.relations, dtype=object)
    less = relations == constants.LESS_EQUAL
    greater = relations == constants.GREATER_EQUAL
    equal = relations == constants.EQUAL
    tail = np.array(list(itertools.product(*[range(u + 1)
                                             for u in upper[1:]])),
                    dtype=float).reshape(-1, len(upper) - 1)
    best_value, best_point = np.nan, None
    for head in range(upper[0] + 1):
        points = np.hstack([np.full((len(tail), 1), float(head)), tail])
        activity = points @ matrix.T
        feasible = np.all(activity[:, less] <= problem.rhs[less] + tolerance,
                          axis=1)
        feasible &= np.all(
            activity[:, greater] >= problem.rhs[greater] - tolerance, axis=1)
        feasible &= np.all(
            np.abs(activity[:, equal] - problem.rhs[equal]) <= tolerance,
            axis=1)
        if not feasible.any():
            continue
        values = points[feasible] @ problem.objective
        index = int(np.argmax(values) if problem.maximize else np.argmin(values))
        value = float(values[index])
        better = (value > best_value) if problem.maximize else (value < best_value)
        if best_point is None or better:
            best_value, best_point = value, points[feasible][index]
    if best_point is None:
        return float('nan'), None
    return best_value + problem.objective_offset, best_point
