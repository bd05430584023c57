"""Random small integer programs for oracle testing."""

import numpy as np

from bbsimplex import constants
from bbsimplex.problem import MilpProblem, ProblemBuilder


def random_milp(rng: np.random.Generator,
                max_vars: int = 6,
                max_bound: int = 10,
                max_constraints: int = 5) -> MilpProblem:
    """Samples a pure integer program with bounded variables.

    Coefficients are small integers. Most rows are built to hold at a random
    lattice point, so the majority of samples are feasible; the rest may not
    be.

    :param rng: numpy random generator.
    :param max_vars: largest number of integer variables.
    :param max_bound: largest variable upper bound.
    :param max_constraints: largest number of constraint rows.
    :return: a MilpProblem whose variables are all integer.
    """
    num_vars = int(rng.integers(2, max_vars + 1))
    num_constraints = int(rng.integers(1, max_constraints + 1))
    builder = ProblemBuilder('random')
    upper = rng.integers(1, max_bound + 1, size=num_vars)
    names = [f'x{j}' for j in range(num_vars)]
    for name, bound in zip(names, upper):
        builder.add_variable(name, integer=True, upper=float(bound))
    anchor = np.array([rng.integers(0, bound + 1) for bound in upper])
    for _ in range(num_constraints):
        coefs = rng.integers(-5, 6, size=num_vars)
        activity = int(coefs @ anchor)
        relation = rng.choice(
            [constants.LESS_EQUAL, constants.GREATER_EQUAL, constants.EQUAL],
            p=[0.6, 0.3, 0.1])
        if rng.random() < 0.85:
            slack = int(rng.integers(0, 6))
        else:
            slack = -int(rng.integers(1, 4))
        if relation == constants.LESS_EQUAL:
            rhs = activity + slack
        elif relation == constants.GREATER_EQUAL:
            rhs = activity - slack
        else:
            rhs = activity
        builder.add_constraint(dict(zip(names, coefs.tolist())), relation,
                               rhs)
    sense = constants.MAXIMIZE if rng.random() < 0.5 else constants.MINIMIZE
    builder.set_objective(
        dict(zip(names,
                 rng.integers(-10, 11, size=num_vars).tolist())), sense)
    return builder.build()
