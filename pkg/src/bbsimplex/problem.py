"""Mixed-integer linear problem representation."""

import math
from typing import Dict, List, Mapping, Optional

import chex
import numpy as np
from scipy import sparse

from bbsimplex import constants

_RELATION_ALIASES = {
    '<=': constants.LESS_EQUAL,
    '=<': constants.LESS_EQUAL,
    '=': constants.EQUAL,
    '==': constants.EQUAL,
    '>=': constants.GREATER_EQUAL,
    '=>': constants.GREATER_EQUAL,
}


class MalformedProblemError(ValueError):
    """Raised when a problem references undeclared variables or holds
    non-finite data."""


@chex.dataclass(frozen=True)
class SolverOptions:
    """Tolerances and limits shared by the LP and MILP solvers."""
    feasibility_tolerance: float = 1e-7
    integrality_tolerance: float = 1e-6
    relative_gap: float = 1e-6
    node_limit: int = 100_000
    time_limit: float = 600.0
    iteration_limit: int = 500_000


@chex.dataclass(frozen=True)
class MilpProblem:
    """A linear objective over continuous and integer non-negative variables.

    Constraint rows live in a CSR matrix; row `i` reads
    `matrix[i] @ x <relations[i]> rhs[i]`.
    """
    name: str
    variable_names: tuple
    integer: np.ndarray
    upper: np.ndarray
    objective: np.ndarray
    objective_offset: float
    maximize: bool
    matrix: sparse.csr_matrix
    relations: tuple
    rhs: np.ndarray
    constraint_names: tuple

    @property
    def num_variables(self) -> int:
        return len(self.variable_names)

    @property
    def num_constraints(self) -> int:
        return len(self.relations)


@chex.dataclass(frozen=True)
class MilpSolution:
    """Solved state of a MilpProblem.

    `x` is ordered like `MilpProblem.variable_names`. `objective_value` is
    NaN when no feasible point is known.
    """
    status: str
    objective_value: float
    x: np.ndarray
    gap: float
    nodes: int = 0
    lp_iterations: int = 0


class ProblemBuilder:
    """Accumulates variables, constraints and the objective of a MilpProblem.

    Linear expressions are mappings from declared variable names to
    coefficients. Repeated names inside a row are summed.
    """

    def __init__(self, name: str = 'problem'):
        self._name = name
        self._names: List[str] = []
        self._index: Dict[str, int] = {}
        self._integer: List[bool] = []
        self._upper: List[float] = []
        self._rows: List[int] = []
        self._cols: List[int] = []
        self._vals: List[float] = []
        self._relations: List[str] = []
        self._rhs: List[float] = []
        self._constraint_names: List[str] = []
        self._objective: Dict[int, float] = {}
        self._offset = 0.0
        self._maximize = False

    @property
    def num_variables(self) -> int:
        return len(self._names)

    @property
    def num_constraints(self) -> int:
        return len(self._relations)

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def add_variable(self,
                     name: str,
                     integer: bool = False,
                     upper: Optional[float] = None) -> int:
        """Declares a non-negative variable and returns its column index."""
        if name in self._index:
            raise MalformedProblemError(f'Variable declared twice: {name}')
        if upper is None:
            upper = math.inf
        if math.isnan(upper) or upper < 0:
            raise MalformedProblemError(
                f'Variable {name} has invalid upper bound {upper}')
        self._index[name] = len(self._names)
        self._names.append(name)
        self._integer.append(bool(integer))
        self._upper.append(float(upper))
        return self._index[name]

    def _column(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError as error:
            raise MalformedProblemError(
                f'Undeclared variable: {name}') from error

    @staticmethod
    def _check_finite(value: float, what: str):
        if not math.isfinite(value):
            raise MalformedProblemError(f'Non-finite {what}: {value}')

    def add_constraint(self,
                       expression: Mapping[str, float],
                       relation: str,
                       rhs: float,
                       name: Optional[str] = None) -> int:
        """Adds `expression <relation> rhs` and returns the row index."""
        if relation not in _RELATION_ALIASES:
            raise MalformedProblemError(f'Unknown relation: {relation}')
        row = len(self._relations)
        if name is None:
            name = f'c{row}'
        self._check_finite(float(rhs), f'right-hand side of {name}')
        for var_name, coef in expression.items():
            self._check_finite(float(coef), f'coefficient of {var_name}')
            if coef == 0:
                continue
            self._rows.append(row)
            self._cols.append(self._column(var_name))
            self._vals.append(float(coef))
        self._relations.append(_RELATION_ALIASES[relation])
        self._rhs.append(float(rhs))
        self._constraint_names.append(name)
        return row

    def set_objective(self,
                      expression: Mapping[str, float],
                      sense: str = constants.MINIMIZE,
                      constant: float = 0.0):
        """Replaces the objective with `constant + expression`."""
        if sense not in (constants.MINIMIZE, constants.MAXIMIZE):
            raise MalformedProblemError(f'Unknown objective sense: {sense}')
        self._check_finite(float(constant), 'objective constant')
        objective: Dict[int, float] = {}
        for var_name, coef in expression.items():
            self._check_finite(float(coef), f'objective coefficient of {var_name}')
            col = self._column(var_name)
            objective[col] = objective.get(col, 0.0) + float(coef)
        self._objective = objective
        self._offset = float(constant)
        self._maximize = sense == constants.MAXIMIZE

    def build(self) -> MilpProblem:
        """Freezes the accumulated data into a MilpProblem."""
        num_vars = len(self._names)
        objective = np.zeros(num_vars)
        for col, coef in self._objective.items():
            objective[col] = coef
        matrix = sparse.csr_matrix(
            (np.asarray(self._vals, dtype=float),
             (np.asarray(self._rows, dtype=int), np.asarray(self._cols,
                                                            dtype=int))),
            shape=(len(self._relations), num_vars))
        matrix.sum_duplicates()
        return MilpProblem(name=self._name,
                           variable_names=tuple(self._names),
                           integer=np.asarray(self._integer, dtype=bool),
                           upper=np.asarray(self._upper, dtype=float),
                           objective=objective,
                           objective_offset=self._offset,
                           maximize=self._maximize,
                           matrix=matrix,
                           relations=tuple(self._relations),
                           rhs=np.asarray(self._rhs, dtype=float),
                           constraint_names=tuple(self._constraint_names))


def relax(problem: MilpProblem) -> MilpProblem:
    """Drops integrality; everything else is unchanged."""
    return problem.replace(integer=np.zeros_like(problem.integer))


def objective_value(problem: MilpProblem, x: np.ndarray) -> float:
    """Evaluates the objective, offset included, at `x`."""
    return float(problem.objective @ x + problem.objective_offset)


def assignment(problem: MilpProblem,
               solution: MilpSolution) -> Dict[str, float]:
    """Maps variable names to their solved values."""
    return dict(zip(problem.variable_names, solution.x.tolist()))


def constraint_violations(problem: MilpProblem,
                          x: np.ndarray,
                          tolerance: float = 1e-7) -> np.ndarray:
    """Returns the indices of rows violated beyond a magnitude-scaled
    tolerance."""
    activity = problem.matrix @ x
    magnitude = np.maximum.reduce([
        np.ones_like(problem.rhs),
        np.abs(problem.rhs),
        abs(problem.matrix) @ np.abs(x),
    ]) if problem.num_constraints else np.zeros(0)
    relations = np.asarray(problem.relations, dtype=object)
    excess = np.zeros(problem.num_constraints)
    less = relations == constants.LESS_EQUAL
    greater = relations == constants.GREATER_EQUAL
    equal = relations == constants.EQUAL
    excess[less] = activity[less] - problem.rhs[less]
    excess[greater] = problem.rhs[greater] - activity[greater]
    excess[equal] = np.abs(activity[equal] - problem.rhs[equal])
    return np.flatnonzero(excess > tolerance * magnitude)


def check_solution(problem: MilpProblem,
                   solution: MilpSolution,
                   options: Optional[SolverOptions] = None) -> bool:
    """Checks rows, bounds, integrality and the reported objective."""
    if options is None:
        options = SolverOptions()
    x = np.asarray(solution.x, dtype=float)
    if x.shape != (problem.num_variables,) or not np.all(np.isfinite(x)):
        return False
    tol = options.feasibility_tolerance
    if np.any(x < -tol):
        return False
    if np.any(x > problem.upper + tol * np.maximum(1.0, problem.upper)):
        return False
    if len(constraint_violations(problem, x, tol)):
        return False
    int_values = x[problem.integer]
    if np.any(np.abs(int_values - np.round(int_values)) >
              options.integrality_tolerance):
        return False
    recomputed = objective_value(problem, x)
    return abs(recomputed - solution.objective_value) <= 1e-9 * max(
        1.0, abs(recomputed))
