"""Two-phase revised simplex method for LP relaxations."""

import time
from typing import Optional, Tuple

import chex
import numpy as np
from scipy import sparse

from bbsimplex import constants
from bbsimplex.problem import (MilpProblem, MilpSolution, SolverOptions,
                               objective_value, relax)

_PIVOT_TOLERANCE = 1e-9
_OPTIMALITY_TOLERANCE = 1e-9
_REFACTOR_FREQUENCY = 100
# Consecutive degenerate pivots before switching to Bland's rule.
_DEGENERATE_STREAK = 50


@chex.dataclass(frozen=True)
class LpResult:
    """Outcome of one LP solve in the caller's variable space."""
    status: str
    x: np.ndarray
    objective_value: float
    iterations: int


@chex.dataclass(frozen=True)
class _StandardForm:
    """min cost @ z  s.t.  matrix @ z = rhs, z >= 0, rhs >= 0.

    The first `num_structural` columns map back to the caller's variables
    through `x = col_scale * z + lower`.
    """
    matrix: sparse.csc_matrix
    rhs: np.ndarray
    cost: np.ndarray
    col_scale: np.ndarray
    num_structural: int


def _stack(blocks, how: str) -> sparse.csr_matrix:
    """Stacks sparse blocks, skipping empty ones."""
    blocks = [block for block in blocks if min(block.shape) > 0] or blocks[:1]
    if len(blocks) == 1:
        return sparse.csr_matrix(blocks[0])
    if how == 'v':
        return sparse.vstack(blocks, format='csr')
    return sparse.hstack(blocks, format='csr')


def _abs_max(matrix: sparse.spmatrix, axis: int) -> np.ndarray:
    if matrix.shape[0] == 0 or matrix.shape[1] == 0:
        return np.zeros(matrix.shape[1 - axis])
    return abs(matrix).max(axis=axis).toarray().ravel()


def _drop_empty_rows(matrix: sparse.csr_matrix, relations: np.ndarray,
                     rhs: np.ndarray, tol: float):
    """Returns the non-empty rows, or None when an empty row is violated."""
    empty = np.diff(matrix.indptr) == 0
    if empty.any():
        rel, val = relations[empty], rhs[empty]
        violated = (((rel == constants.LESS_EQUAL) & (val < -tol)) |
                    ((rel == constants.GREATER_EQUAL) & (val > tol)) |
                    ((rel == constants.EQUAL) & (np.abs(val) > tol)))
        if violated.any():
            return None
    keep = ~empty
    return matrix[keep], relations[keep], rhs[keep]


def _standard_form(problem: MilpProblem, lower: np.ndarray,
                   upper: np.ndarray,
                   tol: float) -> Optional[_StandardForm]:
    """Shifts, bounds, slacks and scales the problem into standard form.

    Returns None if the bounds or an empty row are already contradictory.
    """
    num_vars = problem.num_variables
    span = upper - lower
    if np.any(span < -tol):
        return None
    span = np.maximum(span, 0.0)
    matrix = sparse.csr_matrix(problem.matrix)
    rhs = problem.rhs - matrix @ lower
    bounded = np.flatnonzero(np.isfinite(span))
    bound_rows = sparse.csr_matrix(
        (np.ones(len(bounded)), (np.arange(len(bounded)), bounded)),
        shape=(len(bounded), num_vars))
    matrix = _stack([matrix, bound_rows], 'v')
    relations = np.concatenate([
        np.asarray(problem.relations, dtype=object),
        np.full(len(bounded), constants.LESS_EQUAL, dtype=object)
    ])
    rhs = np.concatenate([rhs, span[bounded]])
    kept = _drop_empty_rows(matrix, relations, rhs, tol)
    if kept is None:
        return None
    matrix, relations, rhs = kept
    num_rows = matrix.shape[0]
    sign = -1.0 if problem.maximize else 1.0
    if num_rows == 0:
        return _StandardForm(matrix=sparse.csc_matrix((0, num_vars)),
                             rhs=np.zeros(0),
                             cost=sign * problem.objective,
                             col_scale=np.ones(num_vars),
                             num_structural=num_vars)

    slack_rows = np.flatnonzero(relations != constants.EQUAL)
    slack_sign = np.where(relations[slack_rows] == constants.LESS_EQUAL, 1.0,
                          -1.0)
    slacks = sparse.csr_matrix(
        (slack_sign, (slack_rows, np.arange(len(slack_rows)))),
        shape=(num_rows, len(slack_rows)))
    full = _stack([matrix, slacks], 'h')

    flip = np.where(rhs < 0, -1.0, 1.0)
    row_max = _abs_max(full, axis=1)
    row_scale = flip / np.where(row_max > 0, row_max, 1.0)
    full = sparse.diags(row_scale).tocsr() @ full
    rhs = rhs * row_scale

    col_max = _abs_max(full, axis=0)
    col_scale = 1.0 / np.where(col_max > 0, col_max, 1.0)
    full = full @ sparse.diags(col_scale).tocsr()

    cost = np.concatenate([sign * problem.objective,
                           np.zeros(len(slack_rows))]) * col_scale
    cost_max = np.abs(cost).max() if len(cost) else 0.0
    if cost_max > 0:
        cost = cost / cost_max
    return _StandardForm(matrix=sparse.csc_matrix(full),
                         rhs=rhs,
                         cost=cost,
                         col_scale=col_scale,
                         num_structural=num_vars)


class _Tableau:
    """Basis bookkeeping with an explicit dense inverse.

    The starting basis must be made of single-entry columns (slacks and
    artificials), so its inverse is diagonal.
    """

    def __init__(self, matrix: sparse.csc_matrix, rhs: np.ndarray,
                 basis: np.ndarray):
        self.matrix = matrix
        self.matrix_t = sparse.csr_matrix(matrix.T)
        self.rhs = rhs
        self.basis = basis
        self.is_basic = np.zeros(matrix.shape[1], dtype=bool)
        self.is_basic[basis] = True
        diagonal = np.asarray(matrix[:, basis].sum(axis=0)).ravel()
        self.b_inv = np.diag(1.0 / diagonal)
        self.x_b = rhs / diagonal
        self.iterations = 0

    def column(self, j: int) -> np.ndarray:
        start, end = self.matrix.indptr[j], self.matrix.indptr[j + 1]
        return self.b_inv[:, self.matrix.indices[start:end]] @ \
            self.matrix.data[start:end]

    def refactor(self):
        dense_basis = self.matrix[:, self.basis].toarray()
        try:
            self.b_inv = np.linalg.inv(dense_basis)
        except np.linalg.LinAlgError:
            return
        self.x_b = self.b_inv @ self.rhs

    def pivot(self, row: int, entering: int, col: np.ndarray) -> float:
        step = self.x_b[row] / col[row]
        self.x_b = self.x_b - step * col
        self.x_b[row] = step
        pivot_row = self.b_inv[row] / col[row]
        self.b_inv -= np.outer(col, pivot_row)
        self.b_inv[row] = pivot_row
        self.is_basic[self.basis[row]] = False
        self.basis[row] = entering
        self.is_basic[entering] = True
        self.iterations += 1
        return step

    def run(self, cost: np.ndarray, eligible: np.ndarray,
            iteration_limit: int, deadline: Optional[float]) -> str:
        """Pivots until optimal, unbounded or out of budget."""
        degenerate = 0
        while True:
            if self.iterations >= iteration_limit:
                return constants.ITERATION_LIMIT
            if deadline is not None and time.monotonic() > deadline:
                return constants.TIME_LIMIT
            if self.iterations and self.iterations % _REFACTOR_FREQUENCY == 0:
                self.refactor()
            duals = cost[self.basis] @ self.b_inv
            reduced = cost - self.matrix_t @ duals
            candidates = np.flatnonzero(eligible & ~self.is_basic &
                                        (reduced < -_OPTIMALITY_TOLERANCE))
            if not len(candidates):
                return constants.OPTIMAL
            bland = degenerate >= _DEGENERATE_STREAK
            if bland:
                entering = candidates[0]
            else:
                entering = candidates[np.argmin(reduced[candidates])]
            col = self.column(entering)
            rows = np.flatnonzero(col > _PIVOT_TOLERANCE)
            if not len(rows):
                return constants.UNBOUNDED
            ratios = np.maximum(self.x_b[rows], 0.0) / col[rows]
            min_ratio = ratios.min()
            ties = rows[ratios <= min_ratio + 1e-12 * max(1.0, min_ratio)]
            if bland:
                row = ties[np.argmin(self.basis[ties])]
            else:
                row = ties[np.argmax(col[ties])]
            self.x_b[row] = max(self.x_b[row], 0.0)
            step = self.pivot(row, entering, col)
            degenerate = degenerate + 1 if step <= 1e-12 else 0

    def drive_out(self, is_artificial: np.ndarray):
        """Pivots zero-level artificials out of the basis where possible.

        An artificial that cannot leave sits on a redundant row and stays at
        zero because no eligible column has an entry in that row.
        """
        for row in np.flatnonzero(is_artificial[self.basis]):
            tableau_row = self.matrix_t @ self.b_inv[row]
            candidates = np.flatnonzero(~is_artificial & ~self.is_basic & (
                np.abs(tableau_row) > _PIVOT_TOLERANCE))
            if not len(candidates):
                continue
            entering = candidates[np.argmax(np.abs(tableau_row[candidates]))]
            self.pivot(row, entering, self.column(entering))


def _solve_standard_form(form: _StandardForm, options: SolverOptions,
                         deadline: Optional[float]
                         ) -> Tuple[str, np.ndarray, int]:
    """Runs both phases.

    Returns:
        (status, z over the structural and slack columns, iterations)
    """
    matrix, rhs = form.matrix, form.rhs
    num_rows, num_cols = matrix.shape
    if num_rows == 0:
        if np.any(form.cost < -_OPTIMALITY_TOLERANCE):
            return constants.UNBOUNDED, np.zeros(num_cols), 0
        return constants.OPTIMAL, np.zeros(num_cols), 0

    # A row starts with its slack basic when the slack coefficient is +1.
    basis = np.full(num_rows, -1)
    for j in range(form.num_structural, num_cols):
        start, end = matrix.indptr[j], matrix.indptr[j + 1]
        if end - start == 1 and matrix.data[start] > 0:
            row = matrix.indices[start]
            if basis[row] < 0:
                basis[row] = j
    needs_artificial = np.flatnonzero(basis < 0)
    artificials = sparse.csc_matrix(
        (np.ones(len(needs_artificial)),
         (needs_artificial, np.arange(len(needs_artificial)))),
        shape=(num_rows, len(needs_artificial)))
    full = sparse.csc_matrix(_stack([matrix, artificials], 'h'))
    basis[needs_artificial] = num_cols + np.arange(len(needs_artificial))
    is_artificial = np.zeros(full.shape[1], dtype=bool)
    is_artificial[num_cols:] = True
    eligible = ~is_artificial

    tableau = _Tableau(full, rhs, basis)
    if len(needs_artificial):
        status = tableau.run(is_artificial.astype(float), eligible,
                             options.iteration_limit, deadline)
        if status != constants.OPTIMAL:
            return status, np.zeros(num_cols), tableau.iterations
        tableau.refactor()
        infeasibility = float(
            np.sum(tableau.x_b[is_artificial[tableau.basis]]))
        threshold = options.feasibility_tolerance * max(
            1.0, float(np.abs(rhs).max()))
        if infeasibility > threshold:
            return constants.INFEASIBLE, np.zeros(num_cols), tableau.iterations
        tableau.drive_out(is_artificial)

    phase_two_cost = np.concatenate(
        [form.cost, np.zeros(len(needs_artificial))])
    status = tableau.run(phase_two_cost, eligible, options.iteration_limit,
                         deadline)
    if status != constants.OPTIMAL:
        return status, np.zeros(num_cols), tableau.iterations
    tableau.refactor()
    z = np.zeros(full.shape[1])
    z[tableau.basis] = np.maximum(tableau.x_b, 0.0)
    return constants.OPTIMAL, z[:num_cols], tableau.iterations


def solve_bounded_lp(problem: MilpProblem,
                     lower: np.ndarray,
                     upper: np.ndarray,
                     options: Optional[SolverOptions] = None,
                     deadline: Optional[float] = None) -> LpResult:
    """Solves the continuous problem with variables boxed in [lower, upper].

    Integrality flags are ignored.
    """
    if options is None:
        options = SolverOptions()
    missing = np.full(problem.num_variables, np.nan)
    form = _standard_form(problem, lower, upper, options.feasibility_tolerance)
    if form is None:
        return LpResult(status=constants.INFEASIBLE,
                        x=missing,
                        objective_value=float('nan'),
                        iterations=0)
    status, z, iterations = _solve_standard_form(form, options, deadline)
    if status == constants.UNBOUNDED:
        return LpResult(
            status=status,
            x=missing,
            objective_value=float('inf' if problem.maximize else '-inf'),
            iterations=iterations)
    if status != constants.OPTIMAL:
        return LpResult(status=status,
                        x=missing,
                        objective_value=float('nan'),
                        iterations=iterations)
    num_vars = problem.num_variables
    x = z[:num_vars] * form.col_scale[:num_vars] + lower
    x = np.minimum(np.maximum(x, lower), upper)
    return LpResult(status=status,
                    x=x,
                    objective_value=objective_value(problem, x),
                    iterations=iterations)


def solve_lp(problem: MilpProblem,
             options: Optional[SolverOptions] = None) -> MilpSolution:
    """Solves the LP relaxation of `problem` with the revised simplex method.

    Args:
        problem: Problem whose integrality is dropped before solving.
        options: Tolerances plus the iteration and time limits.

    Returns:
        An optimal basic solution, or an infeasible/unbounded status.
    """
    if options is None:
        options = SolverOptions()
    problem = relax(problem)
    deadline = time.monotonic() + options.time_limit
    result = solve_bounded_lp(problem, np.zeros(problem.num_variables),
                              problem.upper, options, deadline)
    return MilpSolution(
        status=result.status,
        objective_value=result.objective_value,
        x=result.x,
        gap=0.0 if result.status == constants.OPTIMAL else float('nan'),
        nodes=0,
        lp_iterations=result.iterations)
