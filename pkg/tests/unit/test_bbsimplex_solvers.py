"""Tests for the simplex and branch-and-bound solvers."""
# pylint: disable=missing-function-docstring, missing-class-docstring
import math
import unittest

import numpy as np
from absl.testing import absltest, parameterized

import bbsimplex


def _knapsack() -> bbsimplex.MilpProblem:
    builder = bbsimplex.ProblemBuilder('knapsack')
    builder.add_variable('x', integer=True, upper=4)
    builder.add_variable('y', integer=True, upper=4)
    builder.add_constraint({'x': 2, 'y': 3}, '<=', 12, name='weight')
    builder.set_objective({'x': 3, 'y': 4}, bbsimplex.MAXIMIZE, constant=1)
    return builder.build()


class SimplexTestCase(unittest.TestCase):

    def test_two_variable_lp(self):
        builder = bbsimplex.ProblemBuilder()
        builder.add_variable('x')
        builder.add_variable('y')
        builder.add_constraint({'x': 1, 'y': 2}, '<=', 4)
        builder.add_constraint({'x': 3, 'y': 1}, '<=', 6)
        builder.set_objective({'x': 1, 'y': 1}, bbsimplex.MAXIMIZE)
        solution = bbsimplex.solve_lp(builder.build())
        self.assertEqual(solution.status, bbsimplex.OPTIMAL)
        self.assertAlmostEqual(solution.objective_value, 2.8, places=9)
        np.testing.assert_allclose(solution.x, [1.6, 1.2], atol=1e-9)

    def test_equality_and_greater_rows(self):
        builder = bbsimplex.ProblemBuilder()
        builder.add_variable('x')
        builder.add_variable('y')
        builder.add_constraint({'x': 1, 'y': 1}, '=', 10)
        builder.add_constraint({'x': 1}, '>=', 3)
        builder.set_objective({'x': 2, 'y': 1})
        solution = bbsimplex.solve_lp(builder.build())
        self.assertEqual(solution.status, bbsimplex.OPTIMAL)
        self.assertAlmostEqual(solution.objective_value, 13.0, places=9)

    def test_unbounded_lp(self):
        builder = bbsimplex.ProblemBuilder()
        builder.add_variable('x')
        builder.add_variable('y')
        builder.add_constraint({'x': 1, 'y': -1}, '>=', 0)
        builder.set_objective({'x': -1})
        solution = bbsimplex.solve_lp(builder.build())
        self.assertEqual(solution.status, bbsimplex.UNBOUNDED)
        self.assertEqual(solution.objective_value, -math.inf)


class BranchAndBoundTestCase(parameterized.TestCase):

    def test_knapsack_optimum(self):
        problem = _knapsack()
        solution = bbsimplex.solve_milp(problem)
        self.assertEqual(solution.status, bbsimplex.OPTIMAL)
        self.assertAlmostEqual(solution.objective_value, 18.0, places=9)
        np.testing.assert_allclose(solution.x, [3, 2], atol=1e-6)
        self.assertTrue(bbsimplex.check_solution(problem, solution))
        self.assertGreaterEqual(solution.nodes, 1)

    def test_dual_bound_dominates_integer_optimum(self):
        self.assertAlmostEqual(bbsimplex.dual_bound(_knapsack()),
                               1 + 12 + 16 / 3,
                               places=9)

    def test_infeasible_problem(self):
        builder = bbsimplex.ProblemBuilder()
        builder.add_variable('x', integer=True, upper=2)
        builder.add_constraint({'x': 1}, '>=', 3)
        builder.set_objective({'x': 1})
        problem = builder.build()
        solution = bbsimplex.solve_milp(problem)
        self.assertEqual(solution.status, bbsimplex.INFEASIBLE)
        self.assertTrue(math.isnan(solution.objective_value))
        self.assertTrue(np.isnan(solution.x).all())
        self.assertEqual(bbsimplex.dual_bound(problem), math.inf)

    def test_node_limit_without_incumbent(self):
        solution = bbsimplex.solve_milp(_knapsack(),
                                        bbsimplex.SolverOptions(node_limit=1))
        self.assertEqual(solution.status, bbsimplex.NODE_LIMIT)
        self.assertTrue(np.isnan(solution.x).all())
        self.assertEqual(solution.gap, math.inf)

    def test_continuous_columns_stay_fractional(self):
        builder = bbsimplex.ProblemBuilder()
        builder.add_variable('n', integer=True)
        builder.add_variable('m')
        builder.add_constraint({'m': 1, 'n': -10}, '<=', 0)
        builder.add_constraint({'m': 1}, '>=', 25)
        builder.set_objective({'n': 7, 'm': 0.5})
        problem = builder.build()
        solution = bbsimplex.solve_milp(problem)
        self.assertEqual(solution.status, bbsimplex.OPTIMAL)
        np.testing.assert_allclose(solution.x, [3, 25], atol=1e-6)
        self.assertAlmostEqual(solution.objective_value, 33.5, places=6)
        self.assertTrue(bbsimplex.check_solution(problem, solution))

    @parameterized.parameters(range(100))
    def test_random_programs_match_enumeration(self, seed):
        problem = bbsimplex.random_milp(np.random.default_rng(seed),
                                        max_vars=6,
                                        max_bound=10)
        expected, point = bbsimplex.enumerate_optimum(problem)
        solution = bbsimplex.solve_milp(problem)
        if point is None:
            self.assertEqual(solution.status, bbsimplex.INFEASIBLE)
            return
        self.assertEqual(solution.status, bbsimplex.OPTIMAL)
        self.assertTrue(bbsimplex.check_solution(problem, solution))
        self.assertLessEqual(abs(solution.objective_value - expected),
                             1e-6 * max(1.0, abs(expected)))
        bound = bbsimplex.dual_bound(problem)
        if problem.maximize:
            self.assertGreaterEqual(bound, expected - 1e-6)
        else:
            self.assertLessEqual(bound, expected + 1e-6)

    @parameterized.parameters(range(10))
    def test_highs_backend_agrees(self, seed):
        problem = bbsimplex.random_milp(np.random.default_rng(1000 + seed),
                                        max_vars=4,
                                        max_bound=5)
        ours = bbsimplex.solve_milp(problem)
        theirs = bbsimplex.solve_milp_highs(problem)
        self.assertEqual(ours.status, theirs.status)
        if ours.status == bbsimplex.OPTIMAL:
            self.assertAlmostEqual(ours.objective_value,
                                   theirs.objective_value,
                                   places=5)


class EnumerationTestCase(unittest.TestCase):

    def test_enumeration_requires_bounded_integers(self):
        builder = bbsimplex.ProblemBuilder()
        builder.add_variable('x', integer=True)
        with self.assertRaises(ValueError):
            bbsimplex.enumerate_optimum(builder.build())

    def test_enumeration_finds_knapsack_optimum(self):
        value, point = bbsimplex.enumerate_optimum(_knapsack())
        self.assertEqual(value, 18.0)
        np.testing.assert_array_equal(point, [3, 2])


if __name__ == '__main__':
    absltest.main()
