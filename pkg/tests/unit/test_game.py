"""Tests for utilities, the feasible domain and the bargaining quantities."""
# pylint: disable=missing-function-docstring, missing-class-docstring
import math

import chex
import jax.numpy as jnp
import numpy as np
from absl.testing import absltest, parameterized

from nbs_logistics import curves, game


def _linear_oracle() -> curves.CurveCostOracle:
    return curves.CurveCostOracle(curves.load_curve_set('linear'))


class UtilityTestCase(chex.TestCase):

    def test_single_player_example(self):
        point = game.utility_point_from_costs(100.0, (0.0, 60.0), (1.0,),
                                              (0.8,))
        self.assertAlmostEqual(point.u_o, 20.0)
        self.assertAlmostEqual(point.u_p[0], 20.0)
        self.assertAlmostEqual(point.nash_product, 400.0)
        self.assertAlmostEqual(point.welfare, 40.0)
        self.assertAlmostEqual(point.incentive_paid, 80.0)
        self.assertAlmostEqual(point.expense, 80.0)
        self.assertTrue(point.feasible)
        self.assertEqual(point.bargaining_set, (0, 1))

    def test_utilities_from_oracle(self):
        point = game.utility_point(_linear_oracle(), (1.0,), (0.8,))
        self.assertEqual(point.costs, (0.0, 60.0))
        self.assertAlmostEqual(point.nash_product, 400.0)

    def test_welfare_does_not_depend_on_theta(self):
        costs = (10.0, 20.0, 30.0)
        alpha = (0.3, 0.5)
        for theta in ((0.0, 0.0), (0.5, 1.0), (1.2, 0.1)):
            point = game.utility_point_from_costs(90.0, costs, alpha, theta)
            self.assertAlmostEqual(point.u_o + sum(point.u_p), 30.0)
            self.assertAlmostEqual(point.welfare, 30.0)
            self.assertAlmostEqual(point.expense + point.u_o, 90.0)

    def test_infeasible_point_has_no_product(self):
        point = game.utility_point_from_costs(100.0, (0.0, 60.0), (1.0,),
                                              (0.5,))
        self.assertFalse(point.feasible)
        self.assertTrue(math.isnan(point.nash_product))
        self.assertTrue(math.isnan(game.nash_product(point)))

    def test_non_participant_is_outside_the_bargain(self):
        point = game.utility_point_from_costs(100.0, (50.0, 30.0, 0.0),
                                              (0.5, 0.0), (0.8, 0.0))
        self.assertEqual(point.bargaining_set, (0, 1))
        self.assertAlmostEqual(point.nash_product, 10.0 * 10.0)
        self.assertAlmostEqual(game.maximin_value(point), 10.0)

    def test_nash_welfare_is_degree_one(self):
        self.assertAlmostEqual(game.nash_welfare_of(400.0, 2), 40.0)
        self.assertAlmostEqual(game.nash_welfare_of(15.0 * 5.0 * 3.0, 3),
                               3 * 225.0**(1 / 3))
        self.assertTrue(math.isnan(game.nash_welfare_of(math.nan, 2)))
        point = game.utility_point_from_costs(100.0, (50.0, 30.0, 0.0),
                                              (0.5, 0.0), (0.8, 0.0))
        scaled = game.utility_point_from_costs(1e5, (5e4, 3e4, 0.0),
                                               (0.5, 0.0), (0.8, 0.0))
        self.assertAlmostEqual(point.nash_welfare, 20.0)
        self.assertAlmostEqual(scaled.nash_welfare, 2e4, delta=1e-6)
        self.assertAlmostEqual(scaled.nash_product, 1e6 * point.nash_product,
                               delta=1e-3)

    def test_welfare_with_infinite_cost(self):
        self.assertEqual(game.welfare_from_costs(100.0, (0.0, math.inf)),
                         -math.inf)

    def test_invalid_baseline(self):
        with self.assertRaises(ValueError):
            game.utility_point_from_costs(0.0, (0.0, 1.0), (1.0,), (1.0,))
        with self.assertRaises(ValueError):
            game.theta_star_from_costs(math.inf, (0.0, 1.0), (1.0,))

    def test_disagreement_length(self):
        self.assertEqual(game.disagreement_vector(None, 2), (0.0, 0.0, 0.0))
        with self.assertRaises(ValueError):
            game.disagreement_vector((1.0,), 2)

    def test_utility_coordinator_broadcasts(self):
        alpha = jnp.array([[0.0], [0.5], [1.0]])
        theta = jnp.array([[0.8], [0.8], [0.8]])
        costs = jnp.array([100.0, 50.0, 0.0])
        np.testing.assert_allclose(
            game.utility_coordinator(100.0, costs, alpha, theta),
            [0.0, 10.0, 20.0])


class ThetaStarTestCase(parameterized.TestCase):

    def test_two_player_example(self):
        theta = game.theta_star_from_costs(90.0, (0.0, 20.0, 30.0), (0.5, 0.5))
        np.testing.assert_allclose(theta, (20 / 27, 26 / 27), rtol=1e-12)
        point = game.utility_point_from_costs(90.0, (0.0, 20.0, 30.0),
                                              (0.5, 0.5), theta)
        np.testing.assert_allclose(point.utilities, (40 / 3,) * 3, rtol=1e-9)
        self.assertAlmostEqual(point.nash_product, (40 / 3)**3, places=6)
        self.assertAlmostEqual(point.welfare, 40.0)

    def test_single_player_example(self):
        theta = game.theta_star(_linear_oracle(), (1.0,))
        self.assertAlmostEqual(theta[0], 0.8)

    def test_non_participants_get_nothing(self):
        theta = game.theta_star_from_costs(100.0, (50.0, 30.0, 0.0),
                                           (0.5, 0.0))
        self.assertEqual(theta[1], 0.0)
        self.assertAlmostEqual(theta[0], 0.8)

    def test_negative_welfare_has_no_split(self):
        self.assertIsNone(
            game.theta_star_from_costs(100.0, (0.0, 150.0), (1.0,)))

    def test_disagreement_point_shifts_incentives(self):
        theta = game.theta_star_from_costs(100.0, (0.0, 60.0), (1.0,),
                                           (5.0, 5.0))
        self.assertAlmostEqual(theta[0], 0.8)
        point = game.utility_point_from_costs(100.0, (0.0, 60.0), (1.0,),
                                              theta, (5.0, 15.0))
        self.assertAlmostEqual(point.nash_product, 15.0 * 5.0)
        self.assertIsNone(
            game.theta_star_from_costs(100.0, (0.0, 60.0), (1.0,),
                                       (30.0, 20.0)))

    @parameterized.parameters(range(5))
    def test_equal_surplus_over_the_bargaining_set(self, seed):
        rng = np.random.default_rng(seed)
        alpha = rng.dirichlet(np.ones(4))[:3]
        costs = (rng.uniform(0, 20),) + tuple(rng.uniform(0, 20, size=3))
        theta = game.theta_star_from_costs(200.0, costs, alpha)
        point = game.utility_point_from_costs(200.0, costs, alpha, theta)
        self.assertTrue(point.feasible)
        np.testing.assert_allclose(point.utilities,
                                   (point.welfare / 4,) * 4,
                                   rtol=1e-9)


class DomainTestCase(parameterized.TestCase):

    @parameterized.named_parameters(('inside', 0.8, True),
                                    ('cost_not_covered', 0.5, False),
                                    ('budget_exceeded', 1.1, False),
                                    ('coordinator_break_even', 1.0, True),
                                    ('player_break_even', 0.6, True))
    def test_omega_contains(self, theta, expected):
        self.assertEqual(game.omega_contains(_linear_oracle(), (1.0,), (theta,)),
                         expected)

    def test_omega_ignores_theta_of_non_participants(self):
        self.assertTrue(game.omega_contains(_linear_oracle(), (0.0,), (0.0,)))

    def test_feasible_theta_interval(self):
        self.assertEqual(game.feasible_theta_interval(100.0, 0.0, 60.0, 1.0),
                         (0.6, 1.0))
        low, high = game.feasible_theta_interval(100.0, 50.0, 30.0, 0.5)
        self.assertAlmostEqual(low, 0.6)
        self.assertAlmostEqual(high, 1.0)
        self.assertIsNone(game.feasible_theta_interval(100.0, 50.0, 60.0, 1.0))
        self.assertIsNone(game.feasible_theta_interval(100.0, 0.0, 0.0, 0.0))

    def test_contour_fields(self):
        fields = game.contour_fields(100.0, 0.0, 60.0, 1.0,
                                     [0.5, 0.8, 1.0, 1.1])
        np.testing.assert_allclose(fields['u_o'], [50.0, 20.0, 0.0, -10.0])
        np.testing.assert_allclose(fields['u_p'], [-10.0, 20.0, 40.0, 50.0])
        np.testing.assert_array_equal(fields['feasible'],
                                      [False, True, True, False])
        np.testing.assert_allclose(fields['nash_product'],
                                   [np.nan, 400.0, 0.0, np.nan])


if __name__ == '__main__':
    absltest.main()
