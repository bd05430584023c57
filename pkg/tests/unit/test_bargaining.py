"""Tests for the incentive design scenarios."""
# pylint: disable=missing-function-docstring, missing-class-docstring
import itertools
import json
import math
import os

import chex
import numpy as np
from absl.testing import absltest, parameterized

from nbs_logistics import bargaining, constants, curves, game, main, scenario

FLAGS = main.FLAGS

TESTDATA = os.path.join(os.path.dirname(os.path.dirname(__file__)),
                        'testdata')


def _oracle(coordinator, *players) -> curves.CurveCostOracle:
    """Oracle over (alphas, costs) samples per player."""

    def curve(player_id, samples):
        alphas, costs = samples
        return curves.CostCurve(player=player_id,
                                alphas=tuple(alphas),
                                costs=tuple(costs),
                                source=constants.USER_SUPPLIED)

    return curves.CurveCostOracle(
        curves.CurveSet(coordinator=curve('coordinator', coordinator),
                        players=tuple(
                            curve(f'player_{k + 1}', samples)
                            for k, samples in enumerate(players))))


def _linear() -> curves.CurveCostOracle:
    return curves.CurveCostOracle(curves.load_curve_set('linear'))


def _random_oracle(seed: int, num_players: int) -> curves.CurveCostOracle:
    """Quadratic costs sampled on the 0.1 lattice."""
    rng = np.random.default_rng(seed)
    grid = [round(0.1 * i, 12) for i in range(11)]
    functions = {}
    for k in range(num_players + 1):
        linear, quadratic = rng.uniform(10, 60), rng.uniform(-5, 30)
        functions['coordinator' if k == 0 else f'player_{k}'] = (
            lambda a, b=linear, c=quadratic: max(0.0, b * a + c * a * a))
    return curves.CurveCostOracle(
        curves.curves_from_functions(functions, 'coordinator', grid))


class CountingOracle:

    def __init__(self, oracle):
        self.oracle = oracle
        self.coordinator = oracle.coordinator
        self.players = oracle.players
        self.calls = []

    @property
    def baseline(self):
        return self.oracle.baseline

    def cost(self, player_id, share):
        self.calls.append((player_id, share))
        return self.oracle.cost(player_id, share)


class LatticeTestCase(parameterized.TestCase):

    def test_lexicographic_order(self):
        np.testing.assert_allclose(
            bargaining.simplex_lattice(2, 0.5),
            [[0, 0], [0, 0.5], [0, 1], [0.5, 0], [0.5, 0.5], [1, 0]])

    @parameterized.parameters((1, 0.01, 101), (2, 0.1, 66), (3, 0.25, 35))
    def test_lattice_size(self, num_players, resolution, size):
        lattice = bargaining.simplex_lattice(num_players, resolution)
        self.assertEqual(lattice.shape, (size, num_players))
        self.assertTrue(np.all(lattice.sum(axis=1) <= 1 + 1e-12))

    @parameterized.parameters(0.3, 0.0, -0.1)
    def test_resolution_must_divide_one(self, resolution):
        with self.assertRaises(ValueError):
            bargaining.simplex_lattice(1, resolution)

    def test_each_share_is_costed_once(self):
        oracle = CountingOracle(_random_oracle(0, 2))
        lattice = bargaining.simplex_lattice(2, 0.1)
        costs = bargaining.lattice_costs(oracle, lattice)
        self.assertEqual(costs.shape, (66, 3))
        self.assertEqual(len(oracle.calls), len(set(oracle.calls)))
        self.assertLen(oracle.calls, 33)
        np.testing.assert_allclose(costs[5], game.player_costs(
            oracle.oracle, lattice[5]))


class Scenario1TestCase(parameterized.TestCase):

    def test_linear_curves(self):
        design = bargaining.solve_scenario1(_linear())
        self.assertTrue(design.feasible)
        self.assertEqual(design.alpha, (1.0,))
        self.assertAlmostEqual(design.theta[0], 0.8)
        self.assertAlmostEqual(design.budgets[0], 80.0)
        self.assertAlmostEqual(design.point.nash_product, 400.0)
        self.assertLen(design.ties, 1)
        self.assertEqual(design.method, 'grid')

    def test_no_mutual_benefit(self):
        oracle = _oracle(([0, 1], [0, 100]), ([0, 1], [0, 150]))
        design = bargaining.solve_scenario1(oracle, 0.1)
        self.assertFalse(design.feasible)
        self.assertEqual(design.reason, bargaining.NO_MUTUAL_BENEFIT)
        self.assertIsNone(design.point)

    def test_ties_are_reported_in_order(self):
        oracle = _oracle(([0, 1], [0, 100]), ([0, 0.5, 1], [0, 10, 60]))
        design = bargaining.solve_scenario1(oracle, 0.25)
        self.assertEqual([alpha for alpha, _ in design.ties], [(0.5,), (0.75,),
                                                               (1.0,)])
        self.assertEqual(design.alpha, (0.5,))
        self.assertAlmostEqual(design.point.welfare, 40.0)

    def test_disagreement_point(self):
        design = bargaining.solve_scenario1(_linear(), 0.1, (10.0, 10.0))
        self.assertTrue(design.feasible)
        self.assertAlmostEqual(design.point.u_o, 20.0)
        self.assertAlmostEqual(design.point.u_p[0], 20.0)

    @parameterized.parameters(range(8))
    def test_nash_product_is_maximal_over_equal_supports(self, seed):
        oracle = _random_oracle(seed, 2)
        design = bargaining.solve_scenario1(oracle, 0.1)
        if not design.feasible:
            self.assertEqual(design.reason, bargaining.NO_MUTUAL_BENEFIT)
            return
        best = design.point
        members = best.bargaining_set
        np.testing.assert_allclose([best.utilities[i] for i in members],
                                   [best.welfare / len(members)] *
                                   len(members),
                                   rtol=1e-9)
        for alpha in bargaining.simplex_lattice(2, 0.1):
            if game.bargaining_set(alpha) != members:
                continue
            theta = game.theta_star(oracle, alpha)
            if theta is None:
                continue
            point = game.utility_point(oracle, alpha, theta)
            self.assertLessEqual(point.welfare, best.welfare + 1e-9)
            self.assertLessEqual(point.nash_product,
                                 best.nash_product * (1 + 1e-9) + 1e-9)

    @parameterized.parameters(range(8))
    def test_scenarios_agree_at_the_optimum(self, seed):
        oracle = _random_oracle(seed, 2)
        first = bargaining.solve_scenario1(oracle, 0.1)
        if not first.feasible:
            return
        second = bargaining.solve_scenario2(oracle, first.alpha)
        np.testing.assert_allclose(second.theta, first.theta, rtol=1e-9)
        third = bargaining.solve_scenario3(oracle, first.theta, 0.1)
        self.assertTrue(third.feasible)
        self.assertGreaterEqual(third.point.nash_welfare,
                                first.point.nash_welfare * (1 - 1e-9))

def _step_oracle(rng: np.random.Generator,
                 num_players: int) -> curves.CurveCostOracle:
    """Piecewise-linear costs with occasional jumps on the 0.1 grid."""
    grid = [round(0.1 * i, 12) for i in range(11)]

    def samples(low, high):
        steps = rng.uniform(low, high, 10) + (rng.random(10) < 0.2) * \
            rng.uniform(20, 60, 10)
        return grid, [0.0] + list(np.cumsum(steps))

    return _oracle(samples(10, 40), *(samples(0, 15)
                                      for _ in range(num_players)))


class EqualSurplusPropertyTestCase(absltest.TestCase):
    """Random instances against a brute-force search over every split of
    the lattice and every incentive vector of a 0.01 grid."""

    THETAS = np.round(np.arange(151) * 0.01, 12)
    RESOLUTIONS = {2: 0.1, 3: 0.25, 4: 1 / 3}

    def setUp(self):
        FLAGS.mark_as_parsed()

    def _grid_maxima(self, baseline, costs, alpha):
        """Largest Nash welfare and largest member count times the smallest
        surplus over the feasible incentive grid of one split."""
        members = game.bargaining_set(alpha)
        total = baseline - math.fsum(costs[i] for i in members)
        columns = []
        for index in members[1:]:
            u = alpha[index - 1] * self.THETAS * baseline - costs[index]
            columns.append(u[(u >= -1e-9) & (u <= total + 1e-9)])
        if any(column.size == 0 for column in columns):
            return None
        count = len(members)
        inner = [g.ravel() for g in np.meshgrid(*columns[-2:], indexing='ij')]
        inner_sum = np.sum(inner, axis=0) if inner else np.zeros(1)
        inner_product = (np.prod(np.maximum(inner, 0.0), axis=0)
                         if inner else np.ones(1))
        inner_min = np.min(inner, axis=0) if inner else np.full(1, np.inf)
        score, floor = -np.inf, -np.inf
        for outer in itertools.product(*columns[:-2]):
            u_o = total - sum(outer) - inner_sum
            ok = u_o >= -1e-9
            if not ok.any():
                continue
            product = (np.maximum(u_o[ok], 0.0) * inner_product[ok] *
                       np.prod(np.maximum(outer, 0.0)))
            worst = np.minimum(np.minimum(u_o[ok], inner_min[ok]),
                               min(outer, default=np.inf))
            score = max(score, float(np.max(count * product**(1.0 / count))))
            floor = max(floor, count * float(np.max(worst)))
        if not math.isfinite(score):
            return None
        return score, floor

    def _check_instance(self, oracle, resolution):
        baseline = oracle.baseline
        design = bargaining.solve_scenario1(oracle, resolution)
        lattice = bargaining.simplex_lattice(len(oracle.players), resolution)
        if design.feasible:
            best = design.point
            members = best.bargaining_set
            np.testing.assert_allclose([best.utilities[i] for i in members],
                                       [best.welfare / len(members)] *
                                       len(members),
                                       rtol=1e-9)
            self.assertTrue(
                game.omega_contains(oracle, design.alpha, design.theta))
            np.testing.assert_allclose(best.nash_welfare, best.welfare,
                                       rtol=1e-9)
            ceiling = best.nash_welfare
            floor = len(members) * game.maximin_value(best)
            rng = np.random.default_rng(len(lattice))
            for _ in range(3):
                theta = rng.uniform(0.0, 2.0, len(oracle.players))
                point = game.utility_point_from_costs(baseline, best.costs,
                                                      design.alpha, theta)
                np.testing.assert_allclose(math.fsum(point.utilities),
                                           best.welfare,
                                           rtol=1e-12,
                                           atol=1e-9)
        else:
            ceiling = floor = game.UTILITY_TOLERANCE * max(1.0, baseline)
        for alpha in lattice:
            costs = game.player_costs(oracle, alpha)
            if any(math.isinf(cost) for cost in costs):
                continue
            maxima = self._grid_maxima(baseline, costs, alpha)
            if maxima is None:
                continue
            score, worst = maxima
            self.assertLessEqual(score, ceiling * (1 + 1e-9) + 1e-7)
            self.assertLessEqual(worst, floor * (1 + 1e-9) + 1e-7)
        return design.feasible

    def test_two_to_four_players(self):
        solved = {2: 0, 3: 0, 4: 0}
        for seed in range(200):
            num_players = 2 + seed % 3
            rng = np.random.default_rng(seed)
            solved[num_players] += self._check_instance(
                _step_oracle(rng, num_players), self.RESOLUTIONS[num_players])
        for num_players, count in solved.items():
            self.assertGreater(count, 0, msg=f'{num_players} players')


class MilpScenario1TestCase(absltest.TestCase):

    def setUp(self):
        FLAGS.mark_as_parsed()

    def test_joint_solve_matches_the_grid(self):
        cfg = scenario.load_scenario(
            os.path.join(TESTDATA, 'tiny_two_player.json'))
        joint = bargaining.solve_scenario1_milp(cfg)
        self.assertTrue(joint.feasible)
        self.assertEqual(joint.method, 'milp')
        self.assertAlmostEqual(joint.alpha[0], 1.0, places=6)
        # Half of Q plus half of the player's incremental cost.
        self.assertAlmostEqual(joint.theta[0], 0.5123786, places=5)
        self.assertAlmostEqual(joint.point.u_o, joint.point.u_p[0], delta=1.0)
        grid = bargaining.solve_scenario1(curves.MilpCostOracle(cfg), 0.5)
        self.assertEqual(grid.alpha, (1.0,))
        self.assertAlmostEqual(grid.theta[0], joint.theta[0], places=6)

    def test_coordinator_alone_cannot_deliver(self):
        cfg = scenario.load_scenario(
            os.path.join(TESTDATA, 'tiny_two_player.json'))
        cfg = cfg.replace(deployment_missions=(scenario.DeploymentMission(
            release=0, due=10),))
        design = bargaining.solve_scenario1_milp(cfg)
        self.assertFalse(design.feasible)
        self.assertIn('coordinator', design.reason)


class Scenario2TestCase(absltest.TestCase):

    def test_fixed_split(self):
        design = bargaining.solve_scenario2(_linear(), (0.5,))
        self.assertTrue(design.feasible)
        self.assertAlmostEqual(design.theta[0], 0.8)
        self.assertAlmostEqual(design.point.u_o, 10.0)
        self.assertAlmostEqual(design.point.u_p[0], 10.0)

    def test_split_outside_simplex(self):
        with self.assertRaises(ValueError):
            bargaining.solve_scenario2(_linear(), (1.2,))
        with self.assertRaises(ValueError):
            bargaining.solve_scenario2(_linear(), (0.5, 0.5))

    def test_negative_welfare(self):
        oracle = _oracle(([0, 1], [0, 100]), ([0, 1], [0, 150]))
        design = bargaining.solve_scenario2(oracle, (1.0,))
        self.assertFalse(design.feasible)
        self.assertTrue(design.reason.startswith(bargaining.NO_MUTUAL_BENEFIT))

    def test_undeliverable_split(self):
        oracle = _oracle(([0, 1], [0, 100]), ([0, 0.5, 1], [0, 10, math.inf]))
        design = bargaining.solve_scenario2(oracle, (1.0,))
        self.assertFalse(design.feasible)
        self.assertEqual(design.reason, 'the split cannot be delivered')


class Scenario3TestCase(parameterized.TestCase):

    def test_linear_curves(self):
        design = bargaining.solve_scenario3(_linear(), (0.8,))
        self.assertTrue(design.feasible)
        self.assertEqual(design.alpha, (1.0,))
        self.assertAlmostEqual(design.point.nash_product, 400.0)

    def test_incentive_below_cost(self):
        design = bargaining.solve_scenario3(_linear(), (0.5,), 0.1)
        self.assertFalse(design.feasible)
        self.assertEqual(design.reason, bargaining.NO_MUTUAL_BENEFIT)

    def test_invalid_incentives(self):
        with self.assertRaises(ValueError):
            bargaining.solve_scenario3(_linear(), (-0.1,))
        with self.assertRaises(ValueError):
            bargaining.solve_scenario3(_linear(), (0.8, 0.8))


def _scaled_oracle(scale: float) -> curves.CurveCostOracle:
    """Linear costs where the second player adds little welfare."""
    functions = {
        'coordinator': lambda a: scale * a,
        'player_1': lambda a: 0.5 * scale * a,
        'player_2': lambda a: 0.9 * scale * a,
    }
    return curves.CurveCostOracle(
        curves.curves_from_functions(functions, 'coordinator', [0.0, 1.0]))


class CurrencyScaleTestCase(parameterized.TestCase):

    def setUp(self):
        FLAGS.mark_as_parsed()

    @parameterized.parameters(1e-3, 1e3, 1e6)
    def test_scenario1_is_scale_free(self, scale):
        unit = bargaining.solve_scenario1(_scaled_oracle(1.0), 0.1)
        scaled = bargaining.solve_scenario1(_scaled_oracle(scale), 0.1)
        self.assertEqual(unit.alpha, (1.0, 0.0))
        self.assertEqual(scaled.alpha, unit.alpha)
        np.testing.assert_allclose(scaled.theta, (0.75, 0.0), atol=1e-12)
        np.testing.assert_allclose(scaled.point.utilities,
                                   np.multiply(unit.point.utilities, scale),
                                   rtol=1e-9)

    @parameterized.parameters(1e-3, 1e3, 1e6)
    def test_scenario3_is_scale_free(self, scale):
        theta = (0.6, 0.95)
        unit = bargaining.solve_scenario3(_scaled_oracle(1.0), theta, 0.1)
        scaled = bargaining.solve_scenario3(_scaled_oracle(scale), theta, 0.1)
        self.assertEqual(unit.alpha, (1.0, 0.0))
        self.assertEqual(scaled.alpha, unit.alpha)
        self.assertEqual(scaled.ties, unit.ties)
        np.testing.assert_allclose(scaled.point.utilities,
                                   np.multiply(unit.point.utilities, scale),
                                   rtol=1e-9)
        self.assertAlmostEqual(scaled.point.nash_welfare / scale, 0.4)

    def test_scenario3_ranks_supports_by_nash_welfare(self):
        design = bargaining.solve_scenario3(_scaled_oracle(1e6), (0.6, 0.95),
                                            0.1)
        shared = game.utility_point(_scaled_oracle(1e6), (0.9, 0.1),
                                    (0.6, 0.95))
        # The raw product of the three-member split is larger at this scale.
        self.assertGreater(shared.nash_product, design.point.nash_product)
        self.assertGreater(design.point.nash_welfare, shared.nash_welfare)


class ReportTestCase(chex.TestCase):

    def test_design_to_dict_is_json_ready(self):
        design = bargaining.solve_scenario1(_linear(), 0.1)
        report = bargaining.design_to_dict(design, ['player_1'])
        json.dumps(report)
        self.assertEqual(report['scenario'], 1)
        self.assertEqual(report['alpha'], [1.0])
        self.assertAlmostEqual(report['maximin'], 20.0)
        self.assertAlmostEqual(report['nash_welfare'], 40.0)
        self.assertAlmostEqual(report['expense'], 80.0)
        self.assertEqual(report['players'], ['player_1'])

    def test_infeasible_design_report(self):
        oracle = _oracle(([0, 1], [0, 100]), ([0, 1], [0, 150]))
        report = bargaining.design_to_dict(
            bargaining.solve_scenario1(oracle, 0.1), ['player_1'])
        self.assertFalse(report['feasible'])
        self.assertNotIn('u_o', report)


if __name__ == '__main__':
    absltest.main()
