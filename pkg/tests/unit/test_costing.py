"""Tests for mission cost evaluation."""
# pylint: disable=missing-function-docstring, missing-class-docstring
import math
import os

import numpy as np
from absl.testing import absltest, flagsaver

import bbsimplex
from nbs_logistics import constants, costing, formulation, main, scenario

FLAGS = main.FLAGS

TESTDATA = os.path.join(os.path.dirname(os.path.dirname(__file__)),
                        'testdata')

# Launch, one spacecraft, one flight and 1923.6 kg of propellant.
TINY_BASELINE = 180_234_512.83
# Extra payload and its propellant, launched on a flight that happens anyway.
TINY_PLAYER_COST = 4_462_073.3


def _load(name: str) -> scenario.ScenarioConfig:
    return scenario.load_scenario(os.path.join(TESTDATA, f'{name}.json'))


class CostingTestCase(absltest.TestCase):

    def setUp(self):
        FLAGS.mark_as_parsed()
        costing.SOLVER_STATS.reset()

    def test_tiny_baseline_cost(self):
        evaluation = costing.baseline_cost(_load('tiny_transfer'))
        self.assertTrue(evaluation.feasible)
        self.assertAlmostEqual(evaluation.cost, TINY_BASELINE, delta=10)

    def test_tiny_cost_components(self):
        evaluation = costing.baseline_cost(_load('tiny_transfer'))
        attribution = costing.attribute_costs(evaluation.formulation,
                                              evaluation.solution)
        components = attribution.components
        self.assertAlmostEqual(components['launch'], 31_232_608.46, delta=5)
        self.assertAlmostEqual(components['acquisition'], 148e6, delta=1e-3)
        self.assertAlmostEqual(components['flight_ops'], 1e6, delta=1e-3)
        self.assertAlmostEqual(components['propellant'], 1904.37, delta=0.05)
        self.assertAlmostEqual(attribution.total, evaluation.cost, delta=1e-3)
        self.assertEqual(list(attribution.per_player), ['coordinator'])
        self.assertAlmostEqual(
            sum(attribution.player_components['coordinator'].values()),
            attribution.per_player['coordinator'])

    def test_solution_passes_physics_rechecks(self):
        evaluation = costing.baseline_cost(_load('tiny_transfer'))
        self.assertTrue(
            bbsimplex.check_solution(evaluation.formulation.problem,
                                     evaluation.solution))
        self.assertEmpty(
            costing.check_mass_balance(evaluation.formulation,
                                       evaluation.solution))
        self.assertEmpty(
            costing.check_burns(evaluation.formulation, evaluation.solution))

    def test_mass_balance_recheck_flags_missing_payload(self):
        evaluation = costing.baseline_cost(_load('tiny_transfer'))
        form = evaluation.formulation
        x = evaluation.solution.x.copy()
        x[form.problem.variable_names.index(
            f'coordinator|lander|LEO|Moon|10|{constants.PAYLOAD}')] = 0.0
        violations = costing.check_mass_balance(
            form, evaluation.solution.replace(x=x))
        self.assertTrue(
            any(v.startswith(f'coordinator|Moon|20|{constants.PAYLOAD}')
                for v in violations))

    def test_flows(self):
        evaluation = costing.baseline_cost(_load('tiny_transfer'))
        flows = costing.flows_to_df(evaluation.formulation,
                                    evaluation.solution)
        self.assertEqual(list(flows.columns), list(costing.FLOW_COLUMNS))
        payload = flows[(flows['commodity'] == constants.PAYLOAD) &
                        (flows['from'] == 'LEO')]
        self.assertLen(payload, 1)
        self.assertAlmostEqual(payload['amount'].iloc[0], 1000.0, places=4)
        self.assertEqual(payload['t'].iloc[0], 10)

    def test_zero_share_costs_nothing(self):
        cfg = _load('tiny_transfer')
        self.assertEqual(costing.incremental_cost(cfg, 'coordinator', 0.0),
                         0.0)
        self.assertAlmostEqual(
            costing.player_cost(cfg, 'coordinator', 0.0).cost, 0.0)

    def test_zero_demand_costs_nothing(self):
        cfg = _load('tiny_transfer').replace(deployment_demand_total=0.0)
        for missions in (cfg.deployment_missions, ()):
            evaluation = costing.baseline_cost(
                cfg.replace(deployment_missions=missions))
            self.assertTrue(evaluation.feasible)
            self.assertAlmostEqual(evaluation.cost, 0.0, places=6)
            self.assertLess(
                float(np.max(np.abs(evaluation.solution.x), initial=0.0)),
                1e-9)
            flows = costing.flows_to_df(evaluation.formulation,
                                        evaluation.solution)
            self.assertTrue((flows['amount'].abs() < 1e-9).all())

    def test_mission_cost_of_coordinator_alone_is_baseline(self):
        cfg = _load('tiny_transfer')
        self.assertAlmostEqual(costing.mission_cost(cfg, ['coordinator'], ()),
                               TINY_BASELINE,
                               delta=10)

    def test_incremental_cost_excludes_own_missions(self):
        cfg = _load('tiny_two_player')
        own = costing.player_cost(cfg, 'player_1', 0.0)
        self.assertTrue(own.feasible)
        self.assertGreater(own.cost, 149e6)
        self.assertAlmostEqual(costing.incremental_cost(cfg, 'player_1', 1.0),
                               TINY_PLAYER_COST,
                               delta=10)
        self.assertAlmostEqual(costing.incremental_cost(cfg, 'player_1', 0.5),
                               TINY_PLAYER_COST / 2,
                               delta=10)

    def test_mission_cost_sums_players(self):
        cfg = _load('tiny_two_player')
        total = costing.mission_cost(cfg, ['coordinator', 'player_1'], [1.0])
        self.assertAlmostEqual(total, TINY_PLAYER_COST, delta=10)
        with self.assertRaises(ValueError):
            costing.mission_cost(cfg, ['coordinator'], [1.5])

    def test_mission_cost_grows_with_share(self):
        cfg = _load('tiny_two_player')
        alphas = [i / 50 for i in range(51)]
        costs = [
            costing.mission_cost(cfg, ['player_1'], [alpha])
            for alpha in alphas
        ]
        self.assertEqual(costs[0], 0.0)
        self.assertAlmostEqual(costs[-1], TINY_PLAYER_COST, delta=10)
        for alpha, before, after in zip(alphas[1:], costs, costs[1:]):
            self.assertGreaterEqual(after,
                                    before - 1e-6 * max(1.0, before),
                                    msg=f'alpha={alpha}')

    def test_coordinator_cost_shrinks_with_player_share(self):
        cfg = _load('tiny_two_player')
        costs = [
            costing.mission_cost(cfg, ['coordinator'], [i / 10])
            for i in range(11)
        ]
        self.assertAlmostEqual(costs[0], TINY_BASELINE, delta=10)
        self.assertEqual(costs[-1], 0.0)
        for before, after in zip(costs, costs[1:]):
            self.assertLessEqual(after, before + 1e-6 * max(1.0, before))

    def test_late_due_date_is_infeasible(self):
        cfg = _load('tiny_transfer')
        cfg = cfg.replace(deployment_missions=(scenario.DeploymentMission(
            release=0, due=10),))
        evaluation = costing.baseline_cost(cfg)
        self.assertFalse(evaluation.feasible)
        self.assertEqual(evaluation.cost, math.inf)
        self.assertEqual(costing.incremental_cost(cfg, 'coordinator', 1.0),
                         math.inf)

    def test_node_limit_raises(self):
        form = formulation.assemble_milp(_load('tiny_transfer'), ())
        with self.assertRaises(costing.SolverLimitError) as context:
            costing.solve(form.problem, bbsimplex.SolverOptions(node_limit=1))
        self.assertEqual(context.exception.solution.status,
                         bbsimplex.NODE_LIMIT)

    @flagsaver.flagsaver(node_limit=1)
    def test_node_limit_flag(self):
        self.assertEqual(costing.solver_options_from_flags().node_limit, 1)
        with self.assertRaises(costing.SolverLimitError):
            costing.baseline_cost(_load('tiny_transfer'))

    @flagsaver.flagsaver(milp_backend='highs')
    def test_highs_backend_matches(self):
        evaluation = costing.baseline_cost(_load('tiny_transfer'))
        self.assertAlmostEqual(evaluation.cost, TINY_BASELINE, delta=10)

    def test_solver_stats_count_solves(self):
        costing.baseline_cost(_load('tiny_transfer'))
        stats = costing.SOLVER_STATS.snapshot()
        self.assertEqual(stats['solves'], 1)
        self.assertGreaterEqual(stats['nodes'], 1)


if __name__ == '__main__':
    absltest.main()
