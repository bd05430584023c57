"""Tests manager module."""
# pylint: disable=too-many-public-methods,missing-function-docstring
import os
import tempfile
import time

import chex
from absl.testing import absltest, flagsaver

import nbs_logistics
from nbs_logistics import costing, main, manager, scenario

FLAGS = main.FLAGS

TESTDATA = os.path.join(os.path.dirname(os.path.dirname(__file__)),
                        'testdata')


class ManagerCase(chex.TestCase):
    """Tests manager module."""

    def setUp(self):
        FLAGS.mark_as_parsed()

    @flagsaver.flagsaver(config='lunar_nominal', time_step=60)
    def test_load_config_applies_time_step(self):
        cfg = manager.load_config()
        self.assertEqual(cfg.name, 'lunar_nominal')
        self.assertEqual(cfg.time_grid.step, 60)

    @flagsaver.flagsaver(config='lunar_nominal', time_step=7)
    def test_load_config_rejects_uneven_time_step(self):
        with self.assertRaisesRegex(scenario.ConfigError, '--time_step=7'):
            manager.load_config()

    def test_floats(self):
        # pylint: disable=protected-access
        self.assertEqual(manager._floats('alpha', ['0.5', '1']), [0.5, 1.0])
        with self.assertRaisesRegex(manager.UsageError, '--alpha is required'):
            manager._floats('alpha', None)
        with self.assertRaises(manager.UsageError):
            manager._floats('alpha', ['half'])

    @flagsaver.flagsaver(out=None)
    def test_no_out_dir(self):
        self.assertIsNone(manager.prepare_out_dir(FLAGS))

    def test_write_manifest(self):
        cfg = scenario.load_scenario(os.path.join(TESTDATA,
                                                  'tiny_transfer.json'))
        costing.SOLVER_STATS.reset()
        with tempfile.TemporaryDirectory() as out_dir:
            manifest = manager.write_manifest(
                out_dir, 'baseline', cfg, FLAGS, time.time(),
                [os.path.join(out_dir, 'b.json'),
                 os.path.join(out_dir, 'a.csv')])
            self.assertTrue(
                os.path.isfile(os.path.join(out_dir, 'manifest.json')))
        self.assertEqual(manifest.tool_version, nbs_logistics.__version__)
        self.assertEqual(manifest.config_hash, scenario.config_hash(cfg))
        self.assertEqual(manifest.outputs, ['a.csv', 'b.json'])
        self.assertEqual(manifest.solver['solves'], 0)
        self.assertEqual(manifest.scenario['name'], 'tiny_transfer')

    def test_run_command_maps_usage_errors(self):
        self.assertEqual(manager.run_command(['prog'], FLAGS),
                         manager.EXIT_CONFIG)
        self.assertEqual(manager.run_command(['prog', 'curves'], FLAGS),
                         manager.EXIT_CONFIG)


if __name__ == '__main__':
    absltest.main()
