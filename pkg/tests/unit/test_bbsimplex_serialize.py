"""Tests for LP-format output."""
# pylint: disable=missing-function-docstring, missing-class-docstring
import unittest

from absl.testing import absltest

import bbsimplex


class LpFormatTestCase(unittest.TestCase):

    def test_knapsack_text(self):
        builder = bbsimplex.ProblemBuilder('knapsack')
        builder.add_variable('x', integer=True, upper=4)
        builder.add_variable('y', integer=True, upper=4)
        builder.add_constraint({'x': 2, 'y': -3}, '<=', 12, name='weight')
        builder.set_objective({'x': 3, 'y': 1}, bbsimplex.MAXIMIZE, constant=1)
        self.assertEqual(
            bbsimplex.to_lp_format(builder.build()), '\\ Problem: knapsack\n'
            '\\ Objective offset: 1\n'
            'Maximize\n'
            ' obj: 3 x + y\n'
            'Subject To\n'
            ' weight: 2 x - 3 y <= 12\n'
            'Bounds\n'
            ' x <= 4\n'
            ' y <= 4\n'
            'General\n'
            ' x y\n'
            'End\n')

    def test_sanitize_names(self):
        self.assertEqual(
            bbsimplex.sanitize_names(['flow[LEO,1]', 'flow[LEO,1]', '2x', 'e1'],
                                     'x'),
            ['flow_LEO_1_', 'flow_LEO_1__1', 'x_2x', 'x_e1'])

    def test_long_rows_are_wrapped(self):
        builder = bbsimplex.ProblemBuilder()
        names = [f'variable_{j}' for j in range(60)]
        for name in names:
            builder.add_variable(name)
        builder.add_constraint({name: 1 for name in names}, '>=', 1)
        builder.set_objective({name: 1 for name in names})
        text = bbsimplex.to_lp_format(builder.build())
        self.assertTrue(all(len(line) < 255 for line in text.splitlines()))
        self.assertIn(' variable_59', text)


if __name__ == '__main__':
    absltest.main()
