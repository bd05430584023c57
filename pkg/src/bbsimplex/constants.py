"""Solver constants."""

OPTIMAL = 'optimal'
INFEASIBLE = 'infeasible'
UNBOUNDED = 'unbounded'
NODE_LIMIT = 'node_limit'
TIME_LIMIT = 'time_limit'
ITERATION_LIMIT = 'iteration_limit'

# Statuses where the search stopped before proving optimality or infeasibility.
LIMIT_STATUSES = (NODE_LIMIT, TIME_LIMIT, ITERATION_LIMIT)

MINIMIZE = 'minimize'
MAXIMIZE = 'maximize'

LESS_EQUAL = '<='
EQUAL = '='
GREATER_EQUAL = '>='
RELATIONS = (LESS_EQUAL, EQUAL, GREATER_EQUAL)
