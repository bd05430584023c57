"""Identifiers shared across the scenario, formulation and game layers."""

# Commodities.
PAYLOAD = 'infrastructure-payload'
HYDROGEN = 'propellant-H2'
OXYGEN = 'propellant-O2'
WATER = 'water'
ISRU_PLANT = 'ISRU-plant'
SPARES = 'maintenance-spares'
SPACECRAFT = 'spacecraft-unit'

CONTINUOUS = 'continuous'
DISCRETE = 'discrete'

# Node kinds.
BODY_SURFACE = 'body-surface'
ORBIT = 'orbit'
LAGRANGE_POINT = 'lagrange-point'
NODE_KINDS = (BODY_SURFACE, ORBIT, LAGRANGE_POINT)

# Arc kinds.
TRANSPORT = 'transport'
HOLDOVER = 'holdover'
LAUNCH = 'launch'
ARC_KINDS = (TRANSPORT, HOLDOVER, LAUNCH)

# Player roles.
COORDINATOR = 'coordinator'
COMMERCIAL = 'commercial'

# Objective modes.
MIN_TOTAL_COST = 'min-total-cost'
MAX_WELFARE = 'max-welfare'

# Curve provenance.
MILP_EVALUATED = 'milp-evaluated'
USER_SUPPLIED = 'user-supplied'

SCHEMA_VERSION = 1
DAYS_PER_YEAR = 365.0
