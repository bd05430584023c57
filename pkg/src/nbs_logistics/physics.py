"""Rocket equation, water electrolysis and maintenance rules."""

import math
from typing import Tuple

from nbs_logistics import constants

# Standard gravity, m/s^2.
G0 = 9.80665
# Mass fraction of hydrogen in water (H2:O2 = 1:8).
HYDROGEN_FRACTION = 1.0 / 9.0


def burn_fraction(delta_v: float, isp: float) -> float:
    """Fraction of the wet mass burned to achieve `delta_v` km/s."""
    if delta_v < 0 or isp <= 0:
        raise ValueError(
            f'Need delta_v >= 0 and isp > 0, got {delta_v} and {isp}.')
    return -math.expm1(-delta_v * 1000.0 / (G0 * isp))


def propellant_burn(wet_mass: float, delta_v: float, isp: float) -> float:
    """Propellant consumed by a burn, in kg.

    :param wet_mass: Mass before the burn in kg.
    :param delta_v: Velocity change in km/s.
    :param isp: Specific impulse in seconds.
    :return: wet_mass * (1 - exp(-delta_v / (g0 * isp))).
    """
    if wet_mass < 0:
        raise ValueError(f'Negative wet mass: {wet_mass}')
    return wet_mass * burn_fraction(delta_v, isp)


def water_yield(plant_mass: float, days: float, productivity: float) -> float:
    """kg of water a plant extracts over `days`."""
    return plant_mass * productivity * days / constants.DAYS_PER_YEAR


def isru_yield(plant_mass: float,
               days: float,
               productivity: float,
               ox_fuel_ratio: float = 5.5) -> Tuple[float, float, float]:
    """Electrolysis output of a plant.

    Water splits 1:8 into hydrogen and oxygen by mass. Oxygen beyond
    `ox_fuel_ratio` times the hydrogen cannot be burned and is reported as
    excess.

    Returns:
        (hydrogen, usable oxygen, excess oxygen) in kg.
    """
    water = water_yield(plant_mass, days, productivity)
    hydrogen = water * HYDROGEN_FRACTION
    oxygen = water - hydrogen
    usable = min(oxygen, ox_fuel_ratio * hydrogen)
    return hydrogen, usable, oxygen - usable


def maintenance_demand(plant_mass: float, rate: float) -> float:
    """Spares needed per maintenance period, in kg."""
    return plant_mass * rate
