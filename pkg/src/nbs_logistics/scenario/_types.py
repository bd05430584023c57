"""Declarative scenario types.

All types are frozen and safe to share across concurrent evaluations.
Infinite quantities use `math.inf`.
"""

import math
from typing import Optional, Tuple

import chex

from nbs_logistics import constants


class ConfigError(ValueError):
    """A scenario or sweep input could not be accepted.

    The message starts with the locus (file, line/column or field path).
    """

    def __init__(self, locus: str, message: str):
        super().__init__(f'{locus}: {message}')
        self.locus = locus
        self.detail = message


@chex.dataclass(frozen=True)
class NetworkNode:
    """A location: a body surface, an orbit or a Lagrange point."""
    id: str
    kind: str = constants.ORBIT


@chex.dataclass(frozen=True)
class NetworkArc:
    """A directed trajectory between two nodes.

    `delta_v` is in km/s and `tof` in whole days. Launch arcs are priced per
    kilogram and carry no rocket-equation accounting.
    """
    origin: str
    destination: str
    kind: str = constants.TRANSPORT
    delta_v: float = 0.0
    tof: int = 0
    launch_priced: bool = False


@chex.dataclass(frozen=True)
class Commodity:
    id: str
    domain: str = constants.CONTINUOUS
    transportable: bool = True


@chex.dataclass(frozen=True)
class SpacecraftSpec:
    """One spacecraft class. Masses in kg, isp in seconds."""
    id: str = 'lander'
    dry_mass: float = 6000.0
    propellant_capacity: float = 54000.0
    payload_capacity: float = math.inf
    isp: float = 420.0
    unit_cost: float = 148e6
    # O2:H2 mass ratio of the propellant burned.
    ox_fuel_ratio: float = 5.5


@chex.dataclass(frozen=True)
class DemandEntry:
    """A demand (negative amount) or supply (positive amount).

    `time` of None applies the entry at every grid point. Periodic entries
    are expanded into one entry per occurrence when a scenario is loaded.
    """
    player: str
    commodity: str
    node: str
    time: Optional[float]
    amount: float


@chex.dataclass(frozen=True)
class Player:
    """The coordinator or a commercial player.

    `fleet_per_mission` spacecraft become available at the deployment origin
    at every mission release. A positive `isru_plant_mass` places a plant at
    `isru_node` at time zero.
    """
    id: str
    role: str = constants.COMMERCIAL
    fleet_per_mission: int = 2
    isru_plant_mass: float = 0.0
    isru_node: Optional[str] = None
    own_demands: Tuple[DemandEntry, ...] = ()


@chex.dataclass(frozen=True)
class CostModel:
    """Currency per kg to LEO, per spacecraft, per flight and per kg of
    propellant."""
    launch_cost: float = 3500.0
    spacecraft_unit_cost: float = 148e6
    flight_ops_cost: float = 1e6
    h2_price: float = 5.94
    o2_price: float = 0.09


@chex.dataclass(frozen=True)
class Window:
    """An interval in which departures on an arc are allowed.

    `player` of None applies to every player.
    """
    origin: str
    destination: str
    start: float
    end: float
    player: Optional[str] = None


@chex.dataclass(frozen=True)
class TimeGrid:
    step: int = 30
    horizon: int = 720
    mission_windows: Tuple[Window, ...] = ()


@chex.dataclass(frozen=True)
class DeploymentMission:
    """The deployment payload is released at the origin at `release` and
    demanded at the destination at `due`."""
    release: float
    due: float


@chex.dataclass(frozen=True)
class ScenarioConfig:
    """Full declarative description of one campaign."""
    name: str
    nodes: Tuple[NetworkNode, ...]
    arcs: Tuple[NetworkArc, ...]
    commodities: Tuple[Commodity, ...]
    spacecraft: Tuple[SpacecraftSpec, ...]
    players: Tuple[Player, ...]
    cost_model: CostModel
    time_grid: TimeGrid
    deployment_missions: Tuple[DeploymentMission, ...]
    schema_version: int = constants.SCHEMA_VERSION
    # Per mission, kg.
    deployment_demand_total: float = 30000.0
    deployment_origin: str = 'Earth'
    deployment_destination: str = 'Moon'
    # kg water per year per kg plant.
    isru_productivity: float = 5.0
    # Fraction of plant mass per maintenance period.
    maintenance_rate: float = 0.05
    maintenance_period: float = 360.0
    retain_excess_o2: bool = False

    @property
    def coordinator(self) -> Player:
        for player in self.players:
            if player.role == constants.COORDINATOR:
                return player
        raise LookupError('Scenario has no coordinator.')

    @property
    def commercial_players(self) -> Tuple[Player, ...]:
        return tuple(player for player in self.players
                     if player.role == constants.COMMERCIAL)

    def player(self, player_id: str) -> Player:
        for player in self.players:
            if player.id == player_id:
                return player
        raise LookupError(f'Unknown player: {player_id}')

    def commodity(self, commodity_id: str) -> Commodity:
        for commodity in self.commodities:
            if commodity.id == commodity_id:
                return commodity
        raise LookupError(f'Unknown commodity: {commodity_id}')
