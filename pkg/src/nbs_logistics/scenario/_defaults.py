"""Default cislunar network and campaign parameters.

The network numbers are assumptions: LEO-EML1 at 3.77 km/s over 5 days and
EML1-Moon at 2.52 km/s over 3 days, with a per-kg launch arc from Earth to
LEO. Every value can be overridden in the scenario file.
"""

import math
from typing import Tuple

from nbs_logistics import constants
from nbs_logistics.scenario import _types


def default_nodes() -> Tuple[_types.NetworkNode, ...]:
    return (
        _types.NetworkNode(id='Earth', kind=constants.BODY_SURFACE),
        _types.NetworkNode(id='LEO', kind=constants.ORBIT),
        _types.NetworkNode(id='EML1', kind=constants.LAGRANGE_POINT),
        _types.NetworkNode(id='Moon', kind=constants.BODY_SURFACE),
    )


def default_arcs() -> Tuple[_types.NetworkArc, ...]:
    arcs = [
        _types.NetworkArc(origin='Earth',
                          destination='LEO',
                          kind=constants.LAUNCH,
                          delta_v=0.0,
                          tof=1,
                          launch_priced=True),
    ]
    for origin, destination, delta_v, tof in (('LEO', 'EML1', 3.77, 5),
                                              ('EML1', 'LEO', 3.77, 5),
                                              ('EML1', 'Moon', 2.52, 3),
                                              ('Moon', 'EML1', 2.52, 3)):
        arcs.append(
            _types.NetworkArc(origin=origin,
                              destination=destination,
                              kind=constants.TRANSPORT,
                              delta_v=delta_v,
                              tof=tof))
    return tuple(arcs) + holdover_arcs(default_nodes())


def holdover_arcs(
    nodes: Tuple[_types.NetworkNode, ...]
) -> Tuple[_types.NetworkArc, ...]:
    """One holdover arc per node."""
    return tuple(
        _types.NetworkArc(origin=node.id,
                          destination=node.id,
                          kind=constants.HOLDOVER) for node in nodes)


def default_commodities() -> Tuple[_types.Commodity, ...]:
    return (
        _types.Commodity(id=constants.PAYLOAD),
        _types.Commodity(id=constants.HYDROGEN),
        _types.Commodity(id=constants.OXYGEN),
        _types.Commodity(id=constants.WATER),
        _types.Commodity(id=constants.ISRU_PLANT, transportable=False),
        _types.Commodity(id=constants.SPARES),
        _types.Commodity(id=constants.SPACECRAFT, domain=constants.DISCRETE),
    )


def default_missions() -> Tuple[_types.DeploymentMission, ...]:
    return (_types.DeploymentMission(release=0, due=360),
            _types.DeploymentMission(release=360, due=720))


def open_supplies(player_id: str,
                  commodities: Tuple[str, ...],
                  node: str = 'Earth') -> Tuple[_types.DemandEntry, ...]:
    """Unlimited supplies of `commodities` at `node` at every grid point."""
    return tuple(
        _types.DemandEntry(player=player_id,
                           commodity=commodity,
                           node=node,
                           time=None,
                           amount=math.inf) for commodity in commodities)


def nominal_players() -> Tuple[_types.Player, ...]:
    """The coordinator plus one commercial player with a 10 t lunar plant."""
    return (
        _types.Player(id='coordinator',
                      role=constants.COORDINATOR,
                      fleet_per_mission=2,
                      own_demands=open_supplies(
                          'coordinator',
                          (constants.HYDROGEN, constants.OXYGEN))),
        _types.Player(id='player_1',
                      role=constants.COMMERCIAL,
                      fleet_per_mission=2,
                      isru_plant_mass=10000.0,
                      isru_node='Moon',
                      own_demands=open_supplies(
                          'player_1', (constants.HYDROGEN, constants.OXYGEN,
                                       constants.SPARES))),
    )


def nominal_scenario() -> _types.ScenarioConfig:
    return _types.ScenarioConfig(name='lunar_nominal',
                                 nodes=default_nodes(),
                                 arcs=default_arcs(),
                                 commodities=default_commodities(),
                                 spacecraft=(_types.SpacecraftSpec(),),
                                 players=nominal_players(),
                                 cost_model=_types.CostModel(),
                                 time_grid=_types.TimeGrid(),
                                 deployment_missions=default_missions())
