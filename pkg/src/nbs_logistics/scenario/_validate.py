"""Scenario validation."""

import math
from typing import List

from nbs_logistics import constants
from nbs_logistics.scenario import _types

_REQUIRED_COMMODITIES = (constants.PAYLOAD, constants.HYDROGEN,
                         constants.OXYGEN, constants.SPACECRAFT)


def _duplicates(ids: List[str]) -> List[str]:
    seen, duplicates = set(), []
    for item in ids:
        if item in seen and item not in duplicates:
            duplicates.append(item)
        seen.add(item)
    return duplicates


def _within_horizon(time: float, horizon: float) -> bool:
    return 0 <= time <= horizon


def validate_scenario(cfg: _types.ScenarioConfig) -> List[str]:
    """Checks every scenario invariant.

    Each diagnostic reads '<entity>: <violated invariant>'. The list is empty
    iff the scenario is valid.
    """
    diagnostics: List[str] = []
    node_ids = {node.id for node in cfg.nodes}
    commodity_ids = {commodity.id for commodity in cfg.commodities}
    player_ids = {player.id for player in cfg.players}
    horizon = cfg.time_grid.horizon
    step = cfg.time_grid.step

    for node_id in _duplicates([node.id for node in cfg.nodes]):
        diagnostics.append(f'node {node_id}: node ids are unique')
    for node in cfg.nodes:
        if node.kind not in constants.NODE_KINDS:
            diagnostics.append(f'node {node.id}: unknown kind {node.kind!r}')

    for arc in cfg.arcs:
        name = f'arc {arc.origin}->{arc.destination}'
        for end in (arc.origin, arc.destination):
            if end not in node_ids:
                diagnostics.append(f'{name}: unknown node {end!r}')
        if arc.kind not in constants.ARC_KINDS:
            diagnostics.append(f'{name}: unknown kind {arc.kind!r}')
        if not math.isfinite(arc.delta_v) or arc.delta_v < 0:
            diagnostics.append(f'{name}: delta_v is finite and >= 0')
        if arc.tof < 0:
            diagnostics.append(f'{name}: tof >= 0')
        if arc.kind == constants.HOLDOVER:
            if arc.origin != arc.destination:
                diagnostics.append(f'{name}: holdover arcs have from = to')
            if arc.delta_v != 0:
                diagnostics.append(f'{name}: holdover arcs have zero delta_v')
            if arc.tof not in (0, step):
                diagnostics.append(f'{name}: holdover arcs span one time step')
        elif arc.origin == arc.destination:
            diagnostics.append(f'{name}: {arc.kind} arcs have from != to')
    arc_keys = [(arc.origin, arc.destination) for arc in cfg.arcs]
    for origin, destination in _duplicates(arc_keys):
        diagnostics.append(
            f'arc {origin}->{destination}: at most one arc per node pair')

    for commodity_id in _duplicates([c.id for c in cfg.commodities]):
        diagnostics.append(
            f'commodity {commodity_id}: commodity ids are unique')
    for commodity in cfg.commodities:
        if commodity.domain not in (constants.CONTINUOUS, constants.DISCRETE):
            diagnostics.append(
                f'commodity {commodity.id}: exactly one domain of '
                f'continuous or discrete')
        if commodity.id == constants.SPACECRAFT and \
                commodity.domain != constants.DISCRETE:
            diagnostics.append(
                f'commodity {commodity.id}: spacecraft-unit is discrete')
        if commodity.id in _REQUIRED_COMMODITIES and not commodity.transportable:
            diagnostics.append(f'commodity {commodity.id}: is transportable')
    for commodity_id in _REQUIRED_COMMODITIES:
        if commodity_id not in commodity_ids:
            diagnostics.append(f'commodity {commodity_id}: must be declared')

    if len(cfg.spacecraft) != 1:
        diagnostics.append('spacecraft: exactly one spacecraft class')
    for spec in cfg.spacecraft:
        name = f'spacecraft {spec.id}'
        for field in ('dry_mass', 'propellant_capacity', 'isp',
                      'ox_fuel_ratio'):
            value = getattr(spec, field)
            if not math.isfinite(value) or value <= 0:
                diagnostics.append(f'{name}: {field} > 0')
        if not spec.payload_capacity > 0:
            diagnostics.append(f'{name}: payload_capacity > 0')
        if not math.isfinite(spec.unit_cost) or spec.unit_cost < 0:
            diagnostics.append(f'{name}: unit_cost >= 0')

    coordinators = [
        player.id for player in cfg.players
        if player.role == constants.COORDINATOR
    ]
    if len(coordinators) != 1:
        diagnostics.append(
            f'players: exactly one coordinator (found {len(coordinators)})')
    for player_id in _duplicates([player.id for player in cfg.players]):
        diagnostics.append(f'player {player_id}: player ids are unique')
    for player in cfg.players:
        name = f'player {player.id}'
        if player.role not in (constants.COORDINATOR, constants.COMMERCIAL):
            diagnostics.append(f'{name}: unknown role {player.role!r}')
        if player.fleet_per_mission < 0:
            diagnostics.append(f'{name}: fleet_per_mission >= 0')
        if not math.isfinite(player.isru_plant_mass) or \
                player.isru_plant_mass < 0:
            diagnostics.append(f'{name}: isru_plant_mass >= 0')
        if player.isru_plant_mass > 0 and player.isru_node not in node_ids:
            diagnostics.append(
                f'{name}: unknown isru_node {player.isru_node!r}')
        for index, entry in enumerate(player.own_demands):
            entity = f'{name} demand {index}'
            if entry.player != player.id:
                diagnostics.append(
                    f'{entity}: names player {entry.player!r}')
            if entry.commodity not in commodity_ids:
                diagnostics.append(
                    f'{entity}: unknown commodity {entry.commodity!r}')
            if entry.node not in node_ids:
                diagnostics.append(f'{entity}: unknown node {entry.node!r}')
            if entry.time is not None and not _within_horizon(
                    entry.time, horizon):
                diagnostics.append(
                    f'{entity}: time {entry.time} within horizon {horizon}')
            if math.isnan(entry.amount) or entry.amount == -math.inf:
                diagnostics.append(
                    f'{entity}: demands (negative amounts) are finite; only '
                    'supplies may be +inf')

    for field in ('launch_cost', 'spacecraft_unit_cost', 'flight_ops_cost',
                  'h2_price', 'o2_price'):
        value = getattr(cfg.cost_model, field)
        if not math.isfinite(value) or value < 0:
            diagnostics.append(f'cost_model: {field} >= 0')

    if step <= 0 or horizon <= 0:
        diagnostics.append('time_grid: step and horizon are positive')
    elif horizon % step:
        diagnostics.append(
            f'time_grid: horizon divisible by step ({horizon} % {step})')
    for index, window in enumerate(cfg.time_grid.mission_windows):
        entity = f'window {index} {window.origin}->{window.destination}'
        if (window.origin, window.destination) not in arc_keys:
            diagnostics.append(f'{entity}: window matches a declared arc')
        if window.player is not None and window.player not in player_ids:
            diagnostics.append(f'{entity}: unknown player {window.player!r}')
        if window.start > window.end:
            diagnostics.append(f'{entity}: start <= end')

    if not math.isfinite(cfg.deployment_demand_total) or \
            cfg.deployment_demand_total < 0:
        diagnostics.append('deployment: demand_total D >= 0')
    for end in (cfg.deployment_origin, cfg.deployment_destination):
        if end not in node_ids:
            diagnostics.append(f'deployment: unknown node {end!r}')
    for index, mission in enumerate(cfg.deployment_missions):
        entity = f'deployment mission {index}'
        if mission.release > mission.due:
            diagnostics.append(f'{entity}: release <= due')
        if not (_within_horizon(mission.release, horizon) and
                _within_horizon(mission.due, horizon)):
            diagnostics.append(f'{entity}: times within horizon {horizon}')

    if not math.isfinite(cfg.isru_productivity) or cfg.isru_productivity < 0:
        diagnostics.append('scenario: isru_productivity >= 0')
    if not 0 <= cfg.maintenance_rate <= 1:
        diagnostics.append('scenario: maintenance_rate in [0, 1]')
    if not cfg.maintenance_period > 0:
        diagnostics.append('scenario: maintenance_period > 0')
    return diagnostics
