"""Scenario files: JSON load, serialization and hashing.

A scenario file is a JSON object. Every section except `name` is optional
and falls back to the cislunar defaults. Infinite amounts are written as the
strings "inf" and "-inf". Example:

    {
      "schema_version": 1,
      "name": "lunar_nominal",
      "deployment": {"demand_total": 30000, "origin": "Earth",
                     "destination": "Moon",
                     "missions": [{"release": 0, "due": 360}]},
      "players": [
        {"id": "coordinator", "role": "coordinator", "fleet_per_mission": 2,
         "own_demands": [{"commodity": "propellant-H2", "node": "Earth",
                          "time": null, "amount": "inf"}]}
      ]
    }
"""

import hashlib
import json
import math
import os
from typing import Any, Callable, Dict, List, Optional, Tuple

from nbs_logistics import constants
from nbs_logistics.scenario import _defaults, _grid, _types, _validate

_BUNDLED_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)),
                            'scenarios')


def bundled_scenarios() -> List[str]:
    """Names of the scenarios shipped with the package."""
    return sorted(
        os.path.splitext(name)[0] for name in os.listdir(_BUNDLED_DIR)
        if name.endswith('.json'))


def resolve_scenario_path(path_or_name: str) -> str:
    """Returns a readable file for a path or a bundled scenario name."""
    if os.path.isfile(path_or_name):
        return path_or_name
    bundled = os.path.join(_BUNDLED_DIR, f'{path_or_name}.json')
    if os.path.isfile(bundled):
        return bundled
    raise _types.ConfigError(
        path_or_name, 'no such file and no bundled scenario of that name '
        f'(bundled: {", ".join(bundled_scenarios())})')


class _Section:
    """Typed access to one JSON object, tracking the field path for errors."""

    def __init__(self, data: Any, path: str, source: str):
        if not isinstance(data, dict):
            raise _types.ConfigError(f'{source}: {path or "<root>"}',
                                     'expected an object')
        self._data = data
        self._path = path
        self._source = source
        self._seen = set()

    def locus(self, key: str) -> str:
        return f'{self._source}: {self._path}.{key}' if self._path else \
            f'{self._source}: {key}'

    def has(self, key: str) -> bool:
        return key in self._data

    def _get(self, key: str, default: Any, convert: Callable[[Any], Any],
             what: str) -> Any:
        self._seen.add(key)
        if key not in self._data:
            if default is _REQUIRED:
                raise _types.ConfigError(self.locus(key), 'missing field')
            return default
        value = self._data[key]
        try:
            return convert(value)
        except (TypeError, ValueError) as error:
            raise _types.ConfigError(self.locus(key),
                                     f'expected {what}, got {value!r}') from error

    def string(self, key: str, default: Any = None) -> Any:
        return self._get(key, default, _to_string, 'a string')

    def optional_string(self, key: str) -> Optional[str]:
        return self._get(key, None,
                         lambda v: None if v is None else _to_string(v),
                         'a string or null')

    def number(self, key: str, default: Any = None) -> Any:
        return self._get(key, default, _to_float, 'a number')

    def optional_number(self, key: str) -> Optional[float]:
        return self._get(key, None,
                         lambda v: None if v is None else _to_float(v),
                         'a number or null')

    def integer(self, key: str, default: Any = None) -> Any:
        return self._get(key, default, _to_int, 'an integer')

    def boolean(self, key: str, default: Any = None) -> Any:
        return self._get(key, default, _to_bool, 'true or false')

    def section(self, key: str) -> '_Section':
        self._seen.add(key)
        path = f'{self._path}.{key}' if self._path else key
        return _Section(self._data.get(key, {}), path, self._source)

    def sections(self, key: str) -> List['_Section']:
        self._seen.add(key)
        items = self._data[key]
        if not isinstance(items, list):
            raise _types.ConfigError(self.locus(key), 'expected a list')
        path = f'{self._path}.{key}' if self._path else key
        return [
            _Section(item, f'{path}[{index}]', self._source)
            for index, item in enumerate(items)
        ]

    def reject_unknown(self):
        unknown = sorted(set(self._data) - self._seen)
        if unknown:
            raise _types.ConfigError(self.locus(unknown[0]), 'unknown field')


_REQUIRED = object()


def _to_string(value: Any) -> str:
    if not isinstance(value, str):
        raise TypeError(value)
    return value


def _to_float(value: Any) -> float:
    if isinstance(value, bool):
        raise TypeError(value)
    if isinstance(value, str):
        if value.strip().lower() not in ('inf', '+inf', '-inf'):
            raise ValueError(value)
    result = float(value)
    if math.isnan(result):
        raise ValueError(value)
    return result


def _to_int(value: Any) -> int:
    if isinstance(value, bool) or float(value) != int(value):
        raise ValueError(value)
    return int(value)


def _to_bool(value: Any) -> bool:
    if not isinstance(value, bool):
        raise TypeError(value)
    return value


def _parse_demand(section: _Section, player_id: str,
                  horizon: int) -> Tuple[_types.DemandEntry, ...]:
    """One entry, or one per occurrence of a periodic entry."""
    owner = section.string('player', player_id)
    if owner != player_id:
        raise _types.ConfigError(
            section.locus('player'),
            f'entry listed under {player_id!r} names player {owner!r}')
    entry = _types.DemandEntry(player=player_id,
                               commodity=section.string('commodity', _REQUIRED),
                               node=section.string('node', _REQUIRED),
                               time=section.optional_number('time'),
                               amount=section.number('amount', _REQUIRED))
    every = section.optional_number('repeat_every')
    section.reject_unknown()
    if every is None:
        return (entry,)
    if not every > 0 or math.isinf(every):
        raise _types.ConfigError(section.locus('repeat_every'),
                                 'expected a positive number of days')
    if entry.time is None:
        raise _types.ConfigError(section.locus('repeat_every'),
                                 'a periodic entry needs a time')
    return _grid.repeated_entries(entry, every, horizon)


def _parse_player(section: _Section, horizon: int) -> _types.Player:
    player_id = section.string('id', _REQUIRED)
    demands = tuple(
        entry for demand in section.sections('own_demands')
        for entry in _parse_demand(demand, player_id, horizon)) if section.has(
            'own_demands') else ()
    player = _types.Player(id=player_id,
                           role=section.string('role', constants.COMMERCIAL),
                           fleet_per_mission=section.integer(
                               'fleet_per_mission', 2),
                           isru_plant_mass=section.number(
                               'isru_plant_mass', 0.0),
                           isru_node=section.optional_string('isru_node'),
                           own_demands=demands)
    section.reject_unknown()
    return player


def _parse_arc(section: _Section) -> _types.NetworkArc:
    kind = section.string('kind', constants.TRANSPORT)
    arc = _types.NetworkArc(origin=section.string('from', _REQUIRED),
                            destination=section.string('to', _REQUIRED),
                            kind=kind,
                            delta_v=section.number('delta_v', 0.0),
                            tof=section.integer('tof', 0),
                            launch_priced=section.boolean(
                                'launch_priced', kind == constants.LAUNCH))
    section.reject_unknown()
    return arc


def _parse_window(section: _Section) -> _types.Window:
    window = _types.Window(player=section.optional_string('player'),
                           origin=section.string('from', _REQUIRED),
                           destination=section.string('to', _REQUIRED),
                           start=section.number('start', _REQUIRED),
                           end=section.number('end', _REQUIRED))
    section.reject_unknown()
    return window


def _parse_spacecraft(section: _Section,
                      cost_model: _types.CostModel) -> _types.SpacecraftSpec:
    defaults = _types.SpacecraftSpec()
    spec = _types.SpacecraftSpec(
        id=section.string('id', defaults.id),
        dry_mass=section.number('dry_mass', defaults.dry_mass),
        propellant_capacity=section.number('propellant_capacity',
                                           defaults.propellant_capacity),
        payload_capacity=section.number('payload_capacity',
                                        defaults.payload_capacity),
        isp=section.number('isp', defaults.isp),
        unit_cost=section.number('unit_cost',
                                 cost_model.spacecraft_unit_cost),
        ox_fuel_ratio=section.number('ox_fuel_ratio', defaults.ox_fuel_ratio))
    section.reject_unknown()
    return spec


def _parse(root: _Section) -> _types.ScenarioConfig:
    version = root.integer('schema_version', constants.SCHEMA_VERSION)
    if version != constants.SCHEMA_VERSION:
        raise _types.ConfigError(
            root.locus('schema_version'),
            f'unsupported version {version}, expected '
            f'{constants.SCHEMA_VERSION}')
    name = root.string('name', _REQUIRED)

    cost_section = root.section('cost_model')
    defaults = _types.CostModel()
    cost_model = _types.CostModel(
        launch_cost=cost_section.number('launch_cost', defaults.launch_cost),
        spacecraft_unit_cost=cost_section.number(
            'spacecraft_unit_cost', defaults.spacecraft_unit_cost),
        flight_ops_cost=cost_section.number('flight_ops_cost',
                                            defaults.flight_ops_cost),
        h2_price=cost_section.number('h2_price', defaults.h2_price),
        o2_price=cost_section.number('o2_price', defaults.o2_price))
    cost_section.reject_unknown()

    if root.has('nodes'):
        nodes = []
        for section in root.sections('nodes'):
            nodes.append(
                _types.NetworkNode(id=section.string('id', _REQUIRED),
                                   kind=section.string('kind',
                                                       constants.ORBIT)))
            section.reject_unknown()
        nodes = tuple(nodes)
    else:
        nodes = _defaults.default_nodes()
    if root.has('arcs'):
        arcs = tuple(_parse_arc(section) for section in root.sections('arcs'))
    else:
        arcs = _defaults.default_arcs()
    if root.has('commodities'):
        commodities = []
        for section in root.sections('commodities'):
            commodities.append(
                _types.Commodity(id=section.string('id', _REQUIRED),
                                 domain=section.string('domain',
                                                       constants.CONTINUOUS),
                                 transportable=section.boolean(
                                     'transportable', True)))
            section.reject_unknown()
        commodities = tuple(commodities)
    else:
        commodities = _defaults.default_commodities()
    if root.has('spacecraft'):
        spacecraft = tuple(
            _parse_spacecraft(section, cost_model)
            for section in root.sections('spacecraft'))
    else:
        spacecraft = (_types.SpacecraftSpec(
            unit_cost=cost_model.spacecraft_unit_cost),)
    grid_section = root.section('time_grid')
    windows = tuple(
        _parse_window(section) for section in grid_section.sections(
            'mission_windows')) if grid_section.has('mission_windows') else ()
    time_grid = _types.TimeGrid(step=grid_section.integer('step', 30),
                                horizon=grid_section.integer('horizon', 720),
                                mission_windows=windows)
    grid_section.reject_unknown()

    if root.has('players'):
        players = tuple(
            _parse_player(section, time_grid.horizon)
            for section in root.sections('players'))
    else:
        players = _defaults.nominal_players()

    deployment = root.section('deployment')
    if deployment.has('missions'):
        missions = []
        for section in deployment.sections('missions'):
            missions.append(
                _types.DeploymentMission(
                    release=section.number('release', _REQUIRED),
                    due=section.number('due', _REQUIRED)))
            section.reject_unknown()
        missions = tuple(missions)
    else:
        missions = _defaults.default_missions()
    defaults = _types.ScenarioConfig(name=name,
                                     nodes=nodes,
                                     arcs=arcs,
                                     commodities=commodities,
                                     spacecraft=spacecraft,
                                     players=players,
                                     cost_model=cost_model,
                                     time_grid=time_grid,
                                     deployment_missions=missions)
    cfg = defaults.replace(
        schema_version=version,
        deployment_demand_total=deployment.number(
            'demand_total', defaults.deployment_demand_total),
        deployment_origin=deployment.string('origin',
                                            defaults.deployment_origin),
        deployment_destination=deployment.string(
            'destination', defaults.deployment_destination),
        isru_productivity=root.number('isru_productivity',
                                      defaults.isru_productivity),
        maintenance_rate=root.number('maintenance_rate',
                                     defaults.maintenance_rate),
        maintenance_period=root.number('maintenance_period',
                                       defaults.maintenance_period),
        retain_excess_o2=root.boolean('retain_excess_o2',
                                      defaults.retain_excess_o2))
    deployment.reject_unknown()
    root.reject_unknown()
    return cfg


def loads_scenario(text: str, source: str = '<string>') -> _types.ScenarioConfig:
    """Parses and validates scenario JSON text.

    Raises:
        ConfigError: on a syntax error (with line and column), a malformed
            field (with its path) or any validation diagnostic.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise _types.ConfigError(f'{source}:{error.lineno}:{error.colno}',
                                 error.msg) from error
    cfg = _parse(_Section(data, '', source))
    diagnostics = _validate.validate_scenario(cfg)
    if diagnostics:
        raise _types.ConfigError(source, '; '.join(diagnostics))
    return cfg


def load_scenario(path_or_name: str) -> _types.ScenarioConfig:
    """Loads a scenario from a file path or a bundled scenario name."""
    path = resolve_scenario_path(path_or_name)
    try:
        with open(path, 'rt', encoding='utf-8') as file:
            text = file.read()
    except OSError as error:
        raise _types.ConfigError(path, str(error)) from error
    return loads_scenario(text, path)


def _number(value: float) -> Any:
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return value


def _demand_dict(entry: _types.DemandEntry) -> Dict[str, Any]:
    return {
        'commodity': entry.commodity,
        'node': entry.node,
        'time': entry.time,
        'amount': _number(entry.amount),
    }


def scenario_to_dict(cfg: _types.ScenarioConfig) -> Dict[str, Any]:
    """Every field of the scenario, defaults included."""
    return {
        'schema_version': cfg.schema_version,
        'name': cfg.name,
        'nodes': [{
            'id': node.id,
            'kind': node.kind
        } for node in cfg.nodes],
        'arcs': [{
            'from': arc.origin,
            'to': arc.destination,
            'kind': arc.kind,
            'delta_v': arc.delta_v,
            'tof': arc.tof,
            'launch_priced': arc.launch_priced,
        } for arc in cfg.arcs],
        'commodities': [{
            'id': commodity.id,
            'domain': commodity.domain,
            'transportable': commodity.transportable,
        } for commodity in cfg.commodities],
        'spacecraft': [{
            'id': spec.id,
            'dry_mass': spec.dry_mass,
            'propellant_capacity': spec.propellant_capacity,
            'payload_capacity': _number(spec.payload_capacity),
            'isp': spec.isp,
            'unit_cost': spec.unit_cost,
            'ox_fuel_ratio': spec.ox_fuel_ratio,
        } for spec in cfg.spacecraft],
        'players': [{
            'id': player.id,
            'role': player.role,
            'fleet_per_mission': player.fleet_per_mission,
            'isru_plant_mass': player.isru_plant_mass,
            'isru_node': player.isru_node,
            'own_demands': [_demand_dict(entry) for entry in player.own_demands],
        } for player in cfg.players],
        'cost_model': {
            'launch_cost': cfg.cost_model.launch_cost,
            'spacecraft_unit_cost': cfg.cost_model.spacecraft_unit_cost,
            'flight_ops_cost': cfg.cost_model.flight_ops_cost,
            'h2_price': cfg.cost_model.h2_price,
            'o2_price': cfg.cost_model.o2_price,
        },
        'time_grid': {
            'step': cfg.time_grid.step,
            'horizon': cfg.time_grid.horizon,
            'mission_windows': [{
                'player': window.player,
                'from': window.origin,
                'to': window.destination,
                'start': window.start,
                'end': window.end,
            } for window in cfg.time_grid.mission_windows],
        },
        'deployment': {
            'demand_total': cfg.deployment_demand_total,
            'origin': cfg.deployment_origin,
            'destination': cfg.deployment_destination,
            'missions': [{
                'release': mission.release,
                'due': mission.due
            } for mission in cfg.deployment_missions],
        },
        'isru_productivity': cfg.isru_productivity,
        'maintenance_rate': cfg.maintenance_rate,
        'maintenance_period': cfg.maintenance_period,
        'retain_excess_o2': cfg.retain_excess_o2,
    }


def serialize_scenario(cfg: _types.ScenarioConfig) -> str:
    """JSON text that loads back to an equal scenario."""
    return json.dumps(scenario_to_dict(cfg), indent=2) + '\n'


def config_hash(cfg: _types.ScenarioConfig) -> str:
    """SHA-256 of the serialized scenario."""
    return hashlib.sha256(serialize_scenario(cfg).encode('utf-8')).hexdigest()


def with_time_step(cfg: _types.ScenarioConfig,
                   step: int) -> _types.ScenarioConfig:
    """The scenario on a coarser or finer time grid."""
    return cfg.replace(time_grid=cfg.time_grid.replace(step=int(step)))
