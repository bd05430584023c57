"""Translates a scenario and a participation vector into the logistics MILP.

Each player owns an independent copy of the time-expanded network. Flow
variables are named `player|vehicle|from|to|t|commodity`. The mass balance
at every (player, node, t, commodity) reads

    outflow - delivered inflow <= net supply,

where delivered inflow applies the commodity transformations of the edge:
the rocket equation on transport edges and water electrolysis on holdovers
at a player's ISRU node. Players are only coupled through the deployment
split, either fixed or declared as `alpha|<player>` variables.
"""

import collections
import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import chex
import numpy as np

import bbsimplex
from nbs_logistics import constants, logger, physics, scenario

ALPHA_TOLERANCE = 1e-9
COMPONENTS = ('launch', 'acquisition', 'flight_ops', 'propellant')

BalanceKey = Tuple[str, str, int, str]
EdgeKey = Tuple[str, str, str, int]


@chex.dataclass(frozen=True)
class FlowVariableKey:
    player: str
    vehicle: str
    origin: str
    destination: str
    time: int
    commodity: str


def variable_name(key: FlowVariableKey) -> str:
    return (f'{key.player}|{key.vehicle}|{key.origin}|{key.destination}|'
            f'{key.time}|{key.commodity}')


def alpha_variable_name(player_id: str) -> str:
    return f'alpha|{player_id}'


@chex.dataclass(frozen=True)
class Formulation:
    """An assembled problem plus the bookkeeping needed to interpret it.

    Columns `0..len(flow_keys)-1` are flows in `flow_keys` order; the
    participation columns in `alpha_columns` follow. Balance keys are
    (player, node, t, commodity); edge keys are (player, from, to, t).
    """
    problem: bbsimplex.MilpProblem
    config: scenario.ScenarioConfig
    players: Tuple[str, ...]
    objective_mode: str
    # None when the split is a decision variable.
    alpha: Optional[Tuple[float, ...]]
    flow_keys: Tuple[FlowVariableKey, ...]
    alpha_columns: Dict[str, int]
    column_players: Tuple[str, ...]
    component_costs: Dict[str, np.ndarray]
    # Constant part of the net supply; +inf rows are absent from the problem.
    net_supply: Dict[BalanceKey, float]
    # Coefficients of alpha_k in the net supply, in alpha-variable mode.
    alpha_supply: Dict[BalanceKey, Dict[str, float]]
    balance_rows: Dict[BalanceKey, int]
    burn_rows: Dict[EdgeKey, Tuple[int, int]]
    objective_offset: float

    @property
    def cost_vector(self) -> np.ndarray:
        return sum(self.component_costs.values())


def check_alpha(cfg: scenario.ScenarioConfig, alpha: Sequence[float]):
    """Raises ValueError unless alpha lies in the participation simplex."""
    num_players = len(cfg.commercial_players)
    if len(alpha) != num_players:
        raise ValueError(f'Expected {num_players} participation values, '
                         f'got {len(alpha)}.')
    for value in alpha:
        if not math.isfinite(value) or value < -ALPHA_TOLERANCE or \
                value > 1 + ALPHA_TOLERANCE:
            raise ValueError(f'Participation {value} outside [0, 1].')
    if sum(alpha) > 1 + ALPHA_TOLERANCE:
        raise ValueError(f'Participation sums to {sum(alpha)} > 1.')


def player_shares(cfg: scenario.ScenarioConfig,
                  alpha: Sequence[float]) -> Dict[str, float]:
    """Fraction of the deployment demand each player carries."""
    check_alpha(cfg, alpha)
    alpha = [min(1.0, max(0.0, float(value))) for value in alpha]
    shares = {cfg.coordinator.id: max(0.0, 1.0 - sum(alpha))}
    for player, value in zip(cfg.commercial_players, alpha):
        shares[player.id] = value
    return shares


def generated_entries(cfg: scenario.ScenarioConfig,
                      player: scenario.Player) -> List[scenario.DemandEntry]:
    """Plant placement, maintenance spares and fleet deliveries."""
    entries = []
    if player.isru_plant_mass > 0:
        entries.append(
            scenario.DemandEntry(player=player.id,
                                 commodity=constants.ISRU_PLANT,
                                 node=player.isru_node,
                                 time=0.0,
                                 amount=player.isru_plant_mass))
        spares = physics.maintenance_demand(player.isru_plant_mass,
                                            cfg.maintenance_rate)
        if spares > 0 and cfg.maintenance_period <= cfg.time_grid.horizon:
            entries.extend(
                scenario.repeated_entries(
                    scenario.DemandEntry(player=player.id,
                                         commodity=constants.SPARES,
                                         node=player.isru_node,
                                         time=cfg.maintenance_period,
                                         amount=-spares),
                    cfg.maintenance_period, cfg.time_grid.horizon))
    if player.fleet_per_mission > 0:
        for mission in cfg.deployment_missions:
            entries.append(
                scenario.DemandEntry(player=player.id,
                                     commodity=constants.SPACECRAFT,
                                     node=cfg.deployment_origin,
                                     time=mission.release,
                                     amount=float(player.fleet_per_mission)))
    return entries


def deployment_entries(cfg: scenario.ScenarioConfig, player_id: str,
                       share: float) -> List[scenario.DemandEntry]:
    """Payload released at the origin and demanded at the destination, per
    mission."""
    if share <= 0 or cfg.deployment_demand_total <= 0:
        return []
    amount = share * cfg.deployment_demand_total
    entries = []
    for mission in cfg.deployment_missions:
        entries.append(
            scenario.DemandEntry(player=player_id,
                                 commodity=constants.PAYLOAD,
                                 node=cfg.deployment_origin,
                                 time=mission.release,
                                 amount=amount))
        entries.append(
            scenario.DemandEntry(player=player_id,
                                 commodity=constants.PAYLOAD,
                                 node=cfg.deployment_destination,
                                 time=mission.due,
                                 amount=-amount))
    return entries


def inject_alpha_demand(
        cfg: scenario.ScenarioConfig,
        alpha: Sequence[float]) -> Dict[str, Tuple[scenario.DemandEntry, ...]]:
    """Every player's demand entries with the deployment split applied.

    The coordinator carries (1 - sum(alpha)) of the deployment demand per
    mission and commercial player k carries alpha[k]. Own demands are
    unchanged.

    Raises:
        ValueError: alpha is outside the participation simplex.
    """
    shares = player_shares(cfg, alpha)
    return {
        player.id:
        tuple(player.own_demands) + tuple(generated_entries(cfg, player)) +
        tuple(deployment_entries(cfg, player.id, shares[player.id]))
        for player in cfg.players
    }


def grid_amounts(entry: scenario.DemandEntry,
                 cfg: scenario.ScenarioConfig) -> List[Tuple[int, float]]:
    """Places an entry on the grid as (time, amount) pairs."""
    step = cfg.time_grid.step
    horizon = cfg.time_grid.horizon
    if entry.time is None:
        return [(t, entry.amount) for t in range(0, horizon + 1, step)]
    return [(scenario.demand_grid_time(entry.time, entry.amount,
                                       step), entry.amount)]


def _net_supply(entries, cfg) -> Dict[Tuple[str, int, str], float]:
    supply = collections.defaultdict(float)
    for entry in entries:
        for time, amount in grid_amounts(entry, cfg):
            supply[(entry.node, time, entry.commodity)] += amount
    return dict(supply)


def _active_commodities(cfg: scenario.ScenarioConfig, player: scenario.Player,
                        entries, alpha_variables: bool) -> List[str]:
    active = {entry.commodity for entry in entries if entry.amount != 0}
    if player.fleet_per_mission > 0:
        active |= {constants.HYDROGEN, constants.OXYGEN, constants.SPACECRAFT}
    if player.isru_plant_mass > 0:
        active |= {constants.HYDROGEN, constants.OXYGEN}
    if alpha_variables:
        active.add(constants.PAYLOAD)
    return [c.id for c in cfg.commodities if c.id in active]


def _launch_costs(cfg: scenario.ScenarioConfig, commodity: str,
                  spec: scenario.SpacecraftSpec) -> Dict[str, float]:
    model = cfg.cost_model
    if commodity == constants.SPACECRAFT:
        return {
            'launch': model.launch_cost * spec.dry_mass,
            'acquisition': spec.unit_cost
        }
    price = {
        constants.HYDROGEN: model.h2_price,
        constants.OXYGEN: model.o2_price
    }.get(commodity, 0.0)
    return {'launch': model.launch_cost, 'propellant': price}


class _Assembler:
    """Accumulates one player's columns and rows into a shared builder."""

    def __init__(self, cfg: scenario.ScenarioConfig,
                 builder: bbsimplex.ProblemBuilder):
        self.cfg = cfg
        self.builder = builder
        self.spec = cfg.spacecraft[0]
        self.flow_keys: List[FlowVariableKey] = []
        self.column_players: List[str] = []
        self.costs: Dict[str, List[float]] = {c: [] for c in COMPONENTS}
        self.balances: Dict[BalanceKey, Dict[str, float]] = {}
        self.burn_rows: Dict[EdgeKey, Tuple[int, int]] = {}

    def _balance(self, key: BalanceKey) -> Dict[str, float]:
        if key not in self.balances:
            self.balances[key] = collections.defaultdict(float)
        return self.balances[key]

    def _add_column(self, key: FlowVariableKey, integer: bool,
                    upper: Optional[float], costs: Mapping[str, float]) -> str:
        name = variable_name(key)
        self.builder.add_variable(name, integer=integer, upper=upper)
        self.flow_keys.append(key)
        self.column_players.append(key.player)
        for component in COMPONENTS:
            self.costs[component].append(costs.get(component, 0.0))
        return name

    def add_player(self, player: scenario.Player, entries,
                   alpha_variables: bool):
        cfg = self.cfg
        spec = self.spec
        network = scenario.expand_time_grid(cfg, player.id)
        supply = _net_supply(entries, cfg)
        active = _active_commodities(cfg, player, entries, alpha_variables)
        # Non-transportable commodities only hold over where they appear.
        stationary_nodes = {
            commodity: {node for node, _, c in supply if c == commodity}
            for commodity in active
            if not cfg.commodity(commodity).transportable
        }
        ratio = spec.ox_fuel_ratio
        hydrogen_yield = (cfg.isru_productivity * cfg.time_grid.step /
                          constants.DAYS_PER_YEAR * physics.HYDROGEN_FRACTION)
        oxygen_factor = 8.0 if cfg.retain_excess_o2 else min(8.0, ratio)

        for edge in network.edges:
            priced = edge.arc.launch_priced
            holdover = edge.kind == constants.HOLDOVER
            transport = not holdover and not priced
            if transport and player.fleet_per_mission <= 0:
                continue
            columns: Dict[str, str] = {}
            for commodity_id in active:
                commodity = cfg.commodity(commodity_id)
                if not commodity.transportable and (
                        not holdover or
                        edge.origin not in stationary_nodes[commodity_id]):
                    continue
                key = FlowVariableKey(player=player.id,
                                      vehicle=spec.id,
                                      origin=edge.origin,
                                      destination=edge.destination,
                                      time=edge.departure,
                                      commodity=commodity_id)
                is_count = commodity_id == constants.SPACECRAFT
                if priced:
                    costs = _launch_costs(cfg, commodity_id, spec)
                elif transport and is_count:
                    costs = {'flight_ops': cfg.cost_model.flight_ops_cost}
                else:
                    costs = {}
                integer = commodity.domain == constants.DISCRETE and (
                    transport or not is_count)
                upper = float(player.fleet_per_mission) if (
                    transport and is_count) else None
                columns[commodity_id] = self._add_column(
                    key, integer, upper, costs)
            if not columns:
                continue
            for commodity_id, name in columns.items():
                self._balance((player.id, edge.origin, edge.departure,
                               commodity_id))[name] += 1.0
            arrival = (player.id, edge.destination, edge.arrival)
            if transport:
                self._add_transport(player, edge, columns, arrival)
            else:
                for commodity_id, name in columns.items():
                    self._balance(arrival + (commodity_id,))[name] -= 1.0
            plant = columns.get(constants.ISRU_PLANT)
            if holdover and plant and edge.origin == player.isru_node:
                self._balance(arrival + (constants.HYDROGEN,))[plant] -= \
                    hydrogen_yield
                self._balance(arrival + (constants.OXYGEN,))[plant] -= \
                    oxygen_factor * hydrogen_yield
        return supply

    def _add_transport(self, player: scenario.Player,
                       edge: scenario.TimedEdge, columns: Dict[str, str],
                       arrival: Tuple[str, str, int]):
        spec = self.spec
        ratio = spec.ox_fuel_ratio
        fraction = physics.burn_fraction(edge.arc.delta_v, spec.isp)
        count = columns[constants.SPACECRAFT]
        hydrogen = columns[constants.HYDROGEN]
        oxygen = columns[constants.OXYGEN]
        wet_mass = {count: spec.dry_mass}
        for commodity_id, name in columns.items():
            if commodity_id != constants.SPACECRAFT:
                wet_mass[name] = 1.0
        burn_h2 = {name: fraction / (1 + ratio) * mass
                   for name, mass in wet_mass.items()}
        burn_o2 = {name: fraction * ratio / (1 + ratio) * mass
                   for name, mass in wet_mass.items()}

        for commodity_id, name in columns.items():
            row = self._balance(arrival + (commodity_id,))
            row[name] -= 1.0
            burn = {constants.HYDROGEN: burn_h2,
                    constants.OXYGEN: burn_o2}.get(commodity_id)
            if burn:
                for burn_name, coef in burn.items():
                    row[burn_name] += coef

        tag = f'{player.id}|{edge.origin}|{edge.destination}|{edge.departure}'
        h2_row = dict(burn_h2)
        h2_row[hydrogen] = h2_row.get(hydrogen, 0.0) - 1.0
        o2_row = dict(burn_o2)
        o2_row[oxygen] = o2_row.get(oxygen, 0.0) - 1.0
        rows = (self.builder.add_constraint(h2_row, '<=', 0.0,
                                            f'burn_h2|{tag}'),
                self.builder.add_constraint(o2_row, '<=', 0.0,
                                            f'burn_o2|{tag}'))
        self.burn_rows[(player.id, edge.origin, edge.destination,
                        edge.departure)] = rows
        self.builder.add_constraint(
            {
                hydrogen: 1.0,
                oxygen: 1.0,
                count: -spec.propellant_capacity
            }, '<=', 0.0, f'tank|{tag}')
        if math.isfinite(spec.payload_capacity):
            cargo = {
                name: 1.0
                for commodity_id, name in columns.items()
                if commodity_id not in (constants.SPACECRAFT,
                                        constants.HYDROGEN, constants.OXYGEN)
            }
            cargo[count] = -spec.payload_capacity
            self.builder.add_constraint(cargo, '<=', 0.0, f'cargo|{tag}')


def assemble_milp(cfg: scenario.ScenarioConfig,
                  alpha: Optional[Sequence[float]],
                  objective_mode: str = constants.MIN_TOTAL_COST,
                  players: Optional[Sequence[str]] = None,
                  budget: Optional[float] = None,
                  alpha_variables: bool = False,
                  shares: Optional[Mapping[str, float]] = None) -> Formulation:
    """Builds the logistics MILP.

    Args:
        cfg: A valid scenario.
        alpha: Participation of each commercial player, in scenario order.
            Ignored when `alpha_variables` is set.
        objective_mode: `min-total-cost` minimizes the summed cost;
            `max-welfare` maximizes `budget - cost` subject to
            `cost <= budget`.
        players: Player ids to include; defaults to all.
        budget: Baseline cost plus the included commercial players' own
            mission costs. Required in max-welfare mode.
        alpha_variables: Declares the split as continuous variables in the
            participation simplex instead of fixing it.
        shares: Deployment fraction per included player, used instead of
            `alpha` to cost one player at a given assignment.

    Returns:
        The formulation. Structurally impossible demands show up as an
        infeasible problem, not as an error.
    """
    if objective_mode not in (constants.MIN_TOTAL_COST, constants.MAX_WELFARE):
        raise ValueError(f'Unknown objective mode: {objective_mode}')
    if objective_mode == constants.MAX_WELFARE and budget is None:
        raise ValueError('The max-welfare objective needs a budget.')
    if players is None:
        players = [player.id for player in cfg.players]
    players = tuple(players)
    commercial = [p.id for p in cfg.commercial_players]
    if alpha_variables:
        shares = {player_id: 0.0 for player_id in players}
        alpha = None
    elif shares is not None:
        alpha = None if alpha is None else tuple(map(float, alpha))
        shares = {player_id: float(shares[player_id]) for player_id in players}
    else:
        alpha = tuple(float(value) for value in alpha)
        shares = player_shares(cfg, alpha)

    builder = bbsimplex.ProblemBuilder(
        f'{cfg.name}|{"+".join(players)}|{objective_mode}')
    assembler = _Assembler(cfg, builder)
    net_supply: Dict[BalanceKey, float] = {}
    alpha_supply: Dict[BalanceKey, Dict[str, float]] = {}
    for player_id in players:
        player = cfg.player(player_id)
        entries = list(player.own_demands) + generated_entries(cfg, player)
        entries += deployment_entries(cfg, player_id, shares[player_id])
        supply = assembler.add_player(player, entries, alpha_variables)
        for (node, time, commodity), amount in supply.items():
            net_supply[(player_id, node, time, commodity)] = amount

    alpha_columns: Dict[str, int] = {}
    if alpha_variables:
        participants = [k for k in commercial if k in players]
        for player_id in participants:
            alpha_columns[player_id] = builder.add_variable(
                alpha_variable_name(player_id), upper=1.0)
        if participants:
            builder.add_constraint(
                {alpha_variable_name(k): 1.0 for k in participants}, '<=',
                1.0, 'alpha_simplex')
        total = cfg.deployment_demand_total
        coordinator = cfg.coordinator.id
        for player_id in players:
            for entry in deployment_entries(cfg, player_id, 1.0):
                sign = math.copysign(total, entry.amount)
                for time, _ in grid_amounts(entry, cfg):
                    key = (player_id, entry.node, time, entry.commodity)
                    terms = alpha_supply.setdefault(key, {})
                    if player_id == coordinator:
                        net_supply[key] = net_supply.get(key, 0.0) + sign
                        for k in participants:
                            terms[k] = terms.get(k, 0.0) - sign
                    elif player_id in participants:
                        terms[player_id] = terms.get(player_id, 0.0) + sign

    balance_rows: Dict[BalanceKey, int] = {}
    for key in sorted(set(assembler.balances) | set(net_supply)
                      | set(alpha_supply)):
        rhs = net_supply.get(key, 0.0)
        if math.isinf(rhs):
            continue
        expression = dict(assembler.balances.get(key, {}))
        for player_id, coef in alpha_supply.get(key, {}).items():
            name = alpha_variable_name(player_id)
            expression[name] = expression.get(name, 0.0) - coef
        expression = {name: coef for name, coef in expression.items() if coef}
        if not expression and rhs >= 0:
            continue
        balance_rows[key] = builder.add_constraint(
            expression, '<=', rhs, 'balance|' + '|'.join(map(str, key)))

    num_columns = builder.num_variables
    component_costs = {}
    for component, values in assembler.costs.items():
        vector = np.zeros(num_columns)
        vector[:len(values)] = values
        component_costs[component] = vector
    cost = sum(component_costs.values())
    names = [variable_name(key) for key in assembler.flow_keys]
    cost_expression = {
        name: float(value) for name, value in zip(names, cost) if value
    }
    offset = 0.0
    if objective_mode == constants.MAX_WELFARE:
        offset = float(budget)
        builder.add_constraint(cost_expression, '<=', offset, 'budget')
        builder.set_objective({n: -c for n, c in cost_expression.items()},
                              bbsimplex.MAXIMIZE, constant=offset)
    else:
        builder.set_objective(cost_expression, bbsimplex.MINIMIZE)
    problem = builder.build()
    logger.log(f'Assembled {problem.name}: {problem.num_variables} variables, '
               f'{problem.num_constraints} constraints.')
    return Formulation(problem=problem,
                       config=cfg,
                       players=players,
                       objective_mode=objective_mode,
                       alpha=alpha,
                       flow_keys=tuple(assembler.flow_keys),
                       alpha_columns=alpha_columns,
                       column_players=tuple(assembler.column_players) +
                       tuple(alpha_columns),
                       component_costs=component_costs,
                       net_supply=net_supply,
                       alpha_supply=alpha_supply,
                       balance_rows=balance_rows,
                       burn_rows=assembler.burn_rows,
                       objective_offset=offset)
