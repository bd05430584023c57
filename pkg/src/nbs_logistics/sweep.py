"""Batch evaluation over design and parameter grids."""

import concurrent.futures
import itertools
import json
import math
import os
from typing import (Callable, Dict, List, Mapping, Optional, Sequence, Tuple)

import chex
import numpy as np
from absl import flags

import bbsimplex
from nbs_logistics import (bargaining, costing, curves, drive, game, logger,
                           scenario)

_WORKERS = flags.DEFINE_integer(
    'workers', os.cpu_count() or 1,
    'Number of grid points evaluated concurrently.')

ALPHA = 'alpha'
THETA = 'theta'
DEMAND = 'demand'
ISRU_PLANT_MASS = 'isru_plant_mass'
FLEET = 'fleet'
PLAYER_VARIABLES = (ALPHA, THETA, ISRU_PLANT_MASS, FLEET)
VARIABLES = PLAYER_VARIABLES + (DEMAND,)
STRUCTURAL_VARIABLES = (DEMAND, ISRU_PLANT_MASS, FLEET)

THETA_STAR = 'theta-star'
FIXED_THETA = 'fixed'
DEFAULT_ALPHA_STEP = 0.02
DEFAULT_THETA_STEP = 0.02


@chex.dataclass(frozen=True)
class SweepAxis:
    """One swept variable. `player` names whose alpha, theta, plant or fleet
    it is; demand axes have none."""
    variable: str
    values: Tuple[float, ...]
    player: Optional[str] = None

    @property
    def name(self) -> str:
        return self.variable if self.player is None else \
            f'{self.variable}_{self.player}'


@chex.dataclass(frozen=True)
class SweepSpec:
    """Up to two axes plus the values of every unswept split and incentive.

    With `theta_rule` theta-star the incentives come from the equal-surplus
    rule at each split and theta axes are not allowed.
    """
    name: str
    axes: Tuple[SweepAxis, ...]
    theta_rule: str = FIXED_THETA
    alpha: Optional[Tuple[float, ...]] = None
    theta: Optional[Tuple[float, ...]] = None


@chex.dataclass(frozen=True)
class SweepRecord:
    """One grid point. Costs are incremental mission costs."""
    axis_values: Dict[str, float]
    alpha: Tuple[float, ...]
    theta: Tuple[float, ...]
    feasible: bool
    baseline: float
    u_o: float
    u_p: Tuple[float, ...]
    welfare: float
    nash_product: float
    expense: float
    incentive_paid: float
    j_o: float
    j_p: Tuple[float, ...]
    error: str = ''

    @property
    def nash_welfare(self) -> float:
        return game.nash_welfare_of(self.nash_product,
                                    len(game.bargaining_set(self.alpha)))


def axis_values(start: float, stop: float, step: float) -> Tuple[float, ...]:
    """Inclusive range with values snapped to the step."""
    if not step > 0:
        raise ValueError(f'Axis step must be positive, got {step}.')
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise ValueError(f'Empty axis range [{start}, {stop}].')
    return tuple(round(start + i * step, 12) for i in range(count))


def _parse_axis(data: Mapping, locus: str) -> SweepAxis:
    if not isinstance(data, dict):
        raise scenario.ConfigError(locus, 'expected an object')
    unknown = set(data) - {'variable', 'player', 'values', 'start', 'stop',
                           'step'}
    if unknown:
        raise scenario.ConfigError(
            locus, f'unknown keys {", ".join(sorted(unknown))}')
    variable = data.get('variable')
    if variable not in VARIABLES:
        raise scenario.ConfigError(
            f'{locus}.variable',
            f'expected one of {", ".join(VARIABLES)}, got {variable!r}')
    player = data.get('player')
    if variable in PLAYER_VARIABLES and player is None:
        raise scenario.ConfigError(f'{locus}.player',
                                   f'{variable} axes name a player')
    if variable == DEMAND and player is not None:
        raise scenario.ConfigError(f'{locus}.player',
                                   'demand axes name no player')
    try:
        if 'values' in data:
            values = tuple(float(v) for v in data['values'])
        else:
            default = DEFAULT_THETA_STEP if variable == THETA else \
                DEFAULT_ALPHA_STEP
            values = axis_values(float(data['start']), float(data['stop']),
                                 float(data.get('step', default)))
    except (KeyError, TypeError, ValueError) as error:
        raise scenario.ConfigError(
            locus, f'need values or start/stop[/step]: {error}') from error
    if not values:
        raise scenario.ConfigError(f'{locus}.values', 'empty axis')
    return SweepAxis(variable=variable, values=values, player=player)


def loads_sweep_spec(text: str, source: str = '<string>') -> SweepSpec:
    """Parses a sweep spec JSON document.

    Raises:
        scenario.ConfigError: the document is malformed.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise scenario.ConfigError(f'{source}:{error.lineno}:{error.colno}',
                                   error.msg) from error
    if not isinstance(data, dict):
        raise scenario.ConfigError(source, 'expected an object')
    unknown = set(data) - {'name', 'axes', 'theta_rule', 'alpha', 'theta'}
    if unknown:
        raise scenario.ConfigError(
            source, f'unknown keys {", ".join(sorted(unknown))}')
    axes = data.get('axes')
    if not isinstance(axes, list) or not 1 <= len(axes) <= 2:
        raise scenario.ConfigError(f'{source}: axes',
                                   'expected a list of one or two axes')
    theta_rule = data.get('theta_rule', FIXED_THETA)
    if theta_rule not in (FIXED_THETA, THETA_STAR):
        raise scenario.ConfigError(
            f'{source}: theta_rule',
            f'expected {FIXED_THETA} or {THETA_STAR}, got {theta_rule!r}')

    def vector(key):
        if data.get(key) is None:
            return None
        try:
            return tuple(float(v) for v in data[key])
        except (TypeError, ValueError) as error:
            raise scenario.ConfigError(f'{source}: {key}',
                                       'expected a list of numbers') from error

    return SweepSpec(name=str(data.get('name', 'sweep')),
                     axes=tuple(
                         _parse_axis(axis, f'{source}: axes[{i}]')
                         for i, axis in enumerate(axes)),
                     theta_rule=theta_rule,
                     alpha=vector('alpha'),
                     theta=vector('theta'))


def load_sweep_spec(path: str) -> SweepSpec:
    try:
        with drive.open_file(path) as file:
            text = file.read()
    except OSError as error:
        raise scenario.ConfigError(path, str(error)) from error
    return loads_sweep_spec(text, path)


def check_sweep_spec(cfg: scenario.ScenarioConfig, spec: SweepSpec):
    """Checks a sweep spec against the players and physical domains of a
    scenario.

    Raises:
        scenario.ConfigError: on the first violation.
    """
    player_ids = [player.id for player in cfg.players]
    commercial = [player.id for player in cfg.commercial_players]
    names = [axis.name for axis in spec.axes]
    if len(set(names)) != len(names):
        raise scenario.ConfigError(spec.name, 'duplicate axes')
    for axis in spec.axes:
        locus = f'{spec.name}: axis {axis.name}'
        if axis.variable in (ALPHA, THETA) and axis.player not in commercial:
            raise scenario.ConfigError(
                locus, f'{axis.player!r} is not a commercial player')
        if axis.variable in (ISRU_PLANT_MASS, FLEET) and \
                axis.player not in player_ids:
            raise scenario.ConfigError(locus,
                                       f'unknown player {axis.player!r}')
        values = np.asarray(axis.values)
        if axis.variable == ALPHA and np.any((values < 0) | (values > 1)):
            raise scenario.ConfigError(locus, 'alpha values lie in [0, 1]')
        if axis.variable in (THETA, ISRU_PLANT_MASS) and np.any(values < 0):
            raise scenario.ConfigError(locus, f'{axis.variable} values >= 0')
        if axis.variable == DEMAND and np.any(values <= 0):
            raise scenario.ConfigError(locus, 'demand values > 0')
        if axis.variable == FLEET and np.any(
            (values < 0) | (values != np.round(values))):
            raise scenario.ConfigError(locus,
                                       'fleet values are whole numbers >= 0')
        if axis.variable == THETA and spec.theta_rule == THETA_STAR:
            raise scenario.ConfigError(
                locus, 'theta axes need theta_rule "fixed"')
    for key in ('alpha', 'theta'):
        vector = getattr(spec, key)
        if vector is not None and len(vector) != len(commercial):
            raise scenario.ConfigError(
                f'{spec.name}: {key}',
                f'expected {len(commercial)} values, got {len(vector)}')
    swept_theta = {axis.player for axis in spec.axes if axis.variable == THETA}
    if spec.theta_rule == FIXED_THETA and spec.theta is None and \
            set(commercial) - swept_theta:
        raise scenario.ConfigError(
            f'{spec.name}: theta', 'fixed incentives need a theta vector for '
            'players without a theta axis')


def apply_structural(cfg: scenario.ScenarioConfig,
                     settings: Mapping[Tuple[str, Optional[str]], float]
                     ) -> scenario.ScenarioConfig:
    """Applies demand, plant mass and fleet settings to a scenario."""
    players = list(cfg.players)
    for (variable, player_id), value in settings.items():
        if variable == DEMAND:
            cfg = cfg.replace(deployment_demand_total=float(value))
            continue
        index = [p.id for p in players].index(player_id)
        if variable == ISRU_PLANT_MASS:
            players[index] = players[index].replace(
                isru_plant_mass=float(value))
        elif variable == FLEET:
            players[index] = players[index].replace(
                fleet_per_mission=int(round(value)))
    cfg = cfg.replace(players=tuple(players))
    diagnostics = scenario.validate_scenario(cfg)
    if diagnostics:
        raise scenario.ConfigError(f'{cfg.name} with {dict(settings)}',
                                   '; '.join(diagnostics))
    return cfg


def _design_vectors(commercial: Sequence[str], spec: SweepSpec,
                    assignment: Mapping[Tuple[str, Optional[str]], float]):
    alpha = list(spec.alpha or (0.0,) * len(commercial))
    theta = list(spec.theta or (0.0,) * len(commercial))
    for k, player_id in enumerate(commercial):
        if (ALPHA, player_id) in assignment:
            alpha[k] = assignment[(ALPHA, player_id)]
        if (THETA, player_id) in assignment:
            theta[k] = assignment[(THETA, player_id)]
    return tuple(alpha), tuple(theta)


def evaluate_point(baseline: float,
                   costs: Sequence[float],
                   alpha: Sequence[float],
                   theta: Optional[Sequence[float]],
                   axis_record: Dict[str, float],
                   error: str = '') -> SweepRecord:
    """Builds the record of one grid point.

    Without incentives (no equal-surplus split exists) the utilities are
    reported at zero incentives and the point is infeasible.
    """
    num_players = len(alpha)
    if error or not baseline > 0 or not math.isfinite(baseline):
        nan = math.nan
        return SweepRecord(axis_values=axis_record,
                           alpha=tuple(alpha),
                           theta=tuple(theta or ()),
                           feasible=False,
                           baseline=float(baseline),
                           u_o=nan,
                           u_p=(nan,) * num_players,
                           welfare=nan,
                           nash_product=nan,
                           expense=nan,
                           incentive_paid=nan,
                           j_o=float(costs[0]) if costs else nan,
                           j_p=tuple(map(float, costs[1:])) if costs else
                           (nan,) * num_players,
                           error=error or f'baseline cost {baseline}')
    usable = theta is not None
    point = game.utility_point_from_costs(
        baseline, costs, alpha, theta if usable else (0.0,) * num_players)
    return SweepRecord(axis_values=axis_record,
                       alpha=point.alpha,
                       theta=point.theta,
                       feasible=bool(point.feasible and usable),
                       baseline=point.baseline,
                       u_o=point.u_o,
                       u_p=point.u_p,
                       welfare=point.welfare,
                       nash_product=point.nash_product if usable else math.nan,
                       expense=point.expense,
                       incentive_paid=point.incentive_paid,
                       j_o=point.costs[0],
                       j_p=tuple(point.costs[1:]))


def _map_concurrently(fn: Callable, items: Sequence, workers: int) -> List:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def default_workers() -> int:
    return _WORKERS.value if flags.FLAGS.is_parsed() else 1


OracleFactory = Callable[[scenario.ScenarioConfig], curves.CostOracle]


def milp_oracle_factory(options: Optional[bbsimplex.SolverOptions] = None,
                        use_cache: bool = True) -> OracleFactory:
    """Builds MILP oracles, one cache per structural setting."""

    def factory(cfg):
        cache = curves.CostCache() if use_cache else None
        return curves.MilpCostOracle(cfg, options, cache)

    return factory


def _prefetch(oracle: curves.CostOracle, requests: Sequence[Tuple[str, float]],
              workers: int) -> Dict[Tuple[str, float], object]:
    """Evaluates distinct (player, share) costs concurrently.

    Returns the cost, or the SolverLimitError raised, per request.
    """
    distinct = sorted(set(requests))
    progress = logger.Progress('Costs', len(distinct))

    def evaluate(request):
        try:
            return oracle.cost(*request)
        except costing.SolverLimitError as error:
            return error
        finally:
            progress.step()

    return dict(zip(distinct, _map_concurrently(evaluate, distinct, workers)))


def run_sweep(cfg: scenario.ScenarioConfig,
              spec: SweepSpec,
              oracle_factory: Optional[OracleFactory] = None,
              workers: Optional[int] = None) -> List[SweepRecord]:
    """One record per grid point in row-major axis order.

    Each distinct (player, share) is costed once per structural setting
    and theta points reuse those costs. Solver failures are recorded in the
    row and never abort the sweep.
    """
    check_sweep_spec(cfg, spec)
    if oracle_factory is None:
        oracle_factory = milp_oracle_factory()
    if workers is None:
        workers = default_workers()
    commercial = [player.id for player in cfg.commercial_players]
    keys = [(axis.variable, axis.player) for axis in spec.axes]
    grid = list(itertools.product(*(axis.values for axis in spec.axes)))
    logger.log(f'Sweep {spec.name}: {len(grid)} points over '
               f'{", ".join(axis.name for axis in spec.axes)}.')

    structural_keys = [k for k in keys if k[0] in STRUCTURAL_VARIABLES]
    oracles = {}
    for combo in grid:
        assignment = dict(zip(keys, combo))
        setting = tuple((k, assignment[k]) for k in structural_keys)
        if setting not in oracles:
            oracles[setting] = oracle_factory(
                apply_structural(cfg, dict(setting)))

    plans = []
    requests = {setting: [] for setting in oracles}
    for combo in grid:
        assignment = dict(zip(keys, combo))
        setting = tuple((k, assignment[k]) for k in structural_keys)
        alpha, theta = _design_vectors(commercial, spec, assignment)
        oracle = oracles[setting]
        shares = [(oracle.coordinator, round(max(0.0, 1.0 - sum(alpha)),
                                             curves.SHARE_DECIMALS))]
        shares += [(k, round(a, curves.SHARE_DECIMALS))
                   for k, a in zip(commercial, alpha)]
        requests[setting].extend(shares)
        requests[setting].append((oracle.coordinator, 1.0))
        plans.append((setting, alpha, theta, shares,
                      {axis.name: value for axis, value in
                       zip(spec.axes, combo)}))

    values = {}
    for setting, oracle in oracles.items():
        values[setting] = _prefetch(oracle, requests[setting], workers)

    records = []
    for setting, alpha, theta, shares, axis_record in plans:
        looked_up = [values[setting][request] for request in shares]
        baseline = values[setting][(oracles[setting].coordinator, 1.0)]
        failures = [v for v in looked_up + [baseline]
                    if isinstance(v, Exception)]
        if sum(alpha) > 1 + 1e-9:
            records.append(
                evaluate_point(math.nan, [], alpha, theta, axis_record,
                               'participation sums above 1'))
            continue
        if failures:
            records.append(
                evaluate_point(math.nan, [], alpha, theta, axis_record,
                               str(failures[0])))
            continue
        if spec.theta_rule == THETA_STAR and baseline > 0 and \
                math.isfinite(baseline):
            theta = game.theta_star_from_costs(baseline, looked_up, alpha)
        records.append(
            evaluate_point(baseline, looked_up, alpha, theta, axis_record))
    feasible = sum(record.feasible for record in records)
    logger.log(f'Sweep {spec.name}: {feasible} of {len(records)} points '
               'feasible.')
    return records


@chex.dataclass(frozen=True)
class DemandLevel:
    """Scenario 1 at one deployment demand."""
    demand: float
    design: bargaining.IncentiveDesign
    # Smallest and largest total participation with nonnegative welfare,
    # over splits with some participation.
    feasible_alpha: Optional[Tuple[float, float]]


def _feasible_participation(oracle: curves.CostOracle,
                            resolution: float
                            ) -> Optional[Tuple[float, float]]:
    lattice = bargaining.simplex_lattice(len(oracle.players), resolution)
    costs = bargaining.lattice_costs(oracle, lattice)
    welfare = oracle.baseline - costs.sum(axis=1)
    slack = game.UTILITY_TOLERANCE * max(1.0, oracle.baseline)
    totals = lattice.sum(axis=1)
    mask = (welfare >= -slack) & (totals > 0)
    if not mask.any():
        return None
    return float(totals[mask].min()), float(totals[mask].max())


def warm_oracle(oracle: curves.CostOracle, resolution: float, workers: int):
    lattice = bargaining.simplex_lattice(len(oracle.players), resolution)
    shares = np.round(lattice, curves.SHARE_DECIMALS)
    requests = [(oracle.coordinator, 1.0)]
    requests += [(oracle.coordinator,
                  round(max(0.0, 1.0 - float(total)), curves.SHARE_DECIMALS))
                 for total in lattice.sum(axis=1)]
    for k, player_id in enumerate(oracle.players):
        requests += [(player_id, float(share)) for share in shares[:, k]]
    _prefetch(oracle, requests, workers)


def demand_sensitivity(cfg: scenario.ScenarioConfig,
                       demands: Sequence[float],
                       resolution: float = 0.1,
                       oracle_factory: Optional[OracleFactory] = None,
                       workers: Optional[int] = None) -> List[DemandLevel]:
    """Solves scenario 1 per deployment demand level."""
    if any(not d > 0 for d in demands):
        raise ValueError(f'Demands must be positive, got {tuple(demands)}.')
    if oracle_factory is None:
        oracle_factory = milp_oracle_factory()
    if workers is None:
        workers = default_workers()
    levels = []
    for demand in demands:
        oracle = oracle_factory(cfg.replace(deployment_demand_total=demand))
        warm_oracle(oracle, resolution, workers)
        try:
            design = bargaining.solve_scenario1(oracle, resolution)
            interval = _feasible_participation(oracle, resolution)
        except (costing.SolverLimitError, ValueError) as error:
            logger.log(f'Demand {demand}: {error}')
            design = bargaining.IncentiveDesign(scenario=1,
                                                alpha=(),
                                                theta=(),
                                                point=None,
                                                feasible=False,
                                                reason=str(error),
                                                resolution=resolution)
            interval = None
        logger.log(f'Demand {demand}: alpha*={design.alpha}, feasible '
                   f'participation {interval}.')
        levels.append(
            DemandLevel(demand=float(demand),
                        design=design,
                        feasible_alpha=interval))
    return levels


@chex.dataclass(frozen=True)
class ThetaInterval:
    plant_mass: float
    alpha: float
    theta_min: float
    theta_max: float

    @property
    def width(self) -> float:
        if math.isnan(self.theta_min):
            return 0.0
        return self.theta_max - self.theta_min


def isru_sensitivity(cfg: scenario.ScenarioConfig,
                     plant_masses: Sequence[float],
                     player_id: str,
                     alphas: Sequence[float],
                     oracle_factory: Optional[OracleFactory] = None,
                     workers: Optional[int] = None) -> List[ThetaInterval]:
    """Feasible incentive interval of one player per plant size and split.

    Other commercial players do not participate. Empty intervals have NaN
    bounds and zero width.
    """
    if any(not m >= 0 for m in plant_masses):
        raise ValueError(
            f'Plant masses must be >= 0, got {tuple(plant_masses)}.')
    if oracle_factory is None:
        oracle_factory = milp_oracle_factory()
    if workers is None:
        workers = default_workers()
    results = []
    for mass in plant_masses:
        structural = apply_structural(cfg, {(ISRU_PLANT_MASS, player_id): mass})
        oracle = oracle_factory(structural)
        requests = [(oracle.coordinator, 1.0)]
        for alpha in alphas:
            requests += [(player_id, round(alpha, curves.SHARE_DECIMALS)),
                         (oracle.coordinator,
                          round(max(0.0, 1.0 - alpha), curves.SHARE_DECIMALS))]
        costs = _prefetch(oracle, requests, workers)
        baseline = costs[(oracle.coordinator, 1.0)]
        for alpha in alphas:
            j_o = costs[(oracle.coordinator,
                         round(max(0.0, 1.0 - alpha), curves.SHARE_DECIMALS))]
            j_p = costs[(player_id, round(alpha, curves.SHARE_DECIMALS))]
            interval = None
            if not any(isinstance(v, Exception) for v in (baseline, j_o, j_p)):
                interval = game.feasible_theta_interval(baseline, j_o, j_p,
                                                        alpha)
            low, high = interval if interval else (math.nan, math.nan)
            results.append(
                ThetaInterval(plant_mass=float(mass),
                              alpha=float(alpha),
                              theta_min=low,
                              theta_max=high))
        logger.log(f'Plant {mass} kg: widths '
                   f'{[round(r.width, 6) for r in results[-len(alphas):]]}.')
    return results


@chex.dataclass(frozen=True)
class ArgmaxTrace:
    """Best split of one player with the other player's split held fixed.

    Splits are ranked by Nash welfare so that points where a player sits out
    compare with shared ones.
    """
    fixed_player: str
    fixed_alpha: float
    best_alpha: Optional[float]
    nash_product: float


def multi_player_grid(cfg: scenario.ScenarioConfig,
                      resolution: float = DEFAULT_ALPHA_STEP,
                      players: Optional[Tuple[str, str]] = None,
                      oracle_factory: Optional[OracleFactory] = None,
                      workers: Optional[int] = None
                      ) -> Tuple[List[SweepRecord], List[ArgmaxTrace]]:
    """Nash product field over two players' splits with equal-surplus
    incentives, plus the conditional argmax traces along both axes.

    Points with alpha_1 + alpha_2 > 1 are not evaluated.
    """
    commercial = [player.id for player in cfg.commercial_players]
    if players is None:
        if len(commercial) < 2:
            raise ValueError('The grid needs two commercial players.')
        players = (commercial[0], commercial[1])
    values = axis_values(0.0, 1.0, resolution)
    spec = SweepSpec(name='multi_player_grid',
                     axes=(SweepAxis(variable=ALPHA,
                                     values=values,
                                     player=players[0]),
                           SweepAxis(variable=ALPHA,
                                     values=values,
                                     player=players[1])),
                     theta_rule=THETA_STAR)
    records = run_sweep(cfg, spec, oracle_factory, workers)
    names = [axis.name for axis in spec.axes]
    records = [
        record for record in records
        if record.axis_values[names[0]] + record.axis_values[names[1]] <=
        1 + 1e-9
    ]
    traces = []
    for fixed, free in ((1, 0), (0, 1)):
        for value in values:
            row = [
                r for r in records if r.axis_values[names[fixed]] == value and
                r.feasible and not math.isnan(r.nash_product)
            ]
            if not row:
                traces.append(
                    ArgmaxTrace(fixed_player=players[fixed],
                                fixed_alpha=value,
                                best_alpha=None,
                                nash_product=math.nan))
                continue
            best = max(row, key=lambda r: r.nash_welfare)
            traces.append(
                ArgmaxTrace(fixed_player=players[fixed],
                            fixed_alpha=value,
                            best_alpha=best.axis_values[names[free]],
                            nash_product=best.nash_product))
    return records, traces
