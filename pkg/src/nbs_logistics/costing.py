"""Mission cost evaluation, cost attribution and solution rechecks."""

import collections
import math
import threading
from typing import Dict, List, Optional, Sequence

import chex
import numpy as np
import pandas as pd
from absl import flags

import bbsimplex
from nbs_logistics import constants, formulation, logger, physics, scenario

_MILP_BACKEND = flags.DEFINE_enum(
    'milp_backend', 'embedded', ['embedded', 'highs'],
    'MILP solver: the embedded simplex branch-and-bound or SciPy HiGHS.')
_SOLVER_GAP = flags.DEFINE_float('solver_gap', 1e-6,
                                 'Relative optimality gap of MILP solves.')
_NODE_LIMIT = flags.DEFINE_integer(
    'node_limit', 100_000, 'Branch-and-bound node limit per MILP solve.')
_TIME_LIMIT = flags.DEFINE_float('time_limit', 600.0,
                                 'Time limit per MILP solve in seconds.')

FLOW_COLUMNS = ('player', 'vehicle', 'from', 'to', 't', 'commodity',
                'amount')


class SolverStats:
    """Totals over every solve in the process."""

    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self):
        with self._lock:
            self.solves = 0
            self.nodes = 0
            self.lp_iterations = 0

    def add(self, solution: bbsimplex.MilpSolution):
        with self._lock:
            self.solves += 1
            self.nodes += solution.nodes
            self.lp_iterations += solution.lp_iterations

    def snapshot(self) -> Dict[str, int]:
        with self._lock:
            return {
                'solves': self.solves,
                'nodes': self.nodes,
                'lp_iterations': self.lp_iterations
            }


SOLVER_STATS = SolverStats()


class SolverLimitError(RuntimeError):
    """A solve stopped on a node, time or iteration limit before proving
    optimality or infeasibility."""

    def __init__(self, problem_name: str, solution: bbsimplex.MilpSolution):
        super().__init__(
            f'{problem_name}: solver stopped with status {solution.status} '
            f'after {solution.nodes} nodes (gap {solution.gap:.3g})')
        self.solution = solution


@chex.dataclass(frozen=True)
class CostAttribution:
    """Cost split by player and by component.

    `player_components[player][component]` sums to both `per_player` and
    `components`, which each sum to `total`.
    """
    total: float
    per_player: Dict[str, float]
    components: Dict[str, float]
    player_components: Dict[str, Dict[str, float]]


@chex.dataclass(frozen=True)
class CostEvaluation:
    """One solved cost problem. `cost` is +inf when infeasible."""
    cost: float
    feasible: bool
    formulation: formulation.Formulation
    solution: bbsimplex.MilpSolution


def solver_options_from_flags() -> bbsimplex.SolverOptions:
    """Solver options from the command line, or defaults if unparsed."""
    if not flags.FLAGS.is_parsed():
        return bbsimplex.SolverOptions()
    return bbsimplex.SolverOptions(relative_gap=_SOLVER_GAP.value,
                                   node_limit=_NODE_LIMIT.value,
                                   time_limit=_TIME_LIMIT.value)


def solve(problem: bbsimplex.MilpProblem,
          options: Optional[bbsimplex.SolverOptions] = None
          ) -> bbsimplex.MilpSolution:
    """Solves with the selected backend.

    Raises:
        SolverLimitError: the solve hit a limit.
    """
    if options is None:
        options = solver_options_from_flags()
    if flags.FLAGS.is_parsed() and _MILP_BACKEND.value == 'highs':
        solution = bbsimplex.solve_milp_highs(problem, options)
    else:
        solution = bbsimplex.solve_milp(problem, options)
    SOLVER_STATS.add(solution)
    logger.log(f'Solved {problem.name}: {solution.status}, '
               f'objective {solution.objective_value:.6g}, '
               f'{solution.nodes} nodes, {solution.lp_iterations} LP '
               f'iterations.')
    if solution.status in bbsimplex.LIMIT_STATUSES:
        raise SolverLimitError(problem.name, solution)
    return solution


def _evaluate(form: formulation.Formulation,
              options: Optional[bbsimplex.SolverOptions]) -> CostEvaluation:
    solution = solve(form.problem, options)
    if solution.status != bbsimplex.OPTIMAL:
        return CostEvaluation(cost=math.inf,
                              feasible=False,
                              formulation=form,
                              solution=solution)
    cost = float(form.cost_vector @ solution.x)
    return CostEvaluation(cost=cost,
                          feasible=True,
                          formulation=form,
                          solution=solution)


def player_cost(cfg: scenario.ScenarioConfig,
                player_id: str,
                share: float,
                options: Optional[bbsimplex.SolverOptions] = None
                ) -> CostEvaluation:
    """Minimum total cost for one player carrying `share` of the deployment
    demand on top of its own missions."""
    form = formulation.assemble_milp(cfg,
                                     None,
                                     constants.MIN_TOTAL_COST,
                                     players=[player_id],
                                     shares={player_id: share})
    return _evaluate(form, options)


def incremental_cost(cfg: scenario.ScenarioConfig,
                     player_id: str,
                     share: float,
                     options: Optional[bbsimplex.SolverOptions] = None
                     ) -> float:
    """Cost of `share` minus the cost of the player's own missions.

    Zero at zero share by convention; +inf when either problem is
    infeasible.
    """
    if share <= 0:
        return 0.0
    loaded = player_cost(cfg, player_id, share, options)
    if not loaded.feasible:
        return math.inf
    base = player_cost(cfg, player_id, 0.0, options)
    if not base.feasible:
        return math.inf
    return max(0.0, loaded.cost - base.cost)


def mission_cost(cfg: scenario.ScenarioConfig,
                 players: Sequence[str],
                 alpha: Sequence[float],
                 options: Optional[bbsimplex.SolverOptions] = None) -> float:
    """Incremental cost for the players in `players` to complete their
    assignments under `alpha`.

    Players only interact through the split, so this is the sum of
    per-player solves. The coordinator alone at alpha = 0 gives the
    baseline cost Q.

    Returns:
        The cost, or +inf if some player cannot complete its assignment.

    Raises:
        SolverLimitError: a solve hit a limit.
        ValueError: alpha is outside the participation simplex.
    """
    shares = formulation.player_shares(cfg, alpha)
    total = 0.0
    for player_id in players:
        total += incremental_cost(cfg, player_id, shares[player_id], options)
        if math.isinf(total):
            return math.inf
    return total


def baseline_cost(cfg: scenario.ScenarioConfig,
                  options: Optional[bbsimplex.SolverOptions] = None
                  ) -> CostEvaluation:
    """The coordinator completing the whole deployment alone."""
    return player_cost(cfg, cfg.coordinator.id, 1.0, options)


def attribute_costs(form: formulation.Formulation,
                    solution: bbsimplex.MilpSolution) -> CostAttribution:
    """Splits c^T x by player and by cost component."""
    x = np.asarray(solution.x, dtype=float)
    owners = np.asarray(form.column_players, dtype=object)
    player_components = {player: {} for player in form.players}
    for component, costs in form.component_costs.items():
        spent = costs * x
        for player in form.players:
            player_components[player][component] = float(
                spent[owners == player].sum())
    per_player = {
        player: sum(values.values())
        for player, values in player_components.items()
    }
    components = {
        component: sum(values[component]
                       for values in player_components.values())
        for component in form.component_costs
    }
    return CostAttribution(total=float(sum(per_player.values())),
                           per_player=per_player,
                           components=components,
                           player_components=player_components)


def _edge_groups(form: formulation.Formulation, x: np.ndarray):
    """Flow values grouped by (player, from, to, t)."""
    groups = collections.defaultdict(dict)
    for key, value in zip(form.flow_keys, x):
        groups[(key.player, key.origin, key.destination,
                key.time)][key.commodity] = float(value)
    return groups


def _arcs_by_endpoints(cfg: scenario.ScenarioConfig):
    return {(arc.origin, arc.destination): arc for arc in cfg.arcs}


def _alpha_values(form: formulation.Formulation,
                  x: np.ndarray) -> Dict[str, float]:
    return {
        player: float(x[column])
        for player, column in form.alpha_columns.items()
    }


def check_mass_balance(form: formulation.Formulation,
                       solution: bbsimplex.MilpSolution,
                       tolerance: float = 1e-6) -> List[str]:
    """Rechecks every balance with the physics functions, outside the solver.

    At each (player, node, t, commodity), delivered inflow plus supply must
    cover outflow plus demand. Returns one message per violation.
    """
    cfg = form.config
    spec = cfg.spacecraft[0]
    step = cfg.time_grid.step
    x = np.asarray(solution.x, dtype=float)
    arcs = _arcs_by_endpoints(cfg)
    outflow = collections.defaultdict(float)
    inflow = collections.defaultdict(float)
    for (player_id, origin, destination,
         departure), flows in _edge_groups(form, x).items():
        arc = arcs[(origin, destination)]
        arrival = departure + scenario.arc_duration(arc, step)
        delivered = dict(flows)
        transport = arc.kind != constants.HOLDOVER and not arc.launch_priced
        if transport:
            wet_mass = sum(value for commodity, value in flows.items()
                           if commodity != constants.SPACECRAFT)
            wet_mass += spec.dry_mass * flows.get(constants.SPACECRAFT, 0.0)
            burn = physics.propellant_burn(max(wet_mass, 0.0), arc.delta_v,
                                           spec.isp)
            ratio = spec.ox_fuel_ratio
            delivered[constants.HYDROGEN] = delivered.get(
                constants.HYDROGEN, 0.0) - burn / (1 + ratio)
            delivered[constants.OXYGEN] = delivered.get(
                constants.OXYGEN, 0.0) - burn * ratio / (1 + ratio)
        player = cfg.player(player_id)
        plant = flows.get(constants.ISRU_PLANT, 0.0)
        if arc.kind == constants.HOLDOVER and plant > 0 and \
                origin == player.isru_node:
            hydrogen, usable, excess = physics.isru_yield(
                plant, step, cfg.isru_productivity, spec.ox_fuel_ratio)
            delivered[constants.HYDROGEN] = delivered.get(
                constants.HYDROGEN, 0.0) + hydrogen
            delivered[constants.OXYGEN] = delivered.get(
                constants.OXYGEN, 0.0) + usable + (
                    excess if cfg.retain_excess_o2 else 0.0)
        for commodity, value in flows.items():
            outflow[(player_id, origin, departure, commodity)] += value
        for commodity, value in delivered.items():
            inflow[(player_id, destination, arrival, commodity)] += value

    alpha = _alpha_values(form, x)
    violations = []
    keys = set(outflow) | set(inflow) | set(form.net_supply) | set(
        form.alpha_supply)
    for key in sorted(keys):
        supply = form.net_supply.get(key, 0.0)
        if math.isinf(supply):
            continue
        supply += sum(coef * alpha.get(player, 0.0)
                      for player, coef in form.alpha_supply.get(key,
                                                                {}).items())
        balance = inflow.get(key, 0.0) + supply - outflow.get(key, 0.0)
        scale = max(1.0, abs(supply), inflow.get(key, 0.0),
                    outflow.get(key, 0.0))
        if balance < -tolerance * scale:
            violations.append(f'{"|".join(map(str, key))}: short by '
                              f'{-balance:.6g}')
    return violations


def check_burns(form: formulation.Formulation,
                solution: bbsimplex.MilpSolution,
                tolerance: float = 1e-6) -> List[str]:
    """Compares the propellant decrement encoded in the problem with the
    rocket equation on every transport edge.

    Returns one message per edge outside `tolerance` relative.
    """
    cfg = form.config
    spec = cfg.spacecraft[0]
    x = np.asarray(solution.x, dtype=float)
    row_values = form.problem.matrix @ x
    groups = _edge_groups(form, x)
    arcs = _arcs_by_endpoints(cfg)
    violations = []
    for edge_key, (h2_row, o2_row) in sorted(form.burn_rows.items()):
        flows = groups[edge_key]
        hydrogen = flows.get(constants.HYDROGEN, 0.0)
        oxygen = flows.get(constants.OXYGEN, 0.0)
        # Burn rows read burn(M) - carried <= 0.
        implied = float(row_values[h2_row] + hydrogen + row_values[o2_row] +
                        oxygen)
        wet_mass = sum(value for commodity, value in flows.items()
                       if commodity != constants.SPACECRAFT)
        wet_mass += spec.dry_mass * flows.get(constants.SPACECRAFT, 0.0)
        arc = arcs[(edge_key[1], edge_key[2])]
        expected = physics.propellant_burn(max(wet_mass, 0.0), arc.delta_v,
                                           spec.isp)
        if abs(implied - expected) > tolerance * max(1.0, expected):
            violations.append(f'{"|".join(map(str, edge_key))}: burn '
                              f'{implied:.6g} vs rocket equation '
                              f'{expected:.6g}')
    return violations


def flows_to_df(form: formulation.Formulation,
                solution: bbsimplex.MilpSolution,
                threshold: float = 1e-9) -> pd.DataFrame:
    """Nonzero flows, one row per variable."""
    rows = [{
        'player': key.player,
        'vehicle': key.vehicle,
        'from': key.origin,
        'to': key.destination,
        't': key.time,
        'commodity': key.commodity,
        'amount': float(value),
    } for key, value in zip(form.flow_keys, solution.x) if abs(value) >
            threshold]
    return pd.DataFrame(rows, columns=list(FLOW_COLUMNS))
