"""The three incentive design scenarios.

Scenario 1 chooses both the split and the incentives, scenario 2 fixes the
split and scenario 3 fixes the incentives. Splits are searched over the
simplex lattice {alpha : alpha_k in resolution * N, sum(alpha) <= 1}.
"""

import itertools
import math
from typing import Dict, List, Optional, Sequence, Tuple

import chex
import jax
import jax.numpy as jnp
import numpy as np

import bbsimplex
from nbs_logistics import (constants, costing, curves, formulation, game,
                           logger, scenario)

jax.config.update('jax_enable_x64', True)

DEFAULT_RESOLUTION = 0.01
TIE_TOLERANCE = 1e-9
NO_MUTUAL_BENEFIT = 'no mutually beneficial design'


@chex.dataclass(frozen=True)
class IncentiveDesign:
    """A scenario solution.

    `ties` lists every co-optimal (alpha, theta) pair in lexicographic alpha
    order; the reported design is the first. `budgets` are the incentive
    budgets R_k = theta_k Q.
    """
    scenario: int
    alpha: Tuple[float, ...]
    theta: Tuple[float, ...]
    point: Optional[game.UtilityPoint]
    feasible: bool
    reason: str = ''
    ties: Tuple[Tuple[Tuple[float, ...], Tuple[float, ...]], ...] = ()
    budgets: Tuple[float, ...] = ()
    resolution: Optional[float] = None
    method: str = 'grid'
    solver_nodes: int = 0
    solver_lp_iterations: int = 0


def simplex_lattice(num_players: int, resolution: float) -> np.ndarray:
    """Lattice points of the participation simplex in lexicographic order.

    Raises:
        ValueError: the resolution does not divide 1.
    """
    if not resolution > 0:
        raise ValueError(f'Resolution must be positive, got {resolution}.')
    steps = int(round(1.0 / resolution))
    if steps < 1 or abs(steps * resolution - 1.0) > 1e-9:
        raise ValueError(f'Resolution {resolution} does not divide 1.')
    if num_players == 0:
        return np.zeros((1, 0))
    points = [
        combo for combo in itertools.product(range(steps + 1),
                                             repeat=num_players)
        if sum(combo) <= steps
    ]
    return np.asarray(points, dtype=float) / steps


def lattice_costs(oracle: curves.CostOracle,
                  lattice: np.ndarray) -> np.ndarray:
    """Costs at every lattice point: column 0 is the coordinator, column
    k + 1 player k. Each distinct share is evaluated once."""
    lattice = np.asarray(lattice, dtype=float)
    chex.assert_rank(lattice, 2)
    shares = [np.clip(1.0 - lattice.sum(axis=1), 0.0, 1.0)]
    shares += [lattice[:, k] for k in range(lattice.shape[1])]
    owners = (oracle.coordinator,) + tuple(oracle.players)
    columns = []
    for player_id, column in zip(owners, shares):
        rounded = np.round(column, curves.SHARE_DECIMALS)
        distinct, inverse = np.unique(rounded, return_inverse=True)
        values = np.array(
            [oracle.cost(player_id, float(share)) for share in distinct])
        columns.append(values[inverse])
    return np.stack(columns, axis=1)


def _ordered_ties(lattice: np.ndarray, mask: np.ndarray) -> List[int]:
    indices = [int(i) for i in np.flatnonzero(mask)]
    return sorted(indices, key=lambda i: tuple(lattice[i]))


def _design(scenario_id: int,
            baseline: float,
            costs: Sequence[float],
            alpha: Sequence[float],
            theta: Optional[Sequence[float]],
            disagreement: Optional[Sequence[float]],
            reason: str = '',
            **kwargs) -> IncentiveDesign:
    alpha = tuple(map(float, alpha))
    if theta is None:
        return IncentiveDesign(scenario=scenario_id,
                               alpha=alpha,
                               theta=(),
                               point=None,
                               feasible=False,
                               reason=reason,
                               **kwargs)
    theta = tuple(map(float, theta))
    point = game.utility_point_from_costs(baseline, costs, alpha, theta,
                                          disagreement)
    feasible = point.feasible and not reason
    return IncentiveDesign(scenario=scenario_id,
                           alpha=alpha,
                           theta=theta,
                           point=point,
                           feasible=feasible,
                           reason=reason or
                           ('' if point.feasible else 'outside the feasible '
                            'domain'),
                           budgets=tuple(t * baseline for t in theta),
                           **kwargs)


def solve_scenario1(oracle: curves.CostOracle,
                    resolution: float = DEFAULT_RESOLUTION,
                    disagreement: Optional[Sequence[float]] = None,
                    tie_tolerance: float = TIE_TOLERANCE) -> IncentiveDesign:
    """Maximizes welfare over the lattice and splits it with equal-surplus
    incentives.

    Returns an infeasible design when no split has positive surplus over
    the disagreement point.
    """
    baseline = oracle.baseline
    lattice = simplex_lattice(len(oracle.players), resolution)
    costs = lattice_costs(oracle, lattice)
    welfare = baseline - jnp.sum(jnp.asarray(costs), axis=1)
    r = game.disagreement_vector(disagreement, len(oracle.players))
    if disagreement is not None:
        members = np.concatenate(
            [np.ones((lattice.shape[0], 1), bool), lattice > 0], axis=1)
        welfare = welfare - jnp.sum(jnp.where(members, jnp.asarray(r), 0.0),
                                    axis=1)
    welfare = np.asarray(welfare)
    best = float(np.max(welfare))
    logger.log(f'Scenario 1 over {lattice.shape[0]} splits: best surplus '
               f'{best:.6g}.')
    slack = game.UTILITY_TOLERANCE * max(1.0, baseline)
    if not math.isfinite(best) or best <= slack:
        return IncentiveDesign(scenario=1,
                               alpha=(0.0,) * len(oracle.players),
                               theta=(),
                               point=None,
                               feasible=False,
                               reason=NO_MUTUAL_BENEFIT,
                               resolution=resolution)
    tolerance = tie_tolerance * max(1.0, abs(best))
    order = _ordered_ties(lattice, welfare >= best - tolerance)
    ties = []
    for index in order:
        theta = game.theta_star_from_costs(baseline, costs[index],
                                           lattice[index], r)
        ties.append((tuple(map(float, lattice[index])), theta))
    first = order[0]
    return _design(1,
                   baseline,
                   costs[first],
                   lattice[first],
                   ties[0][1],
                   r,
                   ties=tuple(ties),
                   resolution=resolution)


def _check_split(alpha: Sequence[float], num_players: int):
    if len(alpha) != num_players:
        raise ValueError(f'Expected {num_players} participation values, got '
                         f'{len(alpha)}.')
    if any(not 0 <= a <= 1 for a in alpha) or \
            sum(alpha) > 1 + formulation.ALPHA_TOLERANCE:
        raise ValueError(f'Participation {tuple(alpha)} outside the simplex.')


def solve_scenario2(oracle: curves.CostOracle,
                    alpha: Sequence[float],
                    disagreement: Optional[Sequence[float]] = None
                    ) -> IncentiveDesign:
    """Equal-surplus incentives at a fixed split.

    Raises:
        ValueError: alpha is outside the participation simplex.
    """
    _check_split(alpha, len(oracle.players))
    baseline = oracle.baseline
    costs = game.player_costs(oracle, alpha)
    theta = game.theta_star_from_costs(baseline, costs, alpha, disagreement)
    reason = ''
    if any(math.isinf(cost) for cost in costs):
        reason = 'the split cannot be delivered'
    elif theta is None:
        reason = (f'{NO_MUTUAL_BENEFIT}: welfare '
                  f'{game.welfare_from_costs(baseline, costs):.6g} is below '
                  'the disagreement point')
    return _design(2, baseline, costs, alpha, theta, disagreement, reason)


def solve_scenario3(oracle: curves.CostOracle,
                    theta: Sequence[float],
                    resolution: float = DEFAULT_RESOLUTION,
                    disagreement: Optional[Sequence[float]] = None,
                    tie_tolerance: float = TIE_TOLERANCE) -> IncentiveDesign:
    """Maximizes the Nash product over the lattice at fixed incentives.

    Splits with different bargaining sets are ranked by their Nash welfare,
    the degree-one form of the product.
    """
    num_players = len(oracle.players)
    if len(theta) != num_players:
        raise ValueError(f'Expected {num_players} incentive values, got '
                         f'{len(theta)}.')
    if any(not t >= 0 for t in theta):
        raise ValueError(f'Incentives must be >= 0, got {tuple(theta)}.')
    baseline = oracle.baseline
    r = jnp.asarray(game.disagreement_vector(disagreement, num_players))
    lattice = simplex_lattice(num_players, resolution)
    costs = jnp.asarray(lattice_costs(oracle, lattice))
    alpha = jnp.asarray(lattice)
    theta_vector = jnp.asarray(theta, dtype=jnp.float64)
    u_o = game.utility_coordinator(baseline, costs[:, 0], alpha, theta_vector)
    u_p = game.utility_player(baseline, costs[:, 1:], alpha, theta_vector)
    utilities = jnp.concatenate([u_o[:, None], u_p], axis=1)
    members = jnp.concatenate(
        [jnp.ones((lattice.shape[0], 1), bool),
         alpha > game.PARTICIPATION_TOLERANCE], axis=1)
    surplus = utilities - r
    slack = game.UTILITY_TOLERANCE * max(1.0, baseline)
    feasible = jnp.all(jnp.where(members, surplus >= -slack, True), axis=1)
    product = jnp.prod(jnp.where(members, jnp.maximum(surplus, 0.0), 1.0),
                       axis=1)
    score = game.nash_welfare_of(product, jnp.sum(members, axis=1))
    score = np.asarray(jnp.where(feasible, score, -jnp.inf))
    best = float(np.max(score))
    logger.log(f'Scenario 3 over {lattice.shape[0]} splits: best Nash '
               f'welfare {best:.6g}.')
    if not best > 0:
        return IncentiveDesign(scenario=3,
                               alpha=(0.0,) * num_players,
                               theta=tuple(map(float, theta)),
                               point=None,
                               feasible=False,
                               reason=NO_MUTUAL_BENEFIT,
                               resolution=resolution)
    order = _ordered_ties(lattice, score >= best * (1 - tie_tolerance))
    ties = tuple((tuple(map(float, lattice[i])), tuple(map(float, theta)))
                 for i in order)
    first = order[0]
    return _design(3,
                   baseline,
                   np.asarray(costs[first]),
                   lattice[first],
                   theta,
                   tuple(map(float, r)),
                   ties=ties,
                   resolution=resolution)


def solve_scenario1_milp(cfg: scenario.ScenarioConfig,
                         options: Optional[bbsimplex.SolverOptions] = None,
                         disagreement: Optional[Sequence[float]] = None
                         ) -> IncentiveDesign:
    """Scenario 1 with the split as continuous variables of one joint
    welfare-maximizing MILP.

    The budget row caps the summed cost at Q plus every player's cost
    without deployment work, so the optimum never does worse than the
    baseline.

    Raises:
        costing.SolverLimitError: a solve hit a limit.
    """
    coordinator = cfg.coordinator.id
    players = [player.id for player in cfg.players]
    full = costing.player_cost(cfg, coordinator, 1.0, options)
    if not full.feasible:
        return IncentiveDesign(scenario=1,
                               alpha=(0.0,) * len(cfg.commercial_players),
                               theta=(),
                               point=None,
                               feasible=False,
                               reason='the coordinator cannot complete the '
                               'deployment alone',
                               method='milp')
    own: Dict[str, float] = {}
    for player_id in players:
        evaluation = costing.player_cost(cfg, player_id, 0.0, options)
        own[player_id] = evaluation.cost
    baseline = full.cost - own[coordinator]
    budget = full.cost + sum(cost for player_id, cost in own.items()
                             if player_id != coordinator)
    form = formulation.assemble_milp(cfg,
                                     None,
                                     constants.MAX_WELFARE,
                                     budget=budget,
                                     alpha_variables=True)
    solution = costing.solve(form.problem, options)
    if solution.status != bbsimplex.OPTIMAL:
        return IncentiveDesign(scenario=1,
                               alpha=(0.0,) * len(cfg.commercial_players),
                               theta=(),
                               point=None,
                               feasible=False,
                               reason=NO_MUTUAL_BENEFIT,
                               method='milp',
                               solver_nodes=solution.nodes,
                               solver_lp_iterations=solution.lp_iterations)
    x = np.asarray(solution.x, dtype=float)
    alpha = tuple(
        min(1.0, max(0.0, float(x[form.alpha_columns[player.id]])))
        for player in cfg.commercial_players)
    attribution = costing.attribute_costs(form, solution)
    costs = [max(0.0, attribution.per_player[coordinator] - own[coordinator])]
    for player, share in zip(cfg.commercial_players, alpha):
        spent = attribution.per_player[player.id] - own[player.id]
        participates = share > game.PARTICIPATION_TOLERANCE
        costs.append(max(0.0, spent) if participates else 0.0)
    logger.log(f'Joint welfare solve: alpha={alpha}, welfare '
               f'{solution.objective_value:.6g}.')
    theta = game.theta_star_from_costs(baseline, costs, alpha, disagreement)
    reason = ''
    slack = game.UTILITY_TOLERANCE * max(1.0, baseline)
    if theta is None or game.welfare_from_costs(baseline, costs) <= slack:
        reason = NO_MUTUAL_BENEFIT
    return _design(1,
                   baseline,
                   costs,
                   alpha,
                   theta,
                   disagreement,
                   reason,
                   ties=((alpha, theta),) if theta is not None else (),
                   method='milp',
                   solver_nodes=solution.nodes,
                   solver_lp_iterations=solution.lp_iterations)


def design_to_dict(design: IncentiveDesign,
                   player_ids: Sequence[str]) -> dict:
    """A JSON-ready report; infinite values become strings."""

    def number(value):
        if value is None:
            return None
        value = float(value)
        return value if math.isfinite(value) else str(value)

    report = {
        'scenario': design.scenario,
        'feasible': bool(design.feasible),
        'reason': design.reason,
        'method': design.method,
        'resolution': design.resolution,
        'players': list(player_ids),
        'alpha': [number(a) for a in design.alpha],
        'theta': [number(t) for t in design.theta],
        'budgets': [number(b) for b in design.budgets],
        'ties': [{
            'alpha': [number(a) for a in alpha],
            'theta': [number(t) for t in theta] if theta is not None else None
        } for alpha, theta in design.ties],
        'solver': {
            'nodes': design.solver_nodes,
            'lp_iterations': design.solver_lp_iterations
        },
    }
    point = design.point
    if point is not None:
        report.update({
            'baseline': number(point.baseline),
            'u_o': number(point.u_o),
            'u_p': [number(u) for u in point.u_p],
            'welfare': number(point.welfare),
            'nash_product': number(point.nash_product),
            'nash_welfare': number(point.nash_welfare),
            'maximin': number(game.maximin_value(point)),
            'expense': number(point.expense),
            'incentive_paid': number(point.incentive_paid),
            'costs': [number(c) for c in point.costs],
        })
    return report
