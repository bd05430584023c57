"""Utilities, the feasible domain, welfare and the Nash bargaining quantities.

Index 0 of every vector over all players is the coordinator; commercial
player k sits at index k + 1. The bargaining set of a split alpha is the
coordinator plus every commercial player with alpha_k > 0.
"""

import math
from typing import Optional, Sequence, Tuple

import chex
import jax
import jax.numpy as jnp

from nbs_logistics import curves

jax.config.update('jax_enable_x64', True)

UTILITY_TOLERANCE = 1e-9
PARTICIPATION_TOLERANCE = 1e-12


@chex.dataclass(frozen=True)
class UtilityPoint:
    """Utilities of one (alpha, theta) design.

    `costs` holds J_o(1 - sum(alpha)) then J_k(alpha_k). `disagreement`
    holds r_o then r_k. A point is feasible when every member of the
    bargaining set has a nonnegative surplus.
    """
    alpha: Tuple[float, ...]
    theta: Tuple[float, ...]
    baseline: float
    costs: Tuple[float, ...]
    u_o: float
    u_p: Tuple[float, ...]
    disagreement: Tuple[float, ...]
    welfare: float
    nash_product: float
    feasible: bool

    @property
    def utilities(self) -> Tuple[float, ...]:
        return (self.u_o,) + tuple(self.u_p)

    @property
    def bargaining_set(self) -> Tuple[int, ...]:
        return bargaining_set(self.alpha)

    @property
    def incentive_paid(self) -> float:
        return sum(a * t * self.baseline
                   for a, t in zip(self.alpha, self.theta))

    @property
    def expense(self) -> float:
        """Coordinator mission cost plus incentives; expense + u_o = Q."""
        return self.baseline - self.u_o

    @property
    def nash_welfare(self) -> float:
        return nash_welfare_of(self.nash_product, len(self.bargaining_set))


def bargaining_set(alpha: Sequence[float]) -> Tuple[int, ...]:
    """Indices over all players that take part in the bargain."""
    return (0,) + tuple(k + 1
                        for k, value in enumerate(alpha)
                        if value > PARTICIPATION_TOLERANCE)


def _check_baseline(baseline: float):
    if not baseline > 0 or not math.isfinite(baseline):
        raise ValueError(
            f'The baseline cost must be positive and finite, got {baseline}.')


def disagreement_vector(disagreement: Optional[Sequence[float]],
                        num_players: int) -> Tuple[float, ...]:
    if disagreement is None:
        return (0.0,) * (num_players + 1)
    if len(disagreement) != num_players + 1:
        raise ValueError(f'Expected {num_players + 1} disagreement values, '
                         f'got {len(disagreement)}.')
    return tuple(map(float, disagreement))


def utility_coordinator(baseline, coordinator_cost, alpha, theta):
    """Q - J_o(1 - sum(alpha)) - sum(alpha_k theta_k Q).

    Broadcasts over leading axes; alpha and theta end with the player axis.
    """
    alpha = jnp.asarray(alpha, dtype=jnp.float64)
    theta = jnp.asarray(theta, dtype=jnp.float64)
    return baseline - coordinator_cost - jnp.sum(alpha * theta,
                                                 axis=-1) * baseline


def utility_player(baseline, player_cost, alpha_k, theta_k):
    """alpha_k theta_k Q - J_k(alpha_k)."""
    return alpha_k * theta_k * baseline - player_cost


def player_costs(oracle: curves.CostOracle,
                 alpha: Sequence[float]) -> Tuple[float, ...]:
    """J_o(1 - sum(alpha)) followed by J_k(alpha_k)."""
    if len(alpha) != len(oracle.players):
        raise ValueError(f'Expected {len(oracle.players)} participation '
                         f'values, got {len(alpha)}.')
    remainder = max(0.0, 1.0 - sum(alpha))
    return (oracle.cost(oracle.coordinator, remainder),) + tuple(
        oracle.cost(k, a) for k, a in zip(oracle.players, alpha))


def welfare_from_costs(baseline: float, costs: Sequence[float]) -> float:
    """Q - J_o - sum(J_k); any infinite cost gives -inf."""
    if any(math.isinf(cost) for cost in costs):
        return -math.inf
    return baseline - math.fsum(costs)


def welfare(oracle: curves.CostOracle, alpha: Sequence[float]) -> float:
    """Total utility of all players, independent of theta."""
    return welfare_from_costs(oracle.baseline, player_costs(oracle, alpha))


def omega_contains(oracle: curves.CostOracle,
                   alpha: Sequence[float],
                   theta: Sequence[float],
                   tolerance: float = UTILITY_TOLERANCE) -> bool:
    """Whether (alpha, theta) is in the feasible domain.

    The coordinator's incentive budget covers every payment and each
    participating player's incentive covers its cost. The lower bound on
    theta_k is vacuous at alpha_k = 0.
    """
    baseline = oracle.baseline
    _check_baseline(baseline)
    costs = player_costs(oracle, alpha)
    if math.isinf(costs[0]):
        return False
    slack = tolerance * max(1.0, baseline)
    paid = sum(a * t for a, t in zip(alpha, theta)) * baseline
    if paid > baseline - costs[0] + slack:
        return False
    for a, t, cost in zip(alpha, theta, costs[1:]):
        if a <= PARTICIPATION_TOLERANCE:
            continue
        if t < 0 or math.isinf(cost) or a * t * baseline < cost - slack:
            return False
    return True


def theta_star_from_costs(baseline: float,
                          costs: Sequence[float],
                          alpha: Sequence[float],
                          disagreement: Optional[Sequence[float]] = None
                          ) -> Optional[Tuple[float, ...]]:
    """Incentives that give every member of the bargaining set the same
    surplus.

    Non-participants get theta = 0. Returns None when the welfare is below
    the summed disagreement utilities, where no such theta lies in the
    feasible domain.
    """
    _check_baseline(baseline)
    r = disagreement_vector(disagreement, len(alpha))
    members = bargaining_set(alpha)
    total = welfare_from_costs(baseline, [costs[i] for i in members])
    surplus = total - math.fsum(r[i] for i in members)
    slack = UTILITY_TOLERANCE * max(1.0, baseline)
    if not math.isfinite(surplus) or surplus < -slack:
        return None
    share = max(surplus, 0.0) / len(members)
    theta = [0.0] * len(alpha)
    for index in members[1:]:
        k = index - 1
        theta[k] = (share + r[index] + costs[index]) / (alpha[k] * baseline)
    return tuple(theta)


def theta_star(oracle: curves.CostOracle,
               alpha: Sequence[float],
               disagreement: Optional[Sequence[float]] = None
               ) -> Optional[Tuple[float, ...]]:
    """Equal-surplus incentives at alpha, or None if alpha has negative
    welfare."""
    return theta_star_from_costs(oracle.baseline, player_costs(oracle, alpha),
                                 alpha, disagreement)


def nash_product_of(utilities: Sequence[float],
                    disagreement: Sequence[float],
                    members: Sequence[int],
                    tolerance: float = 0.0) -> float:
    """Product of surpluses over `members`; NaN if one is negative."""
    product = 1.0
    for index in members:
        surplus = utilities[index] - disagreement[index]
        if surplus < -tolerance or math.isnan(surplus):
            return math.nan
        product *= max(surplus, 0.0)
    return product


def nash_welfare_of(product, count):
    """Total surplus whose equal split over `count` members has Nash product
    `product`.

    Homogeneous of degree one in currency, so splits with different
    bargaining sets compare the same way at every currency scale. It never
    exceeds the total surplus and meets it at equal surpluses.
    """
    return count * product**(1.0 / count)


def nash_product(point: UtilityPoint) -> float:
    """Product of surplus utilities over the bargaining set."""
    return nash_product_of(point.utilities, point.disagreement,
                           point.bargaining_set,
                           UTILITY_TOLERANCE * max(1.0, point.baseline))


def utility_point_from_costs(baseline: float,
                             costs: Sequence[float],
                             alpha: Sequence[float],
                             theta: Sequence[float],
                             disagreement: Optional[Sequence[float]] = None
                             ) -> UtilityPoint:
    _check_baseline(baseline)
    alpha = tuple(map(float, alpha))
    theta = tuple(map(float, theta))
    costs = tuple(map(float, costs))
    r = disagreement_vector(disagreement, len(alpha))
    u_o = float(
        utility_coordinator(baseline, costs[0], jnp.asarray(alpha),
                            jnp.asarray(theta)))
    u_p = tuple(
        float(utility_player(baseline, cost, a, t))
        for a, t, cost in zip(alpha, theta, costs[1:]))
    members = bargaining_set(alpha)
    utilities = (u_o,) + u_p
    slack = UTILITY_TOLERANCE * max(1.0, baseline)
    product = nash_product_of(utilities, r, members, slack)
    feasible = all(
        math.isfinite(utilities[i]) and utilities[i] - r[i] >= -slack
        for i in members)
    return UtilityPoint(alpha=alpha,
                        theta=theta,
                        baseline=float(baseline),
                        costs=costs,
                        u_o=u_o,
                        u_p=u_p,
                        disagreement=r,
                        welfare=welfare_from_costs(baseline, costs),
                        nash_product=product if feasible else math.nan,
                        feasible=feasible)


def utility_point(oracle: curves.CostOracle,
                  alpha: Sequence[float],
                  theta: Sequence[float],
                  disagreement: Optional[Sequence[float]] = None
                  ) -> UtilityPoint:
    return utility_point_from_costs(oracle.baseline,
                                    player_costs(oracle, alpha), alpha, theta,
                                    disagreement)


def maximin_value(point: UtilityPoint) -> float:
    """Smallest surplus over the bargaining set."""
    return min(point.utilities[i] - point.disagreement[i]
               for i in point.bargaining_set)


def contour_fields(baseline: float, coordinator_cost: float,
                   player_cost: float, alpha: float,
                   thetas) -> chex.ArrayTree:
    """Single-player utilities and Nash products over a theta axis.

    Returns a dict of arrays keyed u_o, u_p, nash_product and feasible.
    """
    thetas = jnp.asarray(thetas, dtype=jnp.float64)
    chex.assert_rank(thetas, 1)
    u_o = utility_coordinator(baseline, coordinator_cost,
                              jnp.full((thetas.size, 1), alpha),
                              thetas[:, None])
    u_p = utility_player(baseline, player_cost, alpha, thetas)
    slack = UTILITY_TOLERANCE * max(1.0, baseline)
    participates = alpha > PARTICIPATION_TOLERANCE
    feasible = (u_o >= -slack) & jnp.where(participates, u_p >= -slack, True)
    product = jnp.where(participates,
                        jnp.maximum(u_o, 0.0) * jnp.maximum(u_p, 0.0),
                        jnp.maximum(u_o, 0.0))
    chex.assert_equal_shape([u_o, u_p, feasible, product])
    return {
        'u_o': u_o,
        'u_p': u_p,
        'nash_product': jnp.where(feasible, product, jnp.nan),
        'feasible': feasible,
    }


def feasible_theta_interval(baseline: float, coordinator_cost: float,
                            player_cost: float,
                            alpha: float) -> Optional[Tuple[float, float]]:
    """[theta_min, theta_max] for a single participating player, or None.

    theta_min covers the player's cost; theta_max exhausts the
    coordinator's savings.
    """
    _check_baseline(baseline)
    if alpha <= PARTICIPATION_TOLERANCE or math.isinf(
            coordinator_cost) or math.isinf(player_cost):
        return None
    low = player_cost / (alpha * baseline)
    high = (baseline - coordinator_cost) / (alpha * baseline)
    if high < low - UTILITY_TOLERANCE:
        return None
    return low, max(low, high)
