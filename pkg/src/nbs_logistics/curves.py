"""Mission cost curves: piecewise-linear J(alpha), CSV import/export and
cost oracles backed by curves or by MILP solves."""

import concurrent.futures
import io
import math
import os
import threading
from typing import (Callable, Dict, Hashable, Iterable, List, Mapping,
                    Optional, Protocol, Sequence, Tuple)

import chex
import jax
import jax.numpy as jnp
import numpy as np
import pandas as pd

import bbsimplex
from nbs_logistics import constants, costing, drive, logger, scenario

jax.config.update('jax_enable_x64', True)

CURVE_COLUMNS = ('alpha', 'cost', 'feasible')
# Shares closer than this hit the same cache entry.
SHARE_DECIMALS = 12

_BUNDLED_DIR = os.path.join(os.path.dirname(__file__), 'curve_data')


@chex.dataclass(frozen=True)
class CostCurve:
    """Sampled incremental mission cost of one player.

    `alphas` is strictly increasing over [0, 1]; `costs` are >= 0 or +inf.
    Shares whose solve hit a limit are listed in `unevaluated` and left out
    of the samples.
    """
    player: str
    alphas: Tuple[float, ...]
    costs: Tuple[float, ...]
    source: str = constants.MILP_EVALUATED
    unevaluated: Tuple[float, ...] = ()


def check_curve(curve: CostCurve, commercial: bool = True):
    """Raises ValueError on a malformed curve."""
    alphas = np.asarray(curve.alphas, dtype=float)
    costs = np.asarray(curve.costs, dtype=float)
    name = f'curve {curve.player}'
    if alphas.shape != costs.shape or alphas.ndim != 1 or alphas.size < 1:
        raise ValueError(f'{name}: need matching non-empty samples.')
    if np.any(np.diff(alphas) <= 0):
        raise ValueError(f'{name}: alpha must be strictly increasing.')
    if alphas[0] < 0 or alphas[-1] > 1:
        raise ValueError(f'{name}: alpha must lie in [0, 1].')
    if np.any(np.isnan(costs)) or np.any(costs < 0):
        raise ValueError(f'{name}: costs must be >= 0 or +inf.')
    if commercial and (alphas[0] != 0 or costs[0] != 0):
        raise ValueError(f'{name}: a commercial curve has J(0) = 0.')


def evaluate_curve(curve: CostCurve, alpha) -> jnp.ndarray:
    """Interpolates the curve at `alpha` (scalar or array).

    Segments touching an infeasible sample are infeasible except at their
    feasible end. Outside the sampled range the result is NaN.
    """
    xs = jnp.asarray(curve.alphas, dtype=jnp.float64)
    ys = jnp.asarray(curve.costs, dtype=jnp.float64)
    alpha = jnp.asarray(alpha, dtype=jnp.float64)
    if xs.size == 1:
        return jnp.where(jnp.abs(alpha - xs[0]) <= 1e-12, ys[0], jnp.nan)
    index = jnp.clip(jnp.searchsorted(xs, alpha, side='right') - 1, 0,
                     xs.size - 2)
    left_x, right_x = xs[index], xs[index + 1]
    left_y, right_y = ys[index], ys[index + 1]
    weight = jnp.clip((alpha - left_x) / (right_x - left_x), 0.0, 1.0)
    finite = jnp.isfinite(left_y) & jnp.isfinite(right_y)
    blended = jnp.where(finite,
                        jnp.where(finite, left_y, 0.0) +
                        (jnp.where(finite, right_y, 0.0) -
                         jnp.where(finite, left_y, 0.0)) * weight, jnp.inf)
    value = jnp.where(weight <= 0.0, left_y,
                      jnp.where(weight >= 1.0, right_y, blended))
    outside = (alpha < xs[0] - 1e-12) | (alpha > xs[-1] + 1e-12)
    return jnp.where(outside, jnp.nan, value)


@chex.dataclass(frozen=True)
class CurveSet:
    """Curves for the coordinator and every commercial player."""
    coordinator: CostCurve
    players: Tuple[CostCurve, ...]

    @property
    def baseline(self) -> float:
        """Q, the coordinator's cost at full assignment."""
        return float(evaluate_curve(self.coordinator, 1.0))

    @property
    def player_ids(self) -> Tuple[str, ...]:
        return tuple(curve.player for curve in self.players)


class CostOracle(Protocol):
    """Incremental mission costs by player and deployment share."""
    coordinator: str
    players: Tuple[str, ...]

    @property
    def baseline(self) -> float:
        ...

    def cost(self, player_id: str, share: float) -> float:
        ...


def write_curve_csv(curve: CostCurve, filepath: str):
    """Writes `alpha,cost,feasible` rows; infeasible costs read "inf"."""
    frame = pd.DataFrame({
        'alpha': list(curve.alphas),
        'cost': list(curve.costs),
        'feasible': [math.isfinite(cost) for cost in curve.costs],
    })
    frame['feasible'] = frame['feasible'].map({True: 'true', False: 'false'})
    drive.write_file(
        filepath, 'wt', lambda file: frame.to_csv(
            file, index=False, lineterminator='\n', float_format='%.17g'))


def read_curve_csv(filepath: str,
                   player: str,
                   source: str = constants.USER_SUPPLIED,
                   commercial: bool = True) -> CostCurve:
    """Reads a curve CSV. Rows with feasible=false are infeasible whatever
    their cost column says.

    Raises:
        scenario.ConfigError: missing columns or a malformed curve.
    """
    with drive.open_file(filepath) as file:
        text = file.read()
    try:
        frame = pd.read_csv(io.StringIO(text),
                            dtype={'feasible': str},
                            keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise scenario.ConfigError(filepath, str(error)) from error
    missing = [column for column in CURVE_COLUMNS if column not in frame]
    if missing:
        raise scenario.ConfigError(filepath,
                                   f'missing columns {", ".join(missing)}')
    try:
        alphas = frame['alpha'].astype(float)
        costs = frame['cost'].replace({'': 'inf'}).astype(float)
    except ValueError as error:
        raise scenario.ConfigError(filepath, str(error)) from error
    feasible = frame['feasible'].str.strip().str.lower().isin(
        ('true', '1', 'yes'))
    costs = costs.where(feasible, math.inf)
    curve = CostCurve(player=player,
                      alphas=tuple(map(float, alphas)),
                      costs=tuple(map(float, costs)),
                      source=source)
    try:
        check_curve(curve, commercial)
    except ValueError as error:
        raise scenario.ConfigError(filepath, str(error)) from error
    return curve


def bundled_curve_sets() -> List[str]:
    return sorted(os.listdir(_BUNDLED_DIR))


def resolve_curve_dir(path_or_name: str) -> str:
    """Returns a curve directory for a path or a bundled curve set name."""
    if os.path.isdir(path_or_name):
        return path_or_name
    bundled = os.path.join(_BUNDLED_DIR, path_or_name)
    if os.path.isdir(bundled):
        return bundled
    raise scenario.ConfigError(
        path_or_name, 'no such directory and no bundled curve set of that '
        f'name (bundled: {", ".join(bundled_curve_sets())})')


def load_curve_set(path_or_name: str,
                   cfg: Optional[scenario.ScenarioConfig] = None) -> CurveSet:
    """Reads `<player>.csv` files from a directory.

    With a scenario, the coordinator and commercial players come from it and
    each needs a file. Without one, `coordinator.csv` is the coordinator and
    every other file is a commercial player, in name order.
    """
    directory = resolve_curve_dir(path_or_name)
    if cfg is not None:
        coordinator = cfg.coordinator.id
        player_ids = [player.id for player in cfg.commercial_players]
    else:
        coordinator = 'coordinator'
        player_ids = sorted(
            os.path.splitext(name)[0] for name in os.listdir(directory)
            if name.endswith('.csv') and name != 'coordinator.csv')

    def read(player_id, commercial):
        filepath = os.path.join(directory, f'{player_id}.csv')
        if not os.path.isfile(filepath):
            raise scenario.ConfigError(directory,
                                       f'no curve for player {player_id}')
        return read_curve_csv(filepath, player_id, commercial=commercial)

    return CurveSet(coordinator=read(coordinator, False),
                    players=tuple(read(k, True) for k in player_ids))


def write_curve_set(curves: CurveSet, directory: str) -> List[str]:
    """Writes one CSV per player and returns the paths."""
    paths = []
    for curve in (curves.coordinator,) + tuple(curves.players):
        filepath = os.path.join(directory, f'{curve.player}.csv')
        write_curve_csv(curve, filepath)
        paths.append(filepath)
    return paths


class CostCache:
    """Memoized costs, safe under concurrent insertion."""

    def __init__(self):
        self._lock = threading.Lock()
        self._values: Dict[Hashable, float] = {}
        self.hits = 0
        self.misses = 0

    def get_or_compute(self, key: Hashable, compute: Callable[[], float]
                       ) -> float:
        with self._lock:
            if key in self._values:
                self.hits += 1
                return self._values[key]
            self.misses += 1
        value = compute()
        with self._lock:
            return self._values.setdefault(key, value)

    def __len__(self) -> int:
        with self._lock:
            return len(self._values)


class MilpCostOracle:
    """Costs from per-player MILP solves, memoized by (player, share)."""

    def __init__(self,
                 cfg: scenario.ScenarioConfig,
                 options: Optional[bbsimplex.SolverOptions] = None,
                 cache: Optional[CostCache] = None):
        self.cfg = cfg
        self.options = options
        self.cache = cache
        self.coordinator = cfg.coordinator.id
        self.players = tuple(player.id for player in cfg.commercial_players)
        self._baseline = None

    @property
    def baseline(self) -> float:
        if self._baseline is None:
            self._baseline = self.cost(self.coordinator, 1.0)
        return self._baseline

    def cost(self, player_id: str, share: float) -> float:
        share = round(float(share), SHARE_DECIMALS)

        def compute():
            return costing.incremental_cost(self.cfg, player_id, share,
                                            self.options)

        if self.cache is None:
            return compute()
        return self.cache.get_or_compute((player_id, share), compute)


class CurveCostOracle:
    """Costs interpolated from a curve set."""

    def __init__(self, curves: CurveSet):
        self.curves = curves
        self.coordinator = curves.coordinator.player
        self.players = curves.player_ids
        self._by_player = {
            curve.player: curve
            for curve in (curves.coordinator,) + tuple(curves.players)
        }

    @property
    def baseline(self) -> float:
        return self.curves.baseline

    def cost(self, player_id: str, share: float) -> float:
        return float(evaluate_curve(self._by_player[player_id], share))

    def costs(self, player_id: str, shares) -> jnp.ndarray:
        return evaluate_curve(self._by_player[player_id], shares)


def _map_points(fn: Callable, points: Sequence, workers: int) -> List:
    if workers <= 1 or len(points) <= 1:
        return [fn(point) for point in points]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, points))


def curve_from_oracle(oracle: CostOracle,
                      player_id: str,
                      grid: Iterable[float],
                      workers: int = 1,
                      source: str = constants.MILP_EVALUATED) -> CostCurve:
    """Samples an oracle over `grid`.

    Points whose solve hits a limit are logged and recorded as unevaluated.
    """
    grid = sorted({round(float(alpha), SHARE_DECIMALS) for alpha in grid})
    for alpha in grid:
        if not 0 <= alpha <= 1:
            raise ValueError(f'Curve grid point {alpha} outside [0, 1].')

    def evaluate(alpha):
        try:
            return oracle.cost(player_id, alpha)
        except costing.SolverLimitError as error:
            logger.log(f'Curve {player_id} at alpha={alpha}: {error}')
            return None

    values = _map_points(evaluate, grid, workers)
    samples = [(a, v) for a, v in zip(grid, values) if v is not None]
    return CostCurve(player=player_id,
                     alphas=tuple(a for a, _ in samples),
                     costs=tuple(float(v) for _, v in samples),
                     source=source,
                     unevaluated=tuple(
                         a for a, v in zip(grid, values) if v is None))


def cost_curve_from_milp(cfg: scenario.ScenarioConfig,
                         player_id: str,
                         grid: Iterable[float],
                         options: Optional[bbsimplex.SolverOptions] = None,
                         cache: Optional[CostCache] = None,
                         workers: int = 1) -> CostCurve:
    """Evaluates a player's incremental mission cost over an alpha grid."""
    oracle = MilpCostOracle(cfg, options, cache)
    return curve_from_oracle(oracle, player_id, grid, workers)


def curve_set_from_oracle(oracle: CostOracle,
                          grid: Iterable[float],
                          workers: int = 1,
                          source: str = constants.MILP_EVALUATED) -> CurveSet:
    grid = list(grid)
    return CurveSet(
        coordinator=curve_from_oracle(oracle, oracle.coordinator, grid,
                                      workers, source),
        players=tuple(
            curve_from_oracle(oracle, k, grid, workers, source)
            for k in oracle.players))


def curves_from_functions(functions: Mapping[str, Callable[[float], float]],
                          coordinator: str,
                          grid: Sequence[float]) -> CurveSet:
    """Samples analytical cost functions into a user-supplied curve set."""
    def sample(player_id):
        return CostCurve(player=player_id,
                         alphas=tuple(map(float, grid)),
                         costs=tuple(
                             float(functions[player_id](a)) for a in grid),
                         source=constants.USER_SUPPLIED)

    return CurveSet(coordinator=sample(coordinator),
                    players=tuple(
                        sample(k) for k in functions if k != coordinator))
