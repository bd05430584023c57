"""Time-expanded network construction."""

import math
from typing import Optional, Tuple

import chex

from nbs_logistics import constants
from nbs_logistics.scenario import _types


@chex.dataclass(frozen=True)
class TimedEdge:
    """An arc departing at `departure` and arriving at `arrival` (days)."""
    origin: str
    destination: str
    kind: str
    departure: int
    arrival: int
    arc: _types.NetworkArc


@chex.dataclass(frozen=True)
class TimeExpandedNetwork:
    times: Tuple[int, ...]
    # (node id, time) pairs, node-major.
    layers: Tuple[Tuple[str, int], ...]
    edges: Tuple[TimedEdge, ...]


def arc_duration(arc: _types.NetworkArc, step: int) -> int:
    """Time of flight on the grid in days.

    Holdovers span one step; other arcs round up to a whole number of steps
    and take at least one.
    """
    if arc.kind == constants.HOLDOVER:
        return step
    return max(1, math.ceil(arc.tof / step)) * step


def demand_grid_time(time: float, amount: float, step: int) -> int:
    """Places a demand or supply on the grid.

    Demands round down so that they are met no later than requested;
    supplies round up so that they are never used before they exist.
    """
    if amount < 0:
        return int(math.floor(time / step + 1e-9)) * step
    return int(math.ceil(time / step - 1e-9)) * step


def repeated_entries(entry: _types.DemandEntry, every: float,
                     horizon: int) -> Tuple[_types.DemandEntry, ...]:
    """`entry` at its own time and then every `every` days up to the horizon.

    The first entry is kept even past the horizon so that validation sees it.
    """
    times = [entry.time]
    while times[-1] + every <= horizon + 1e-9:
        times.append(times[-1] + every)
    return tuple(entry.replace(time=time) for time in times)


def departure_open(cfg: _types.ScenarioConfig, arc: _types.NetworkArc,
                   player_id: Optional[str], departure: int,
                   arrival: int) -> bool:
    """Whether a departure at `departure` is inside a mission window.

    A (player, arc) pair with no windows is always open. Windows with no
    player apply to everybody.
    """
    windows = [
        window for window in cfg.time_grid.mission_windows
        if window.origin == arc.origin and window.destination ==
        arc.destination and window.player in (None, player_id)
    ]
    if not windows:
        return True
    return any(window.start <= departure and arrival <= window.end
               for window in windows)


def expand_time_grid(cfg: _types.ScenarioConfig,
                     player_id: Optional[str] = None) -> TimeExpandedNetwork:
    """Crosses the nodes with grid times 0..horizon and lays the arcs over
    them.

    Args:
        cfg: A valid scenario.
        player_id: Whose mission windows apply; None uses only windows that
            apply to every player.

    Returns:
        The time-expanded network. No edge arrives after the horizon.
    """
    step = cfg.time_grid.step
    horizon = cfg.time_grid.horizon
    times = tuple(range(0, horizon + 1, step))
    layers = tuple((node.id, t) for node in cfg.nodes for t in times)
    edges = []
    for arc in cfg.arcs:
        duration = arc_duration(arc, step)
        for departure in times:
            arrival = departure + duration
            if arrival > horizon:
                break
            if not departure_open(cfg, arc, player_id, departure, arrival):
                continue
            edges.append(
                TimedEdge(origin=arc.origin,
                          destination=arc.destination,
                          kind=arc.kind,
                          departure=departure,
                          arrival=arrival,
                          arc=arc))
    return TimeExpandedNetwork(times=times, layers=layers, edges=tuple(edges))
