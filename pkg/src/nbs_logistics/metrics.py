"""Sweep records as tables: the CSV and JSON output contract."""

import json
import math
from typing import List, Optional, Sequence

import pandas as pd

from nbs_logistics import bargaining, drive, sweep


def record_columns(axis_names: Sequence[str], num_players: int) -> List[str]:
    """Axis names, feasible, u_o, u_p1..u_pK, welfare, nash_product,
    expense, incentive_paid, J_o, J_p1..J_pK."""
    return (list(axis_names) + ['feasible', 'u_o'] +
            [f'u_p{k + 1}' for k in range(num_players)] +
            ['welfare', 'nash_product', 'expense', 'incentive_paid', 'J_o'] +
            [f'J_p{k + 1}' for k in range(num_players)])


def records_to_df(records: Sequence[sweep.SweepRecord],
                  axis_names: Sequence[str],
                  num_players: Optional[int] = None) -> pd.DataFrame:
    """One row per record in the given order."""
    if num_players is None:
        num_players = len(records[0].u_p) if records else 0
    rows = []
    for record in records:
        row = {name: record.axis_values[name] for name in axis_names}
        row['feasible'] = bool(record.feasible)
        row['u_o'] = record.u_o
        for k, value in enumerate(record.u_p):
            row[f'u_p{k + 1}'] = value
        row['welfare'] = record.welfare
        row['nash_product'] = record.nash_product
        row['expense'] = record.expense
        row['incentive_paid'] = record.incentive_paid
        row['J_o'] = record.j_o
        for k, value in enumerate(record.j_p):
            row[f'J_p{k + 1}'] = value
        rows.append(row)
    return pd.DataFrame(rows, columns=record_columns(axis_names, num_players))


def _csv_ready(frame: pd.DataFrame) -> pd.DataFrame:
    frame = frame.copy()
    for column in frame.columns:
        if frame[column].dtype == bool:
            frame[column] = frame[column].map({True: 'true', False: 'false'})
    return frame


def write_csv(frame: pd.DataFrame, filepath: str):
    """Writes with a header row, round-trip floats and '\\n' line endings."""
    frame = _csv_ready(frame)
    drive.write_file(
        filepath, 'wt', lambda file: frame.to_csv(file,
                                                  index=False,
                                                  lineterminator='\n',
                                                  na_rep='nan'))


def _json_number(value):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    value = float(value)
    return value if math.isfinite(value) else str(value)


def records_to_json(records: Sequence[sweep.SweepRecord],
                    axis_names: Sequence[str]) -> list:
    """The same fields as the CSV plus the split, incentives and any
    per-point error."""
    frame = records_to_df(records, axis_names)
    rows = []
    for record, (_, row) in zip(records, frame.iterrows()):
        entry = {key: _json_number(value) for key, value in row.items()}
        entry['feasible'] = bool(record.feasible)
        entry['alpha'] = [_json_number(a) for a in record.alpha]
        entry['theta'] = [_json_number(t) for t in record.theta]
        if record.error:
            entry['error'] = record.error
        rows.append(entry)
    return rows


def write_json(data, filepath: str):
    drive.write_file(
        filepath, 'wt', lambda file: file.write(
            json.dumps(data, indent=2, sort_keys=True) + '\n'))


def write_records(records: Sequence[sweep.SweepRecord],
                  axis_names: Sequence[str], directory: str,
                  stem: str) -> List[str]:
    """Writes `<stem>.csv` and `<stem>.json` and returns their paths."""
    csv_path = f'{directory}/{stem}.csv'
    json_path = f'{directory}/{stem}.json'
    write_csv(records_to_df(records, axis_names), csv_path)
    write_json(records_to_json(records, axis_names), json_path)
    return [csv_path, json_path]


def demand_levels_to_df(levels: Sequence[sweep.DemandLevel],
                        player_ids: Sequence[str]) -> pd.DataFrame:
    """alpha* and the feasible participation interval per demand level."""
    rows = []
    for level in levels:
        design = level.design
        row = {'demand': level.demand, 'feasible': bool(design.feasible)}
        for k, player_id in enumerate(player_ids):
            row[f'alpha_{player_id}'] = (design.alpha[k]
                                         if design.alpha else math.nan)
            row[f'theta_{player_id}'] = (design.theta[k]
                                         if design.theta else math.nan)
        point = design.point
        row['welfare'] = point.welfare if point is not None else math.nan
        row['ties'] = len(design.ties)
        low, high = level.feasible_alpha or (math.nan, math.nan)
        row['feasible_alpha_min'] = low
        row['feasible_alpha_max'] = high
        rows.append(row)
    return pd.DataFrame(rows)


def theta_intervals_to_df(
        intervals: Sequence[sweep.ThetaInterval]) -> pd.DataFrame:
    return pd.DataFrame([{
        'isru_plant_mass': interval.plant_mass,
        'alpha': interval.alpha,
        'theta_min': interval.theta_min,
        'theta_max': interval.theta_max,
        'width': interval.width,
    } for interval in intervals],
                        columns=[
                            'isru_plant_mass', 'alpha', 'theta_min',
                            'theta_max', 'width'
                        ])


def traces_to_df(traces: Sequence[sweep.ArgmaxTrace]) -> pd.DataFrame:
    return pd.DataFrame([{
        'fixed_player': trace.fixed_player,
        'fixed_alpha': trace.fixed_alpha,
        'best_alpha':
            trace.best_alpha if trace.best_alpha is not None else math.nan,
        'nash_product': trace.nash_product,
    } for trace in traces],
                        columns=[
                            'fixed_player', 'fixed_alpha', 'best_alpha',
                            'nash_product'
                        ])


def design_table(design: bargaining.IncentiveDesign,
                 player_ids: Sequence[str]) -> str:
    """Human-readable design summary; currency in $M to three significant
    figures."""
    lines = [f'Scenario {design.scenario} ({design.method})']
    if not design.feasible:
        lines.append(f'No design: {design.reason}')
    for k, player_id in enumerate(player_ids):
        alpha = design.alpha[k] if design.alpha else math.nan
        theta = design.theta[k] if design.theta else math.nan
        lines.append(f'  {player_id}: alpha={alpha:.2f} theta={theta:.4f}')
    point = design.point
    if point is not None:
        lines.append(f'  u_o={format_money(point.u_o)}')
        for player_id, utility in zip(player_ids, point.u_p):
            lines.append(f'  u_{player_id}={format_money(utility)}')
        lines.append(f'  welfare={format_money(point.welfare)} '
                     f'nash_product={point.nash_product:.6g}')
    if len(design.ties) > 1:
        lines.append(f'  {len(design.ties)} co-optimal designs:')
        for alpha, _ in design.ties:
            lines.append(f'    alpha={tuple(round(a, 6) for a in alpha)}')
    return '\n'.join(lines)


def format_money(value: float) -> str:
    """$M with three significant figures, e.g. $2,060M."""
    if not math.isfinite(value):
        return f'${value}'
    millions = float(f'{value / 1e6:.3g}')
    if abs(millions) >= 100:
        return f'${millions:,.0f}M'
    return f'${millions:.3g}M'
