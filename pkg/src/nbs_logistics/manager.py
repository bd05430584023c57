"""Runs the command-line commands and records what they produced."""

import math
import os
import time
from typing import Dict, List, Optional, Sequence

import chex
from absl import flags

import bbsimplex
import nbs_logistics
from nbs_logistics import (bargaining, costing, curves, drive, logger,
                           metrics, scenario, sweep)

_CONFIG = flags.DEFINE_string(
    'config', 'lunar_nominal',
    'Scenario JSON file or the name of a bundled scenario.')
_OUT = flags.DEFINE_string('out', None, 'Output directory.')
_TIME_STEP = flags.DEFINE_integer(
    'time_step', None, 'Overrides the scenario time step in days.')
_DUMP_LP = flags.DEFINE_string(
    'dump_lp', None, 'Writes the main assembled problem in LP format.')
_FLOWS = flags.DEFINE_string('flows', None,
                             'Writes the optimal flows of a baseline as CSV.')
_SCENARIO = flags.DEFINE_enum('scenario', '1', ['1', '2', '3'],
                              'Incentive design scenario.')
_ALPHA = flags.DEFINE_list(
    'alpha', None, 'Participation per commercial player (scenario 2).')
_THETA = flags.DEFINE_list('theta', None,
                           'Incentive per commercial player (scenario 3).')
_GRID = flags.DEFINE_float('grid', None,
                           'Participation lattice resolution.')
_SCENARIO1_METHOD = flags.DEFINE_enum(
    'scenario1_method', 'milp', ['milp', 'grid'],
    'Scenario 1 through one joint MILP or a lattice search over MILP costs. '
    'Only the lattice search reports co-optimal designs.')
_CURVES = flags.DEFINE_string(
    'curves', None, 'Curve directory or bundled curve set. Scenario commands '
    'use it instead of MILP solves; curves import reads it.')
_CURVE_GRID = flags.DEFINE_float('curve_grid', 0.1,
                                 'Alpha step of exported cost curves.')
_PLAYER = flags.DEFINE_string('player', None,
                              'Player of an isru study; defaults to the '
                              'first commercial player.')
_SPEC = flags.DEFINE_string('spec', None, 'Sweep spec JSON file.')
_STUDY = flags.DEFINE_enum('study', 'grid',
                           ['grid', 'demand', 'isru', 'multi_player'],
                           'Kind of sweep.')
_DEMANDS = flags.DEFINE_list('demands',
                             ['20000', '36000', '52000', '68000', '84000',
                              '100000'],
                             'Deployment demands in kg for a demand study.')
_PLANT_MASSES = flags.DEFINE_list(
    'plant_masses', ['0', '5000', '10000', '20000'],
    'ISRU plant masses in kg for an isru study.')
_ALPHAS = flags.DEFINE_list(
    'alphas', ['0.2', '0.4', '0.6', '0.8', '1.0'],
    'Participation values of an isru study.')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER_LIMIT = 3
EXIT_NO_DESIGN = 4

DEFAULT_GRID = {'milp': 0.1, 'curves': bargaining.DEFAULT_RESOLUTION}


class UsageError(ValueError):
    """Missing or malformed command-line input."""


@chex.dataclass(frozen=True)
class RunManifest:
    """Provenance of one output set.

    Re-running with the same config hash and flags reproduces every file in
    `outputs`.
    """
    tool_version: str
    config_hash: str
    command: str
    flags: Dict[str, str]
    wall_time: float
    solver: Dict[str, int]
    outputs: List[str]
    scenario: Dict
    started: str


def _floats(name: str, values: Optional[Sequence[str]]) -> List[float]:
    if values is None:
        raise UsageError(f'--{name} is required.')
    try:
        return [float(value) for value in values]
    except ValueError as error:
        raise UsageError(f'--{name}: {error}') from error


def load_config() -> scenario.ScenarioConfig:
    """The scenario named by --config with --time_step applied.

    Raises:
        scenario.ConfigError: unreadable or invalid scenario.
    """
    cfg = scenario.load_scenario(_CONFIG.value)
    if _TIME_STEP.value is not None:
        cfg = scenario.with_time_step(cfg, _TIME_STEP.value)
        diagnostics = scenario.validate_scenario(cfg)
        if diagnostics:
            raise scenario.ConfigError(f'--time_step={_TIME_STEP.value}',
                                       '; '.join(diagnostics))
    return cfg


def prepare_out_dir(flag_values: flags.FlagValues) -> Optional[str]:
    """Creates --out and snapshots the flags, if --out is set.

    Raises:
        UsageError: the directory cannot be created or written.
    """
    directory = _OUT.value
    if directory is None:
        return None
    try:
        drive.initialize_output_dir(directory, flag_values)
    except OSError as error:
        raise UsageError(f'--out={directory}: {error}') from error
    return directory


def write_manifest(directory: str, command: str, cfg: scenario.ScenarioConfig,
                   flag_values: flags.FlagValues, started: float,
                   outputs: List[str]) -> RunManifest:
    """Writes manifest.json next to the outputs."""
    manifest = RunManifest(
        tool_version=nbs_logistics.__version__,
        config_hash=scenario.config_hash(cfg),
        command=command,
        flags={
            name: str(flag_values[name].value)
            for name in sorted(flag_values)
            if flag_values[name].present
        },
        wall_time=time.time() - started,
        solver=costing.SOLVER_STATS.snapshot(),
        outputs=sorted(os.path.basename(path) for path in outputs),
        scenario=scenario.scenario_to_dict(cfg),
        started=time.strftime('%Y-%m-%dT%H:%M:%S', time.localtime(started)))
    metrics.write_json(
        {
            'tool_version': manifest.tool_version,
            'config_hash': manifest.config_hash,
            'command': manifest.command,
            'flags': manifest.flags,
            'wall_time': manifest.wall_time,
            'solver': manifest.solver,
            'outputs': manifest.outputs,
            'scenario': manifest.scenario,
            'started': manifest.started,
        }, os.path.join(directory, 'manifest.json'))
    return manifest


def _dump_lp(problem: bbsimplex.MilpProblem):
    if _DUMP_LP.value:
        text = bbsimplex.to_lp_format(problem)
        drive.write_file(_DUMP_LP.value, 'wt', lambda file: file.write(text))


def cmd_baseline(flag_values: flags.FlagValues) -> int:
    """Prints Q and its cost breakdown."""
    started = time.time()
    cfg = load_config()
    directory = prepare_out_dir(flag_values)
    evaluation = costing.baseline_cost(cfg)
    _dump_lp(evaluation.formulation.problem)
    if not evaluation.feasible:
        logger.log(f'{cfg.name}: the coordinator cannot complete the '
                   'deployment alone.')
        return EXIT_CONFIG
    own = costing.player_cost(cfg, cfg.coordinator.id, 0.0)
    baseline = evaluation.cost - (own.cost if own.feasible else 0.0)
    attribution = costing.attribute_costs(evaluation.formulation,
                                          evaluation.solution)
    print(f'Q = {metrics.format_money(baseline)} ({baseline:.2f})')
    for component, value in attribution.components.items():
        print(f'  {component}: {metrics.format_money(value)} ({value:.2f})')
    outputs = []
    flows = costing.flows_to_df(evaluation.formulation, evaluation.solution)
    if _FLOWS.value:
        metrics.write_csv(flows, _FLOWS.value)
    if directory is not None:
        report = {
            'baseline': baseline,
            'total_cost': attribution.total,
            'components': attribution.components,
            'solver': {
                'status': evaluation.solution.status,
                'nodes': evaluation.solution.nodes,
                'lp_iterations': evaluation.solution.lp_iterations,
                'gap': evaluation.solution.gap,
            },
        }
        path = os.path.join(directory, 'baseline.json')
        metrics.write_json(report, path)
        outputs.append(path)
        write_manifest(directory, 'baseline', cfg, flag_values, started,
                       outputs)
    return EXIT_OK


def _oracle(cfg: scenario.ScenarioConfig,
            grid: Optional[float]) -> tuple:
    """The cost oracle and lattice resolution of a scenario command."""
    if _CURVES.value:
        curve_set = curves.load_curve_set(_CURVES.value, cfg)
        return curves.CurveCostOracle(curve_set), grid or DEFAULT_GRID[
            'curves']
    oracle = curves.MilpCostOracle(cfg, cache=curves.CostCache())
    return oracle, grid or DEFAULT_GRID['milp']


def cmd_scenario(flag_values: flags.FlagValues) -> int:
    """Solves one incentive design scenario and reports the design."""
    started = time.time()
    cfg = load_config()
    scenario_id = int(_SCENARIO.value)
    if scenario_id == 2:
        alpha = _floats('alpha', _ALPHA.value)
    if scenario_id == 3:
        theta = _floats('theta', _THETA.value)
    directory = prepare_out_dir(flag_values)
    oracle, grid = _oracle(cfg, _GRID.value)
    try:
        if scenario_id == 1 and not _CURVES.value and \
                _SCENARIO1_METHOD.value == 'milp':
            design = bargaining.solve_scenario1_milp(cfg)
        elif scenario_id == 1:
            sweep.warm_oracle(oracle, grid, sweep.default_workers())
            design = bargaining.solve_scenario1(oracle, grid)
        elif scenario_id == 2:
            design = bargaining.solve_scenario2(oracle, alpha)
        else:
            sweep.warm_oracle(oracle, grid, sweep.default_workers())
            design = bargaining.solve_scenario3(oracle, theta, grid)
    except ValueError as error:
        if isinstance(error, scenario.ConfigError):
            raise
        raise UsageError(str(error)) from error
    player_ids = list(oracle.players)
    print(metrics.design_table(design, player_ids))
    if directory is not None:
        path = os.path.join(directory, f'scenario{scenario_id}.json')
        metrics.write_json(bargaining.design_to_dict(design, player_ids),
                           path)
        write_manifest(directory, f'scenario {scenario_id}', cfg, flag_values,
                       started, [path])
    if not design.feasible:
        logger.log(f'No mutually beneficial design: {design.reason}')
        return EXIT_NO_DESIGN
    return EXIT_OK


def _curve_factory(curve_set: curves.CurveSet) -> sweep.OracleFactory:

    def factory(_):
        return curves.CurveCostOracle(curve_set)

    return factory


def cmd_sweep(flag_values: flags.FlagValues) -> int:
    """Runs a sweep and writes the CSV/JSON contract plus a manifest."""
    started = time.time()
    cfg = load_config()
    if _OUT.value is None:
        raise UsageError('--out is required.')
    study = _STUDY.value
    spec = None
    if study == 'grid':
        if _SPEC.value is None:
            raise UsageError('--spec is required.')
        spec = sweep.load_sweep_spec(_SPEC.value)
        sweep.check_sweep_spec(cfg, spec)
    directory = prepare_out_dir(flag_values)
    factory = sweep.milp_oracle_factory()
    if _CURVES.value:
        if study in ('demand', 'isru') or (study == 'grid' and any(
                axis.variable in sweep.STRUCTURAL_VARIABLES
                for axis in spec.axes)):
            raise UsageError('Curves cannot follow structural changes.')
        factory = _curve_factory(curves.load_curve_set(_CURVES.value, cfg))

    player_ids = [player.id for player in cfg.commercial_players]
    try:
        if study == 'grid':
            records = sweep.run_sweep(cfg, spec, factory)
            outputs = metrics.write_records(
                records, [axis.name for axis in spec.axes], directory,
                spec.name)
        elif study == 'demand':
            levels = sweep.demand_sensitivity(
                cfg, _floats('demands', _DEMANDS.value), _GRID.value or
                DEFAULT_GRID['milp'], factory)
            path = os.path.join(directory, 'demand_sensitivity.csv')
            metrics.write_csv(metrics.demand_levels_to_df(levels, player_ids),
                              path)
            outputs = [path]
        elif study == 'isru':
            player_id = _PLAYER.value or (player_ids[0] if player_ids else
                                          None)
            if player_id not in player_ids:
                raise UsageError(f'--player={player_id} is not a commercial '
                                 'player.')
            intervals = sweep.isru_sensitivity(
                cfg, _floats('plant_masses', _PLANT_MASSES.value), player_id,
                _floats('alphas', _ALPHAS.value), factory)
            path = os.path.join(directory, 'isru_sensitivity.csv')
            metrics.write_csv(metrics.theta_intervals_to_df(intervals), path)
            outputs = [path]
        else:
            records, traces = sweep.multi_player_grid(
                cfg, _GRID.value or sweep.DEFAULT_ALPHA_STEP,
                oracle_factory=factory)
            names = [f'{sweep.ALPHA}_{k}' for k in player_ids[:2]]
            outputs = metrics.write_records(records, names, directory,
                                            'multi_player_grid')
            path = os.path.join(directory, 'multi_player_traces.csv')
            metrics.write_csv(metrics.traces_to_df(traces), path)
            outputs.append(path)
    except ValueError as error:
        if isinstance(error, scenario.ConfigError):
            raise
        raise UsageError(str(error)) from error
    write_manifest(directory, f'sweep {study}', cfg, flag_values, started,
                   outputs)
    return EXIT_OK


def cmd_curves(action: str, flag_values: flags.FlagValues) -> int:
    """`export` samples MILP cost curves; `import` checks a curve set.

    Both write the curve CSVs to --out.
    """
    started = time.time()
    if action not in ('import', 'export'):
        raise UsageError(f'Unknown curves action {action!r}; expected import '
                         'or export.')
    cfg = load_config()
    if _OUT.value is None:
        raise UsageError('--out is required.')
    if action == 'import':
        if _CURVES.value is None:
            raise UsageError('--curves is required.')
        curve_set = curves.load_curve_set(_CURVES.value, cfg)
    else:
        steps = _CURVE_GRID.value
        if not steps > 0 or not math.isclose(round(1 / steps) * steps, 1.0):
            raise UsageError(f'--curve_grid={steps} does not divide 1.')
        grid = sweep.axis_values(0.0, 1.0, steps)
        oracle = curves.MilpCostOracle(cfg, cache=curves.CostCache())
        curve_set = curves.curve_set_from_oracle(oracle, grid,
                                                 sweep.default_workers())
    directory = prepare_out_dir(flag_values)
    outputs = curves.write_curve_set(curve_set, directory)
    print(f'Q = {metrics.format_money(curve_set.baseline)}; '
          f'{len(outputs)} curves in {directory}')
    write_manifest(directory, f'curves {action}', cfg, flag_values, started,
                   outputs)
    return EXIT_OK


COMMANDS = ('baseline', 'scenario', 'sweep', 'curves')


def run_command(argv: Sequence[str], flag_values: flags.FlagValues) -> int:
    """Dispatches `argv[1:]` and maps failures to exit codes."""
    costing.SOLVER_STATS.reset()
    args = list(argv[1:])
    try:
        if not args or args[0] not in COMMANDS:
            raise UsageError(f'Expected a command: {", ".join(COMMANDS)}; '
                             f'got {args[:1]}.')
        command = args[0]
        if command == 'curves':
            if len(args) != 2:
                raise UsageError('Usage: curves import|export')
            return cmd_curves(args[1], flag_values)
        if len(args) != 1:
            raise UsageError(f'Unexpected arguments: {args[1:]}')
        return {
            'baseline': cmd_baseline,
            'scenario': cmd_scenario,
            'sweep': cmd_sweep,
        }[command](flag_values)
    except (scenario.ConfigError, UsageError, OSError) as error:
        logger.log(f'Error: {error}')
        return EXIT_CONFIG
    except costing.SolverLimitError as error:
        logger.log(f'Solver limit: {error}')
        return EXIT_SOLVER_LIMIT
