"""
Script for computing equilibria, thresholds, profiles and sweeps of traveling waves
"""

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from polars import DataFrame

from data.config import RunConfig, load_config
from data.entities import (
    Direction,
    FrontBranch,
    LimiterKind,
    ModelParams,
    PhaseRegime,
    ProfileType,
    Trajectory,
)
from data.errors import ConfigurationError, NumericalError, StepSizeUnderflow, WaveSolverError
from services.export import (
    make_path,
    profile_frame,
    profile_metadata,
    trajectory_frame,
    trajectory_sidecar,
    write_csv,
    write_json,
    write_parquet,
)
from services.integrate import IntegrationService
from services.phase import PhaseService
from services.profiles import ProfileService
from services.shooting import ShootingService

COMMANDS = ('equilibria', 'portrait', 'shoot', 'profile', 'sweep')
SWEEP_COLUMNS = ['a', 'sigma', 'regime', 'w0_star', 'u_type', 'S_type', 'error']


def parse_floats(text: str) -> list[float]:
    """
    Parses a comma separated list of floats
    :param text: e.g. '0.5,1,2'
    :return: List of floats
    """
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError as ex:
        raise argparse.ArgumentTypeError(f'invalid float list: {text!r}') from ex


def _option_(config: RunConfig, name: str, default=None):
    """
    :param config: Run configuration
    :param name: Option name
    :param default: Value when the option is missing or null
    :return: Option value
    """
    value = config.options.get(name)
    return default if value is None else value


def _float_list_(config: RunConfig, name: str) -> list[float]:
    """
    Reads an option given either as a list or as a comma separated string
    :param config: Run configuration
    :param name: Option name
    :return: Floats, empty when missing
    """
    values = _option_(config, name, [])
    if isinstance(values, str):
        values = parse_floats(values)
    return [float(x) for x in values]


def cmd_equilibria(config: RunConfig) -> list[dict]:
    """
    Computes and writes the equilibria with their linearisation
    :param config: Run configuration
    :return: Equilibrium records
    """
    phase = PhaseService(config.params, config.controls)
    records = [x.to_record() for x in phase.equilibria()]
    text = write_json(records, make_path(config.out, 'equilibria.json'))
    print(text)
    logging.info('Wrote %s equilibria to %s', len(records), config.out)
    return records


def _portrait_run_(
    integration: IntegrationService, w0: float, v0: float, direction: str
) -> tuple[Trajectory, bool]:
    """
    Integrates one seed, rebuilding saturated trajectories from the graph system on underflow
    :return: (trajectory, True when the graph fallback was used)
    """
    try:
        if direction == 'both':
            return integration.integrate_maximal(w0, v0), False
        return integration.integrate(w0, v0, Direction(direction)), False
    except StepSizeUnderflow as ex:
        if not integration.params.limiter.saturated:
            raise
        logging.warning('Seed (%s, %s) underflowed, using the graph system: %s', w0, v0, ex)
        return integration.trajectory_from_graph(w0, v0), True


def cmd_portrait(config: RunConfig) -> dict:
    """
    Integrates every seed of the (v, w) grid and writes one CSV per seed plus an index
    :param config: Run configuration
    :return: Index record
    """
    v_grid = _float_list_(config, 'v_grid')
    w_grid = _float_list_(config, 'w_grid')
    if not v_grid or not w_grid:
        raise ConfigurationError('portrait needs a non-empty v grid and w grid')
    direction = _option_(config, 'direction', 'forward')
    if direction not in ('forward', 'backward', 'both'):
        raise ConfigurationError(f'unknown direction {direction}')

    integration = IntegrationService(config.params, config.controls)
    regime = integration.phase.regime()
    entries = []
    for k, (v0, w0) in enumerate((v, w) for v in v_grid for w in w_grid):
        traj, fallback = _portrait_run_(integration, w0, v0, direction)
        file_name = f'trajectory_{k:04d}.csv'
        write_csv(trajectory_frame(traj), make_path(config.out, file_name, 'portrait'))
        entries.append({
            'file': file_name,
            'w0': w0,
            'v0': v0,
            'graph_fallback': fallback,
            **trajectory_sidecar(traj),
        })

    index = {
        'params': config.params.to_dict(),
        'regime': str(regime),
        'equilibria': [x.to_record() for x in integration.equilibria],
        'trajectories': entries,
    }
    write_json(index, make_path(config.out, 'index.json', 'portrait'))
    logging.info('Wrote %s trajectories (regime %s) to %s', len(entries), regime, config.out)
    return index


def cmd_shoot(config: RunConfig) -> dict:
    """
    Finds w0* at the configured v0 and writes the threshold record
    :param config: Run configuration
    :return: Threshold record
    """
    v0 = _option_(config, 'v0')
    if v0 is None:
        raise ConfigurationError('shoot needs --v0')
    bracket = _float_list_(config, 'bracket') or None
    if bracket is not None and len(bracket) != 2:
        raise ConfigurationError(f'bracket needs two values, got {bracket}')

    shooting = ShootingService(config.params, config.controls)
    result = shooting.find_w0_star(float(v0), tuple(bracket) if bracket else None)
    record = {'params': config.params.to_dict(), **result.to_dict()}
    text = write_json(record, make_path(config.out, 'threshold.json'))
    print(text)
    logging.info('w0* = %s at v0 = %s (%s)', result.w0_star, v0, result.method)
    return record


def cmd_profile(config: RunConfig) -> dict:
    """
    Reconstructs (u, S) and writes the profile CSV with its metadata
    :param config: Run configuration
    :return: Metadata record
    """
    params = config.params
    w0 = _option_(config, 'w0')
    v0 = _option_(config, 'v0')
    if w0 is None or v0 is None:
        raise ConfigurationError('profile needs --w0 and --v0')
    w0, v0 = float(w0), float(v0)
    s0 = float(_option_(config, 's0', 0.0))
    S0 = float(_option_(config, 'S0', 1.0))
    u0 = _option_(config, 'u0')
    if u0 is not None and abs(float(u0) / S0 - w0) > 1e-9 * max(1.0, w0):
        raise ConfigurationError(f'u0 / S0 = {float(u0) / S0} disagrees with w0 = {w0}')

    service = ProfileService(params, config.controls)
    if params.limiter.saturated:
        branch = FrontBranch(_option_(config, 'branch', 'above'))
        profile = service.saturated_front(v0, w0, branch, s0, S0)
    else:
        w0_star = _option_(config, 'w0_star')
        if w0_star is None and abs(v0) > params.v_star:
            w0_star = ShootingService(params, config.controls).find_w0_star(v0).w0_star
        profile = service.solve(
            w0, v0, s0, S0, w0_star=None if w0_star is None else float(w0_star)
        )

    metadata = {'params': params.to_dict(), **profile_metadata(profile)}
    write_csv(profile_frame(profile), make_path(config.out, 'profile.csv'))
    write_json(metadata, make_path(config.out, 'profile.json'))
    logging.info('Profile types u: %s, S: %s', profile.u_type, profile.S_type)
    return metadata


def sweep_point(task: tuple) -> dict:
    """
    Regime, threshold and prescribed types at one (a, sigma) point
    :param task: (params, controls, v0 factor, w0 factor, compute threshold)
    :return: Row
    """
    params, controls, v0_factor, w0_factor, threshold = task
    row = {
        'a': params.a,
        'sigma': params.sigma,
        'regime': str(PhaseService(params, controls).regime()),
        'w0_star': None,
        'u_type': None,
        'S_type': None,
        'error': None,
    }
    if not threshold or row['regime'] in (PhaseRegime.CRITICAL, PhaseRegime.SATURATED):
        return row
    v0 = v0_factor * params.v_star
    try:
        result = ShootingService(params, controls).find_w0_star(v0)
    except WaveSolverError as ex:
        row['error'] = f'{type(ex).__name__}: {ex}'
        return row
    u_type, S_type = ProfileService(params, controls).prescribed_types(
        w0_factor * result.w0_star, v0, result.w0_star
    )
    row.update({'w0_star': result.w0_star, 'u_type': str(u_type), 'S_type': str(S_type)})
    return row


def _sweep_params_(config: RunConfig) -> list[ModelParams]:
    """
    Parameter points of the sweep, from explicit grids or seeded random draws
    """
    base = config.params
    samples = int(_option_(config, 'samples', 0))
    if samples:
        rng = np.random.default_rng(config.seed)
        a_low, a_high = _float_list_(config, 'a_range') or [0.25, 4.0]
        f_low, f_high = _float_list_(config, 'sigma_factor_range') or [0.1, 2.0]
        pairs = list(zip(rng.uniform(a_low, a_high, samples),
                         rng.uniform(f_low, f_high, samples), strict=True))
    else:
        a_values = _float_list_(config, 'a_values')
        factors = _float_list_(config, 'sigma_factors')
        if not a_values or not factors:
            raise ConfigurationError('sweep needs --a-values and --sigma-factors, or --samples')
        pairs = [(a, f) for a in a_values for f in factors]

    points = []
    for a, factor in pairs:
        reference = abs(base.limiter.mu - a) * base.v_star
        if math.isclose(a, base.limiter.mu, rel_tol=1e-12) or reference == 0:
            reference = base.v_star
        points.append(base.copy(update={'a': float(a), 'sigma': float(factor * reference)}))
    return points


def cmd_sweep(config: RunConfig) -> DataFrame:
    """
    Labels a grid of (a, sigma) points and writes sweep.csv and sweep.parquet
    :param config: Run configuration
    :return: Sweep table
    """
    points = _sweep_params_(config)
    v0_factor = float(_option_(config, 'v0_factor', 2.0))
    w0_factor = float(_option_(config, 'w0_factor', 0.5))
    threshold = bool(_option_(config, 'threshold', True))
    workers = int(_option_(config, 'workers', 1))
    tasks = [(p, config.controls, v0_factor, w0_factor, threshold) for p in points]

    logging.info('Sweeping %s parameter points on %s workers', len(tasks), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_point, tasks))
    else:
        rows = [sweep_point(x) for x in tasks]

    frame = DataFrame(rows, schema={
        'a': float, 'sigma': float, 'regime': str, 'w0_star': float,
        'u_type': str, 'S_type': str, 'error': str,
    })
    write_csv(frame, make_path(config.out, 'sweep.csv'))
    write_parquet(frame, make_path(config.out, 'sweep.parquet'))
    logging.info('Wrote %s rows to %s', frame.height, config.out)
    return frame


def build_parser() -> argparse.ArgumentParser:
    """
    Argument parser with one sub command per capability
    :return: Parser
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='JSON run configuration')
    common.add_argument('--out', type=str, help='Output directory')
    common.add_argument('--rtol', type=float, help='Relative tolerance')
    common.add_argument('--atol', type=float, help='Absolute tolerance')
    common.add_argument('--seed', type=int, help='Random seed')
    common.add_argument('--a', type=float, help='Chemotactic coefficient')
    common.add_argument('--sigma', type=float, help='Wave speed')
    common.add_argument('--gamma', type=float, help='Chemical diffusion')
    common.add_argument('--lambda', dest='lambda', type=float, help='Degradation rate')
    common.add_argument('--limiter', type=str, choices=[str(x) for x in LimiterKind])
    common.add_argument('--mu', type=float, help='Viscosity')
    common.add_argument('--c', type=float, help='Saturation speed')
    common.add_argument('--p', type=float, help='Larson exponent')

    parser = argparse.ArgumentParser(description='Keller-Segel traveling wave solver')
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('equilibria', parents=[common], help='Fixed points and stability')

    portrait = commands.add_parser('portrait', parents=[common], help='Trajectories on a grid')
    portrait.add_argument('--v-grid', dest='v_grid', type=parse_floats)
    portrait.add_argument('--w-grid', dest='w_grid', type=parse_floats)
    portrait.add_argument('--direction', choices=['forward', 'backward', 'both'])

    shoot = commands.add_parser('shoot', parents=[common], help='Critical threshold w0*')
    shoot.add_argument('--v0', type=float)
    shoot.add_argument('--bracket', type=parse_floats)

    profile = commands.add_parser('profile', parents=[common], help='Reconstructed (u, S)')
    profile.add_argument('--w0', type=float)
    profile.add_argument('--v0', type=float)
    profile.add_argument('--s0', type=float)
    profile.add_argument('--S0', dest='S0', type=float)
    profile.add_argument('--u0', type=float)
    profile.add_argument('--w0-star', dest='w0_star', type=float)
    profile.add_argument('--branch', choices=[str(x) for x in FrontBranch])

    sweep = commands.add_parser('sweep', parents=[common], help='Regime and threshold table')
    sweep.add_argument('--a-values', dest='a_values', type=parse_floats)
    sweep.add_argument('--sigma-factors', dest='sigma_factors', type=parse_floats)
    sweep.add_argument('--samples', type=int)
    sweep.add_argument('--a-range', dest='a_range', type=parse_floats)
    sweep.add_argument('--sigma-factor-range', dest='sigma_factor_range', type=parse_floats)
    sweep.add_argument('--v0-factor', dest='v0_factor', type=float)
    sweep.add_argument('--w0-factor', dest='w0_factor', type=float)
    sweep.add_argument('--no-threshold', dest='threshold', action='store_const', const=False)
    sweep.add_argument('--workers', type=int)
    return parser


GLOBAL_KEYS = {'command', 'config', 'out', 'rtol', 'atol', 'seed', 'a', 'sigma', 'gamma',
               'lambda', 'limiter', 'mu', 'c', 'p'}
HANDLERS = {
    'equilibria': cmd_equilibria,
    'portrait': cmd_portrait,
    'shoot': cmd_shoot,
    'profile': cmd_profile,
    'sweep': cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    """
    Parses the arguments, loads the configuration and runs the sub command
    :param argv: Command line arguments, sys.argv when None
    :return: 0 on success; failures exit with 2 for configuration and 3 for numerical errors
    """
    args = vars(build_parser().parse_args(argv))
    command = args['command']
    overrides = {k: v for k, v in args.items() if k in GLOBAL_KEYS}
    overrides['options'] = {k: v for k, v in args.items() if k not in GLOBAL_KEYS}

    try:
        config = load_config(args.get('config'), overrides)
        logging.info('Running %s with %s', command, config.params.to_dict())
        HANDLERS[command](config)
    except (ConfigurationError, NumericalError) as ex:
        logging.error('%s failed: %s: %s', command, type(ex).__name__, ex)
        sys.exit(ex.exit_code)
    logging.info('DONE')
    return 0


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    sys.exit(main())
