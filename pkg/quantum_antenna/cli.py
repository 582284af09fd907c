"""
Command line interface - config ingestion, command dispatch, presets and sweeps

Every runner returns a result dictionary: {'success': True, 'files': [...], ...}
or {'success': False, 'error': ..., 'error_type': ..., 'exit_code': ...}.
"""

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from functools import partial
from typing import Any, Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

from .config import COMMANDS, FORMATS, PRESET_IDS, ConfigLoader, RunConfig
from .dynamics import (
    TRAJECTORY_COLUMNS,
    DensityMatrix,
    SystemVariant,
    integrate,
    steady_state_report,
    system_for,
)
from .errors import InvalidParameter, QuantumAntennaError
from .export import make_table, polar_plot_rows, write_json, write_table
from .params import Obliquity, PsiMode, ResonantSource
from .radiation import (
    PATTERN_COLUMNS,
    SPECTRUM_COLUMNS,
    compare_with_oracle,
    line_analysis,
    line_weights,
    line_widths,
    omega_grid,
    pattern_table,
    spectrum_table,
    theta_grid_deg,
)
from .relaxation import radiative_rate_model, relaxation_rates

logger = logging.getLogger(__name__)

GAMMA_COLUMNS = ('omega_k', 'gamma', 'gamma_over_a', 'gamma_point_dipole')
POLAR_COLUMNS = ('theta_deg', 'total_db', 'central_db', 'plus_db', 'minus_db')
POINT_DIPOLE_INTEGRAL = 2.0 / 3.0
ENV_CONFIG = 'QUANTUM_ANTENNA_CONFIG'
ENV_LOG_LEVEL = 'QUANTUM_ANTENNA_LOG_LEVEL'


def _header(config: RunConfig, columns, **extra) -> Dict[str, Any]:
    metadata = {
        'config': config.resolved_json(),
        'flags': config.flags.to_dict(),
        'columns': list(columns),
    }
    metadata.update(extra)
    return metadata


def _gamma_for_spectrum(config: RunConfig) -> float:
    if config.params.gamma is not None:
        return config.params.gamma
    return relaxation_rates(config.params, config.envelope(), **config.quad_options()).gamma_omega


def _run_pattern(config: RunConfig, stem: str) -> Dict[str, Any]:
    grid = config.theta
    theta_deg = theta_grid_deg(grid.start, grid.stop, grid.step)
    mode = config.flags.psi_mode
    rows = pattern_table(theta_deg, config.params, mode)
    grid_meta = {'theta_grid': {'start': grid.start, 'stop': grid.stop, 'step': grid.step}}

    files = [
        write_table(os.path.join(config.output_dir, f"{stem}_pattern"),
                    make_table(PATTERN_COLUMNS, rows, _header(config, PATTERN_COLUMNS, **grid_meta)),
                    config.output_format, config.resolved()),
        write_table(os.path.join(config.output_dir, f"{stem}_pattern_polar"),
                    make_table(POLAR_COLUMNS, polar_plot_rows(rows, config.plot_floor_db),
                               _header(config, POLAR_COLUMNS, scale='dB re global maximum',
                                       floor_db=config.plot_floor_db, **grid_meta)),
                    config.output_format, config.resolved()),
    ]

    analysis = line_analysis(config.params, mode, theta_deg)
    summary = {'config': config.resolved(), 'lines': analysis.as_dict()}
    if config.oracle:
        comparison = compare_with_oracle(config.params, theta_deg)
        summary['oracle'] = {'deviations': comparison['deviations'], 'selected': comparison['selected']}
    files.append(write_json(os.path.join(config.output_dir, f"{stem}_lines.json"), summary))
    return {'files': files, 'lines': analysis.as_dict()}


def _run_spectrum(config: RunConfig, stem: str) -> Dict[str, Any]:
    params = config.params
    gamma = _gamma_for_spectrum(config)
    center = params.omega0 if config.omega.center is None else config.omega.center
    omegas = omega_grid(center, config.omega.half_span, config.omega.points)
    grid = config.spectrum_theta
    theta_deg = theta_grid_deg(grid.start, grid.stop, grid.step)

    rows = spectrum_table(omegas, theta_deg, params, gamma, config.flags, config.spectrum_prefactor)
    table = make_table(SPECTRUM_COLUMNS, rows, _header(config, SPECTRUM_COLUMNS, gamma=gamma,
                                                       prefactor=config.spectrum_prefactor))
    files = [write_table(os.path.join(config.output_dir, f"{stem}_spectrum"), table,
                         config.output_format, config.resolved())]

    summary = {
        'config': config.resolved(),
        'gamma': gamma,
        'line_weights': line_weights(omegas, params, gamma),
        'line_widths': line_widths(omegas, params, gamma),
    }
    files.append(write_json(os.path.join(config.output_dir, f"{stem}_lines.json"), summary))
    return {'files': files, 'gamma': gamma}


def _run_dynamics(config: RunConfig, stem: str) -> Dict[str, Any]:
    settings = config.dynamics
    system = system_for(config.params, config.flags, SystemVariant(settings.system),
                        config.envelope(), **config.quad_options())
    t_end = settings.t_end / system.gamma if system.gamma > 0 else settings.t_end
    rho0 = DensityMatrix.from_dict(settings.initial)

    trajectory = integrate(rho0, system, t_end, settings.dt, settings.auto_shrink, settings.max_samples)
    report = steady_state_report(system.gamma, system.nu, system)

    header = _header(config, TRAJECTORY_COLUMNS, dt=trajectory.metadata['dt'],
                     steps=trajectory.metadata['steps'], variant=system.variant)
    files = [write_table(os.path.join(config.output_dir, f"{stem}_trajectory"),
                         make_table(TRAJECTORY_COLUMNS, list(trajectory.rows()), header),
                         config.output_format, config.resolved())]

    final = trajectory.final
    summary = {
        'config': config.resolved(),
        'trajectory': dict(trajectory.metadata, t_end=t_end, samples=len(trajectory)),
        'final_state': dict(zip(TRAJECTORY_COLUMNS[1:], (float(v) for v in final.to_vector()))),
        'final_distance_to_fixed_point': None if report.fixed_point is None else final.distance(report.fixed_point),
        'hermiticity_drift': trajectory.hermiticity_drift(),
        'min_positivity': trajectory.min_positivity(),
        'steady_state': report.as_dict(),
    }
    files.append(write_json(os.path.join(config.output_dir, f"{stem}_steady_state.json"), summary))
    return {'files': files, 'population_mismatch': report.population_mismatch}


def _run_gamma(config: RunConfig, stem: str) -> Dict[str, Any]:
    params = config.params
    quad = config.quad_options()
    model = radiative_rate_model(params, config.envelope(), **quad)
    grid = config.frequency
    frequencies = np.linspace(grid.start, grid.stop, grid.points) if grid.points > 1 else np.array([grid.start])

    rows = []
    for omega_k in frequencies:
        gamma = model.gamma(float(omega_k), **quad)
        ratio = gamma / model.prefactor if model.prefactor > 0 else 0.0
        reference = model.prefactor * (omega_k / params.omega) ** 3 * POINT_DIPOLE_INTEGRAL
        rows.append((omega_k, gamma, ratio, reference))
    logger.debug(f"Evaluated Gamma at {len(rows)} frequencies")

    table = make_table(GAMMA_COLUMNS, rows, _header(config, GAMMA_COLUMNS, prefactor=model.prefactor,
                                                    strength_source=model.source.value))
    files = [write_table(os.path.join(config.output_dir, f"{stem}_gamma"), table,
                         config.output_format, config.resolved())]

    rates = relaxation_rates(params, config.envelope(), **quad)
    summary = {
        'config': config.resolved(),
        'prefactor': model.prefactor,
        'rates': rates.as_dict(),
        # g is null in the undriven limit below resonance (g -> infinity)
        'dressed_basis': {'nu': rates.basis.nu, 'g': None if math.isinf(rates.basis.g) else rates.basis.g,
                          'c': rates.basis.c_norm, 's': rates.basis.s_norm,
                          'degenerate': rates.basis.degenerate},
    }
    files.append(write_json(os.path.join(config.output_dir, f"{stem}_rates.json"), summary))
    return {'files': files, 'prefactor': model.prefactor}


RUNNERS = {
    'pattern': _run_pattern,
    'preset': _run_pattern,
    'spectrum': _run_spectrum,
    'dynamics': _run_dynamics,
    'gamma': _run_gamma,
}


def _failure(e: QuantumAntennaError) -> Dict[str, Any]:
    return {'success': False, 'error': str(e), 'error_type': type(e).__name__, 'exit_code': e.exit_code}


def _execute(config: RunConfig, stem: str) -> Dict[str, Any]:
    try:
        result = RUNNERS[config.command](config, stem)
        result.update({'success': True, 'exit_code': 0})
        return result
    except QuantumAntennaError as e:
        logger.error(f"{config.command} failed: {str(e)}")
        return _failure(e)


def _sweep_point(config: RunConfig, value: float, stem: str) -> Dict[str, Any]:
    """One sweep point; invalid values fail this point only"""
    sweep = config.sweep
    try:
        point = replace(config.with_param(sweep.parameter, value), command=sweep.command)
    except QuantumAntennaError as e:
        logger.error(f"Sweep point {sweep.parameter}={value} rejected: {str(e)}")
        return _failure(e)
    result = _execute(point, stem)
    result['params_fingerprint'] = point.params.fingerprint()
    return result


def _run_sweep(config: RunConfig) -> Dict[str, Any]:
    sweep = config.sweep
    if sweep.command not in RUNNERS or sweep.command == 'preset':
        raise InvalidParameter(f"Sweep cannot repeat command {sweep.command!r}")
    if not sweep.values:
        raise InvalidParameter("Sweep needs at least one value")

    stems = [f"sweep_{sweep.parameter}_{i:03d}" for i in range(len(sweep.values))]
    with ThreadPoolExecutor(max_workers=max(1, sweep.workers)) as pool:
        results = list(pool.map(partial(_sweep_point, config), sweep.values, stems))

    entries = []
    for index, (value, result) in enumerate(zip(sweep.values, results)):
        entries.append({
            'index': index,
            'value': value,
            'params_fingerprint': result.get('params_fingerprint'),
            'status': 'ok' if result['success'] else 'failed',
            'files': result.get('files', []),
            'error': result.get('error'),
        })

    manifest = {
        'timestamp': datetime.now(timezone.utc).isoformat(),
        'command': sweep.command,
        'parameter': sweep.parameter,
        'config': config.resolved(),
        'points': entries,
    }
    manifest_path = write_json(os.path.join(config.output_dir, 'sweep_manifest.json'), manifest)
    failed = [r for r in results if not r['success']]
    logger.info(f"Sweep over {sweep.parameter}: {len(results) - len(failed)}/{len(results)} points ok")

    files = [f for entry in entries for f in entry['files']] + [manifest_path]
    if failed:
        return {'success': False, 'files': files, 'error': failed[0]['error'],
                'error_type': failed[0]['error_type'], 'exit_code': max(r['exit_code'] for r in failed)}
    return {'success': True, 'files': files, 'exit_code': 0, 'manifest': manifest_path}


def run_command(config: RunConfig) -> Dict[str, Any]:
    """
    Run one configured command

    Returns:
        Result dictionary with 'success', 'files' and 'exit_code'
    """
    logger.info(f"Running {config.command} (params {config.params.fingerprint()})")
    if config.command == 'sweep':
        try:
            return _run_sweep(config)
        except QuantumAntennaError as e:
            logger.error(f"sweep failed: {str(e)}")
            return _failure(e)
    stem = config.preset_id or config.command
    return _execute(config, stem)


def run_preset(preset_id: str, config_path: Optional[str] = None,
               overrides: Optional[Dict[str, Any]] = None,
               loader: Optional[ConfigLoader] = None) -> Dict[str, Any]:
    """Write the pattern table, polar plot file and line analysis of a figure preset"""
    try:
        loader = loader or ConfigLoader()
        raw = loader.load(config_path, overrides)
        config = RunConfig.from_dict(raw, preset_id=preset_id)
    except QuantumAntennaError as e:
        logger.error(f"Preset {preset_id} failed: {str(e)}")
        return _failure(e)
    return run_command(config)


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common_options(parser: argparse.ArgumentParser, default=None):
    # sub-commands use SUPPRESS so options given before the sub-command survive
    parser.add_argument('--config', default=default,
                        help=f"YAML configuration file (default: ${ENV_CONFIG})")
    parser.add_argument('--out', default=default, help="Output directory")
    parser.add_argument('--format', default=default, choices=FORMATS, help="Output table format")
    parser.add_argument('--psi-mode', default=default, choices=[m.value for m in PsiMode])
    parser.add_argument('--obliquity', default=default, choices=[m.value for m in Obliquity])
    parser.add_argument('--resonant-source', default=default, choices=[m.value for m in ResonantSource])
    parser.add_argument('--preset', default=default,
                        help=f"Figure preset {'|'.join(PRESET_IDS)}; implies the preset command")
    parser.add_argument('--log-level', default=default, choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help=f"Logging level (default: ${ENV_LOG_LEVEL} or WARNING)")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog='quantum-antenna',
        description="Driven two-level wire antenna: radiation patterns, Mollow spectra and dynamics",
    )
    _add_common_options(parser)
    subcommands = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    for name in COMMANDS:
        sub = subcommands.add_parser(name, help=f"Run the {name} command")
        _add_common_options(sub, default=argparse.SUPPRESS)
        if name == 'preset':
            sub.add_argument('preset_id', nargs='?', help=f"One of {'|'.join(PRESET_IDS)}")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    output = {}
    if args.out:
        output['directory'] = args.out
    if args.format:
        output['format'] = args.format
    if output:
        overrides['output'] = output

    flags = {}
    for name in ('psi_mode', 'obliquity', 'resonant_source'):
        value = getattr(args, name, None)
        if value:
            flags[name] = value
    if flags:
        overrides['flags'] = flags
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    level = args.log_level or os.getenv(ENV_LOG_LEVEL, 'WARNING')
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING),
                        format='%(levelname)s %(name)s: %(message)s')

    preset_id = getattr(args, 'preset_id', None) or args.preset
    command = args.command or ('preset' if preset_id else None)
    if command is None:
        parser.print_usage(sys.stderr)
        return 1
    if command == 'preset' and not preset_id:
        logger.error("The preset command needs a preset id")
        return 1

    try:
        raw = ConfigLoader().load(args.config or os.getenv(ENV_CONFIG), _overrides(args))
        config = RunConfig.from_dict(raw, command, preset_id)
    except QuantumAntennaError as e:
        logger.error(str(e))
        return e.exit_code

    result = run_command(config)
    if result['success']:
        for path in result['files']:
            print(path)
    return int(result['exit_code'])


if __name__ == '__main__':
    sys.exit(main())
