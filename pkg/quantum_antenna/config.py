"""
Configuration - YAML defaults, user overrides, figure presets and the resolved RunConfig
"""

import copy
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

import yaml

from .envelope import Envelope, envelope_for
from .errors import ConfigParseError, InvalidParameter, UnknownPreset
from .params import ModeFlags, ValidatedParams, params_from_config

logger = logging.getLogger(__name__)

DEFAULTS_FILE = os.path.join(os.path.dirname(__file__), 'defaults.yaml')
COMMANDS = ('pattern', 'spectrum', 'dynamics', 'gamma', 'sweep', 'preset')
FORMATS = ('csv', 'json')
PRESET_IDS = ('fig2a', 'fig2b', 'fig3a', 'fig3b', 'fig4a', 'fig4b')
REQUIRED_SECTIONS = ('params', 'flags', 'grids', 'dynamics', 'output', 'presets')


def deep_merge(base: Dict[str, Any], override: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Recursively merge override into a copy of base; non-dict values replace"""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ConfigLoader:
    """Loads built-in defaults with fail-safe fallback and merges user files over them"""

    def __init__(self, defaults_path: Optional[str] = None):
        self.defaults_path = defaults_path or DEFAULTS_FILE
        self.defaults = self._load_defaults()

    def _load_defaults(self) -> Dict[str, Any]:
        if not os.path.exists(self.defaults_path):
            logger.warning(f"No defaults file at {self.defaults_path}, using fail-safe defaults")
            return self._get_fail_safe_config()

        try:
            with open(self.defaults_path, 'r') as f:
                config = yaml.safe_load(f)

            if not self._validate_config(config):
                logger.warning("Invalid defaults file structure, using fail-safe defaults")
                return self._get_fail_safe_config()

            return config

        except Exception as e:
            logger.warning(f"Failed to load defaults: {str(e)}, using fail-safe defaults")
            return self._get_fail_safe_config()

    def _get_fail_safe_config(self) -> Dict[str, Any]:
        """Minimal in-code defaults matching defaults.yaml"""
        return {
            'params': {'omega0': 1.0, 'omega': 1.0, 'rabi': 0.2, 'kl_half': 2.0 * math.pi, 'phi': 0.8,
                       'gamma': None, 'prefactor': None, 'dipole': None},
            'envelope': None,
            'flags': ModeFlags().to_dict(),
            'grids': {
                'theta': {'start': 0.0, 'stop': 90.0, 'step': 0.25},
                'spectrum_theta': {'start': 5.0, 'stop': 90.0, 'step': 5.0},
                'omega': {'center': None, 'half_span': 0.5, 'points': 2001},
                'frequency': {'start': 0.5, 'stop': 1.5, 'points': 101},
            },
            'spectrum': {'prefactor': 1.0},
            'dynamics': {'system': 'resonant', 't_end': 40.0, 'dt': None, 'auto_shrink': True,
                         'max_samples': 2001, 'initial': {'rho11': 1.0, 'rho12_re': 0.0, 'rho12_im': 0.0}},
            'quadrature': {'epsabs': 1e-14, 'epsrel': 1e-10, 'limit': 200},
            'analysis': {'oracle': False},
            'output': {'directory': 'output', 'format': 'csv', 'plot_floor_db': -60.0},
            'sweep': {'command': 'pattern', 'parameter': 'rabi', 'values': [0.0, 0.05, 0.1, 0.2], 'workers': 4},
            'presets': {
                'fig2a': {'kl_half_pi': 2.0, 'phi': 0.8, 'rabi_over_omega': 0.001},
                'fig2b': {'kl_half_pi': 2.0, 'phi': 0.8, 'rabi_over_omega': 0.2},
                'fig3a': {'kl_half_pi': 4.0, 'phi': 1.0, 'rabi_over_omega': 0.2},
                'fig3b': {'kl_half_pi': 4.0, 'phi': 1.2, 'rabi_over_omega': 0.2},
                'fig4a': {'kl_half_pi': 15.0, 'phi': 0.8, 'rabi_over_omega': 0.2},
                'fig4b': {'kl_half_pi': 15.0, 'phi': 1.2, 'rabi_over_omega': 0.2},
            },
        }

    def _validate_config(self, config: Any) -> bool:
        return isinstance(config, dict) and all(section in config for section in REQUIRED_SECTIONS)

    def read_user_file(self, path: str) -> Dict[str, Any]:
        """Parse a user YAML file; errors here are fatal"""
        try:
            with open(path, 'r') as f:
                data = yaml.safe_load(f)
        except OSError as e:
            raise ConfigParseError(f"Cannot read config file {path}: {e}")
        except yaml.YAMLError as e:
            raise ConfigParseError(f"Cannot parse config file {path}: {e}")

        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigParseError(f"Config file {path} must hold a mapping at top level")
        return data

    def load(self, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Defaults, then the user file, then overrides"""
        config = copy.deepcopy(self.defaults)
        if path:
            config = deep_merge(config, self.read_user_file(path))
            logger.debug(f"Merged config file {path}")
        return deep_merge(config, overrides)


def apply_preset(config: Dict[str, Any], preset_id: str) -> Dict[str, Any]:
    """Override params with a figure preset (kl_half in units of pi, Rabi in units of omega)"""
    presets = config.get('presets') or {}
    if preset_id not in presets:
        raise UnknownPreset(f"Unknown preset {preset_id!r}; choose one of {sorted(presets) or list(PRESET_IDS)}")

    preset = presets[preset_id]
    params = dict(config.get('params') or {})
    params.pop('si', None)
    try:
        omega = float(params.get('omega', 1.0))
        params.update({
            'kl_half': float(preset['kl_half_pi']) * math.pi,
            'phi': float(preset['phi']),
            'rabi': float(preset['rabi_over_omega']) * omega,
        })
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigParseError(f"Malformed preset {preset_id!r}: {e}")
    resolved = deep_merge(config, {})
    resolved['params'] = params
    return resolved


@dataclass(frozen=True)
class ThetaGrid:
    start: float
    stop: float
    step: float

    @classmethod
    def from_dict(cls, data: Dict[str, Any], name: str) -> 'ThetaGrid':
        grid = cls(float(data['start']), float(data['stop']), float(data['step']))
        if grid.step <= 0:
            raise InvalidParameter(f"grids.{name}.step must be > 0, got {grid.step}")
        if grid.stop <= grid.start:
            raise InvalidParameter(f"grids.{name} is empty: start={grid.start}, stop={grid.stop}")
        return grid


@dataclass(frozen=True)
class OmegaGrid:
    center: Optional[float]
    half_span: float
    points: int


@dataclass(frozen=True)
class FrequencyGrid:
    start: float
    stop: float
    points: int


@dataclass(frozen=True)
class DynamicsSettings:
    system: str = 'resonant'
    t_end: float = 40.0
    dt: Optional[float] = None
    auto_shrink: bool = True
    max_samples: int = 2001
    initial: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepSettings:
    command: str = 'pattern'
    parameter: str = 'rabi'
    values: List[float] = field(default_factory=list)
    workers: int = 4


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for one command run"""

    params: ValidatedParams
    flags: ModeFlags
    command: str
    theta: ThetaGrid
    spectrum_theta: ThetaGrid
    omega: OmegaGrid
    frequency: FrequencyGrid
    dynamics: DynamicsSettings
    sweep: SweepSettings
    quadrature: Dict[str, Any]
    output_dir: str
    output_format: str
    plot_floor_db: float
    spectrum_prefactor: float = 1.0
    oracle: bool = False
    preset_id: Optional[str] = None
    envelope_samples: Optional[Dict[str, Any]] = None
    raw: Dict[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, config: Dict[str, Any], command: str = 'pattern',
                  preset_id: Optional[str] = None) -> 'RunConfig':
        """
        Resolve a merged config dictionary

        Raises:
            UnknownPreset, InvalidParameter, ConfigParseError
        """
        if preset_id is not None:
            command = 'preset'
            config = apply_preset(config, preset_id)
        if command not in COMMANDS:
            raise InvalidParameter(f"Unknown command {command!r}; choose one of {list(COMMANDS)}")

        try:
            grids = config['grids']
            output = config['output']
            dynamics = config.get('dynamics') or {}
            sweep = config.get('sweep') or {}

            output_format = str(output.get('format', 'csv'))
            if output_format not in FORMATS:
                raise InvalidParameter(f"output.format must be one of {list(FORMATS)}, got {output_format!r}")

            omega_grid = OmegaGrid(
                center=None if grids['omega'].get('center') is None else float(grids['omega']['center']),
                half_span=float(grids['omega']['half_span']),
                points=int(grids['omega']['points']),
            )
            if omega_grid.points < 2 or omega_grid.half_span <= 0:
                raise InvalidParameter("grids.omega needs points >= 2 and half_span > 0")
            frequency = FrequencyGrid(float(grids['frequency']['start']), float(grids['frequency']['stop']),
                                      int(grids['frequency']['points']))
            if frequency.points < 1 or frequency.start <= 0 or frequency.stop < frequency.start:
                raise InvalidParameter("grids.frequency needs 0 < start <= stop and points >= 1")

            return cls(
                params=params_from_config(config.get('params')),
                flags=ModeFlags.from_dict(config.get('flags')),
                command=command,
                theta=ThetaGrid.from_dict(grids['theta'], 'theta'),
                spectrum_theta=ThetaGrid.from_dict(grids['spectrum_theta'], 'spectrum_theta'),
                omega=omega_grid,
                frequency=frequency,
                dynamics=DynamicsSettings(
                    system=str(dynamics.get('system', 'resonant')),
                    t_end=float(dynamics.get('t_end', 40.0)),
                    dt=None if dynamics.get('dt') is None else float(dynamics['dt']),
                    auto_shrink=bool(dynamics.get('auto_shrink', True)),
                    max_samples=int(dynamics.get('max_samples', 2001)),
                    initial=dict(dynamics.get('initial') or {}),
                ),
                sweep=SweepSettings(
                    command=str(sweep.get('command', 'pattern')),
                    parameter=str(sweep.get('parameter', 'rabi')),
                    values=[float(v) for v in sweep.get('values') or []],
                    workers=int(sweep.get('workers', 4)),
                ),
                quadrature=dict(config.get('quadrature') or {}),
                output_dir=str(output.get('directory', 'output')),
                output_format=output_format,
                plot_floor_db=float(output.get('plot_floor_db', -60.0)),
                spectrum_prefactor=float((config.get('spectrum') or {}).get('prefactor', 1.0)),
                oracle=bool((config.get('analysis') or {}).get('oracle', False)),
                preset_id=preset_id,
                envelope_samples=config.get('envelope'),
                raw=config,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigParseError(f"Malformed configuration: {type(e).__name__}: {e}")

    def envelope(self) -> Envelope:
        return envelope_for(self.params.phi, self.params.k, self.envelope_samples)

    def quad_options(self) -> Dict[str, Any]:
        allowed = ('epsabs', 'epsrel', 'limit')
        return {key: self.quadrature[key] for key in allowed if key in self.quadrature}

    def with_param(self, name: str, value: float) -> 'RunConfig':
        """Copy with one physical parameter changed (used by sweeps)"""
        key = 'gamma_override' if name == 'gamma' else name
        try:
            params = self.params.with_changes(**{key: value})
        except TypeError:
            raise InvalidParameter(f"Cannot sweep unknown parameter {name!r}")
        raw = deep_merge(self.raw, {'params': {name: value}})
        return replace(self, params=params, raw=raw)

    def resolved(self) -> Dict[str, Any]:
        """Canonical description written into every output header"""
        params = self.params.base_dict()
        params['length'] = self.params.length
        params['strength_source'] = self.params.strength_source.value
        return {
            'command': self.command,
            'preset': self.preset_id,
            'params': params,
            'params_fingerprint': self.params.fingerprint(),
            'flags': self.flags.to_dict(),
        }

    def resolved_json(self) -> str:
        return json.dumps(self.resolved(), sort_keys=True, separators=(',', ':'))
