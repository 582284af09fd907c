"""
Core Parameters - Physical configuration, mode flags and validation

All quantities are dimensionless: the drive frequency sets the unit
(omega = 1 by default) and c = hbar = epsilon_0 = 1, so k = omega.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from scipy import constants

from .errors import (
    InvalidParameter,
    NegativeLength,
    NonPositiveFrequency,
    UltraStrongCoupling,
)

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 1.0e-3


class PsiMode(Enum):
    PAPER_LITERAL = "paper-literal"
    DERIVED = "derived"


class Obliquity(Enum):
    COS2 = "cos2"
    SIN2 = "sin2"


class ResonantSource(Enum):
    PAPER_LITERAL = "paper-literal"
    CONSISTENT = "consistent"


class StrengthSource(Enum):
    GAMMA = "gamma"          # explicit Gamma(omega)
    PREFACTOR = "prefactor"  # A given directly
    DIPOLE = "dipole"        # A = d^2 omega^3 / pi
    DEFAULT = "default"      # nothing configured, DEFAULT_GAMMA


def _coerce_enum(enum_cls, value, name: str):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ', '.join(member.value for member in enum_cls)
        raise InvalidParameter(f"{name} must be one of {{{allowed}}}, got {value!r}")


@dataclass(frozen=True)
class ModeFlags:
    """Switches that resolve the internal inconsistencies of the model equations"""

    psi_mode: PsiMode = PsiMode.DERIVED
    obliquity: Obliquity = Obliquity.SIN2
    resonant_source: ResonantSource = ResonantSource.CONSISTENT

    def __post_init__(self):
        object.__setattr__(self, 'psi_mode', _coerce_enum(PsiMode, self.psi_mode, 'psi_mode'))
        object.__setattr__(self, 'obliquity', _coerce_enum(Obliquity, self.obliquity, 'obliquity'))
        object.__setattr__(
            self, 'resonant_source',
            _coerce_enum(ResonantSource, self.resonant_source, 'resonant_source')
        )

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'ModeFlags':
        data = data or {}
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidParameter(f"Unknown mode flags: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, str]:
        return {
            'psi_mode': self.psi_mode.value,
            'obliquity': self.obliquity.value,
            'resonant_source': self.resonant_source.value,
        }


@dataclass(frozen=True)
class AntennaParams:
    """Raw physical and driving configuration of the wire antenna"""

    omega0: float = 1.0
    omega: float = 1.0
    rabi: float = 0.2
    kl_half: float = 2.0 * math.pi
    phi: float = 0.8
    dipole: Optional[float] = None
    prefactor: Optional[float] = None
    gamma_override: Optional[float] = None

    @property
    def detuning(self) -> float:
        return self.omega0 - self.omega

    @property
    def k(self) -> float:
        return self.omega

    @property
    def length(self) -> float:
        return 2.0 * self.kl_half / self.k

    @property
    def rabi_over_omega(self) -> float:
        return self.rabi / self.omega

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'AntennaParams':
        """Build params from a config section; 'gamma' is accepted for gamma_override"""
        data = dict(data or {})
        data.pop('si', None)
        if 'gamma' in data:
            data['gamma_override'] = data.pop('gamma')
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidParameter(f"Unknown antenna parameters: {sorted(unknown)}")
        converted = {}
        for key, value in data.items():
            if value is None:
                converted[key] = None
                continue
            try:
                converted[key] = float(value)
            except (TypeError, ValueError):
                raise InvalidParameter(f"Parameter {key} must be numeric, got {value!r}")
        return cls(**converted)

    def base_dict(self) -> Dict[str, Optional[float]]:
        return {f.name: getattr(self, f.name) for f in fields(AntennaParams)}

    def fingerprint(self) -> str:
        """Stable short digest of the raw parameters"""
        payload = json.dumps(self.base_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ValidatedParams(AntennaParams):
    """Params that passed validation; derived fields are recomputed on access"""

    strength_source: StrengthSource = StrengthSource.DEFAULT
    warnings: Tuple[str, ...] = field(default=(), compare=True)

    @property
    def gamma(self) -> Optional[float]:
        """Gamma(omega) when it is pinned by configuration, else None"""
        if self.strength_source is StrengthSource.GAMMA:
            return self.gamma_override
        if self.strength_source is StrengthSource.DEFAULT:
            return DEFAULT_GAMMA
        return None

    def with_changes(self, **changes) -> 'ValidatedParams':
        return validate(replace(AntennaParams(**self.base_dict()), **changes))


def _require_finite(name: str, value: Optional[float]):
    if value is not None and not math.isfinite(value):
        raise InvalidParameter(f"{name} must be finite, got {value}")


def validate(params: AntennaParams) -> ValidatedParams:
    """
    Check ranges and resolve the radiative strength source

    Args:
        params: raw (or already validated) antenna parameters

    Returns:
        ValidatedParams; validating a ValidatedParams returns an equal object
    """
    raw = AntennaParams(**params.base_dict())
    for name, value in raw.base_dict().items():
        _require_finite(name, value)

    if raw.omega <= 0:
        raise NonPositiveFrequency(f"Drive frequency omega must be > 0, got {raw.omega}")
    if raw.omega0 <= 0:
        raise NonPositiveFrequency(f"Transition frequency omega0 must be > 0, got {raw.omega0}")
    if raw.rabi < 0:
        raise InvalidParameter(f"Rabi frequency must be >= 0, got {raw.rabi}")
    if raw.rabi >= raw.omega:
        raise UltraStrongCoupling(
            f"Rabi frequency {raw.rabi} reaches drive frequency {raw.omega}; "
            f"rotating-wave model covers rabi < omega only"
        )
    if raw.kl_half < 0:
        raise NegativeLength(f"Half electrical length kl/2 must be >= 0, got {raw.kl_half}")
    for name in ('dipole', 'prefactor', 'gamma_override'):
        value = getattr(raw, name)
        if value is not None and value < 0:
            raise InvalidParameter(f"{name} must be >= 0, got {value}")

    warnings = []
    given = [name for name in ('gamma_override', 'prefactor', 'dipole') if getattr(raw, name) is not None]
    if raw.gamma_override is not None:
        source = StrengthSource.GAMMA
    elif raw.prefactor is not None:
        source = StrengthSource.PREFACTOR
    elif raw.dipole is not None:
        source = StrengthSource.DIPOLE
    else:
        source = StrengthSource.DEFAULT

    if len(given) > 1:
        message = f"Radiative strength given as {given}; using {source.value}"
        warnings.append(message)
        logger.warning(message)

    return ValidatedParams(**raw.base_dict(), strength_source=source, warnings=tuple(warnings))


@dataclass(frozen=True)
class SIParams:
    """SI-unit description of the antenna (angular frequencies in rad/s)"""

    omega_rad_s: float
    omega0_rad_s: float
    rabi_rad_s: float
    length_m: float
    phi: float
    dipole_cm: Optional[float] = None
    gamma_s: Optional[float] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SIParams':
        try:
            return cls(**{key: (None if value is None else float(value)) for key, value in data.items()})
        except TypeError as e:
            raise InvalidParameter(f"Invalid SI parameter block: {e}")


def _prefactor_si(dipole_cm: float, omega_rad_s: float) -> float:
    """A = d^2 omega^3 / (pi eps0 hbar c^3), in units of omega"""
    return dipole_cm ** 2 * omega_rad_s ** 2 / (
        math.pi * constants.epsilon_0 * constants.hbar * constants.c ** 3
    )


def from_si(si: SIParams) -> AntennaParams:
    """Convert SI input to the dimensionless model (omega -> 1, lengths in c/omega)"""
    if si.omega_rad_s <= 0:
        raise NonPositiveFrequency(f"Drive frequency must be > 0, got {si.omega_rad_s} rad/s")
    scale = si.omega_rad_s
    k = si.omega_rad_s / constants.c
    return AntennaParams(
        omega0=si.omega0_rad_s / scale,
        omega=1.0,
        rabi=si.rabi_rad_s / scale,
        kl_half=k * si.length_m / 2.0,
        phi=si.phi,
        prefactor=None if si.dipole_cm is None else _prefactor_si(si.dipole_cm, si.omega_rad_s),
        gamma_override=None if si.gamma_s is None else si.gamma_s / scale,
    )


def to_si(params: AntennaParams, omega_rad_s: float) -> SIParams:
    """Inverse of from_si for a given physical drive frequency"""
    if omega_rad_s <= 0:
        raise NonPositiveFrequency(f"Drive frequency must be > 0, got {omega_rad_s} rad/s")
    scale = omega_rad_s / params.omega
    k = omega_rad_s / constants.c
    dipole = None
    if params.prefactor is not None:
        dipole = math.sqrt(params.prefactor * math.pi * constants.epsilon_0 * constants.hbar
                           * constants.c ** 3 / omega_rad_s ** 2)
    return SIParams(
        omega_rad_s=omega_rad_s,
        omega0_rad_s=params.omega0 * scale,
        rabi_rad_s=params.rabi * scale,
        length_m=2.0 * params.kl_half / k,
        phi=params.phi,
        dipole_cm=dipole,
        gamma_s=None if params.gamma_override is None else params.gamma_override * scale,
    )


def params_from_config(section: Optional[Dict[str, Any]]) -> ValidatedParams:
    """Resolve the 'params' config section, honouring an optional 'si' block"""
    section = dict(section or {})
    si_block = section.get('si')
    if si_block:
        base = from_si(SIParams.from_dict(si_block))
        return validate(base)
    return validate(AntennaParams.from_dict(section))


