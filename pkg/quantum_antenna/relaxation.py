"""
Dressed Relaxation - Dressed basis, radiative rate Gamma(omega) and rotated
relaxation coefficients gamma_ij
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .envelope import (
    QUAD_EPSABS,
    QUAD_EPSREL,
    QUAD_LIMIT,
    Envelope,
    EnvelopeKind,
    adaptive_quad,
    form_factor,
    sinc,
)
from .errors import InvalidParameter, NonPositiveFrequency
from .params import StrengthSource, ValidatedParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DressedBasis:
    """Eigen-quantities of the driven two-level Hamiltonian in the rotating frame"""

    nu: float
    g: float
    c_norm: float
    detuning: float
    rabi: float
    degenerate: bool = False

    @property
    def s_norm(self) -> float:
        """C g, finite in the g -> infinity limit"""
        return 1.0 if math.isinf(self.g) else self.c_norm * self.g

    @property
    def c2(self) -> float:
        return self.c_norm ** 2

    @property
    def c4(self) -> float:
        return self.c_norm ** 4

    @property
    def kappa(self) -> np.ndarray:
        """kappa = C^2 [[g, 1], [-g^2, -g]]; rank one"""
        c, s = self.c_norm, self.s_norm
        return np.array([[s * c, c * c], [-s * s, -s * c]])

    def hamiltonian(self) -> np.ndarray:
        """Rotating-frame Hamiltonian in the bare basis (|a>, |b>), hbar = 1"""
        return 0.5 * np.array([[self.detuning, -self.rabi], [-self.rabi, -self.detuning]])

    def eigenpairs(self) -> Tuple[Tuple[float, np.ndarray], Tuple[float, np.ndarray]]:
        """(energy, vector) for |Psi_1> = C(g|a> + |b>) and |Psi_2> = C(|a> - g|b>)"""
        c, s = self.c_norm, self.s_norm
        psi1 = np.array([s, c])
        psi2 = np.array([c, -s])
        return (-self.nu, psi1), (self.nu, psi2)

    def eigen_residuals(self) -> Tuple[float, float]:
        h = self.hamiltonian()
        return tuple(float(np.linalg.norm(h @ vec - energy * vec)) for energy, vec in self.eigenpairs())


def dressed_basis(detuning: float, rabi: float) -> DressedBasis:
    """
    nu = sqrt(detuning^2 + rabi^2)/2, g = rabi/(detuning + 2 nu), C = 1/sqrt(1 + g^2)

    Without drive the basis is the bare one: g = 0 above resonance, the
    g -> infinity limit (C = 0) below it, and g = 0 flagged degenerate at
    exact resonance where g is 0/0.
    """
    if rabi < 0:
        raise InvalidParameter(f"Rabi frequency must be >= 0, got {rabi}")
    nu = 0.5 * math.hypot(detuning, rabi)

    if rabi == 0.0 and detuning == 0.0:
        logger.warning("Dressed basis degenerate for detuning=0, rabi=0; using bare states")
        return DressedBasis(nu=nu, g=0.0, c_norm=1.0, detuning=detuning, rabi=rabi, degenerate=True)
    if rabi == 0.0 and detuning < 0.0:
        return DressedBasis(nu=nu, g=math.inf, c_norm=0.0, detuning=detuning, rabi=rabi)

    # both forms are equal; pick the one without cancellation
    if detuning >= 0.0:
        g = rabi / (detuning + 2.0 * nu)
    else:
        g = (2.0 * nu - detuning) / rabi
    c_norm = 1.0 / math.sqrt(1.0 + g * g)
    return DressedBasis(nu=nu, g=g, c_norm=c_norm, detuning=detuning, rabi=rabi)


def angular_integral(omega_k: float, env: Envelope, length: float, omega: float = 1.0,
                     epsabs: float = QUAD_EPSABS, epsrel: float = QUAD_EPSREL,
                     limit: int = QUAD_LIMIT) -> float:
    """
    integral_0^pi sin(theta) cos^2(theta) |F(theta, omega_k)|^2 dtheta,
    taken over u = cos(theta) in [-1, 1]
    """
    ratio = omega_k / omega
    if env.kind is EnvelopeKind.LINEAR_PHASE:
        kl_half = env.k * length / 2.0

        def integrand(u: float) -> float:
            ff = sinc(kl_half * (env.phi - ratio * u))
            return u * u * ff * ff

        # split at the main-lobe maximum
        peak = env.phi / ratio
        edges = [-1.0, peak, 1.0] if -1.0 < peak < 1.0 else [-1.0, 1.0]
        return sum(
            adaptive_quad(integrand, a, b, epsabs, epsrel, limit, what="Gamma angular integral")
            for a, b in zip(edges, edges[1:])
        )

    def generic_integrand(u: float) -> float:
        ff = form_factor(math.acos(u), omega_k, env, length, epsabs, epsrel, limit)
        return u * u * abs(ff) ** 2

    return adaptive_quad(generic_integrand, -1.0, 1.0, epsabs, epsrel, limit, what="Gamma angular integral")


def gamma_of_omega(omega_k: float, env: Envelope, prefactor_A: float, length: float,
                   omega: float = 1.0, **quad_options) -> float:
    """
    Gamma(omega_k) = A (omega_k/omega)^3 * angular_integral(omega_k)

    prefactor_A is A = d^2 omega^3 / pi at the drive frequency omega.
    """
    if omega_k <= 0:
        raise NonPositiveFrequency(f"Emission frequency must be > 0, got {omega_k}")
    if prefactor_A < 0:
        raise InvalidParameter(f"Prefactor A must be >= 0, got {prefactor_A}")
    if prefactor_A == 0.0:
        return 0.0
    scale = prefactor_A * (omega_k / omega) ** 3
    return scale * angular_integral(omega_k, env, length, omega, **quad_options)


class RatesVariant(Enum):
    LITERAL = "literal"
    RESONANT_APPROXIMATION = "resonant-approximation"


@dataclass(frozen=True)
class RelaxationRates:
    """Gamma at omega and omega +/- 2 nu plus the rotated coefficients gamma_ij"""

    basis: DressedBasis
    gamma_omega: float
    gamma_plus: float
    gamma_minus: float
    g11: float
    g12: float
    g21: float
    g22: float
    variant: RatesVariant = RatesVariant.LITERAL

    def as_dict(self) -> dict:
        return {
            'variant': self.variant.value,
            'gamma_omega': self.gamma_omega,
            'gamma_plus': self.gamma_plus,
            'gamma_minus': self.gamma_minus,
            'gamma_11': self.g11,
            'gamma_12': self.g12,
            'gamma_21': self.g21,
            'gamma_22': self.g22,
        }


def relaxation_params(basis: DressedBasis, gamma_omega: float, gamma_plus: float,
                      gamma_minus: float) -> RelaxationRates:
    """gamma_ij exactly as obtained by rotating the Lindblad term into the dressed basis"""
    if min(gamma_omega, gamma_plus, gamma_minus) < 0:
        raise InvalidParameter("Radiative rates must be >= 0")
    # written in C and S = C g so that the g -> infinity limit stays finite
    c, s = basis.c_norm, basis.s_norm
    c2, s2 = c * c, s * s
    g12 = c2 * (2.0 - c2) * gamma_plus + s2 * (1.0 + c2) * gamma_minus
    g21 = s2 * c2 * (gamma_plus - gamma_minus)
    g22 = (s * c * (2.0 - c2) + s2 * s * c) * gamma_omega
    g11 = s * c * (1.0 + 2.0 * c2) * gamma_omega
    return RelaxationRates(basis, gamma_omega, gamma_plus, gamma_minus, g11, g12, g21, g22)


def resonant_rates(gamma: float, nu: float = 0.0) -> RelaxationRates:
    """
    Exact-resonance approximation: Gamma(omega +/- 2 nu) ~ Gamma(omega),
    gamma_12 = 3/2 Gamma, gamma_21 = Gamma/2, gamma_11 = gamma_22 = Gamma
    """
    if gamma < 0:
        raise InvalidParameter(f"Gamma must be >= 0, got {gamma}")
    basis = DressedBasis(nu=nu, g=1.0, c_norm=1.0 / math.sqrt(2.0), detuning=0.0, rabi=2.0 * nu)
    return RelaxationRates(
        basis=basis, gamma_omega=gamma, gamma_plus=gamma, gamma_minus=gamma,
        g11=gamma, g12=1.5 * gamma, g21=0.5 * gamma, g22=gamma,
        variant=RatesVariant.RESONANT_APPROXIMATION,
    )


@dataclass(frozen=True)
class RadiativeModel:
    """Envelope plus resolved prefactor; evaluates Gamma at any emission frequency"""

    envelope: Envelope
    length: float
    omega: float
    prefactor: float
    source: StrengthSource

    def gamma(self, omega_k: float, **quad_options) -> float:
        return gamma_of_omega(omega_k, self.envelope, self.prefactor, self.length, self.omega, **quad_options)


def radiative_rate_model(params: ValidatedParams, envelope: Optional[Envelope] = None,
                         **quad_options) -> RadiativeModel:
    """
    Resolve A: directly, from the dipole (A = d^2 omega^3 / pi), or implied by
    a configured Gamma(omega) as A = Gamma / angular_integral(omega)
    """
    env = envelope or Envelope.linear_phase(params.phi, params.k)
    length = params.length
    source = params.strength_source

    if source is StrengthSource.PREFACTOR:
        prefactor = params.prefactor
    elif source is StrengthSource.DIPOLE:
        prefactor = params.dipole ** 2 * params.omega ** 3 / math.pi
    else:
        integral = angular_integral(params.omega, env, length, params.omega, **quad_options)
        prefactor = params.gamma / integral
        logger.debug(f"Implied prefactor A={prefactor:.6e} from Gamma={params.gamma:.6e}")

    return RadiativeModel(envelope=env, length=length, omega=params.omega, prefactor=prefactor, source=source)


def relaxation_rates(params: ValidatedParams, envelope: Optional[Envelope] = None,
                     **quad_options) -> RelaxationRates:
    """Gamma(omega), Gamma(omega +/- 2 nu) and gamma_ij for validated params"""
    basis = dressed_basis(params.detuning, params.rabi)
    model = radiative_rate_model(params, envelope, **quad_options)

    if model.source in (StrengthSource.GAMMA, StrengthSource.DEFAULT):
        gamma_omega = params.gamma
    else:
        gamma_omega = model.gamma(params.omega, **quad_options)
    gamma_plus = model.gamma(params.omega + 2.0 * basis.nu, **quad_options)
    lower = params.omega - 2.0 * basis.nu
    if lower > 0.0:
        gamma_minus = model.gamma(lower, **quad_options)
    else:
        logger.warning(f"Lower sideband omega - 2 nu = {lower:.6g} has no radiating modes; Gamma- = 0")
        gamma_minus = 0.0

    rates = relaxation_params(basis, gamma_omega, gamma_plus, gamma_minus)
    logger.info(f"Relaxation rates: Gamma={gamma_omega:.6e}, Gamma+={gamma_plus:.6e}, "
                f"Gamma-={gamma_minus:.6e}, nu={basis.nu:.6e}")
    return rates
