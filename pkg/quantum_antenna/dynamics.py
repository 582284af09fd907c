"""
Dynamics - Dressed-basis density-matrix equations, fixed-step RK4 integration
and steady states

The state is carried as the real vector (rho11, Re rho12, Im rho12, Re rho21,
Im rho21). rho21 is stored separately from rho12 so that Hermiticity stays a
measurable property of the integrator.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .envelope import Envelope
from .errors import (
    InvalidParameter,
    NonHermitianInitialState,
    SingularSystem,
    StepTooLarge,
)
from .params import ModeFlags, ResonantSource, ValidatedParams
from .relaxation import RelaxationRates, dressed_basis, relaxation_rates

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ('t', 'rho11', 'rho12_re', 'rho12_im', 'rho21_re', 'rho21_im')
HERMITICITY_TOL = 1e-9
STEP_SAFETY = 0.05
DEFAULT_MAX_SAMPLES = 2001
STATE_SIZE = 5


@dataclass(frozen=True)
class DensityMatrix:
    """Two-level density matrix in the dressed basis; rho22 = 1 - rho11"""

    rho11: float
    rho12: complex = 0j
    rho21: complex = 0j

    @classmethod
    def diagonal(cls, rho11: float) -> 'DensityMatrix':
        return cls(rho11=float(rho11), rho12=0j, rho21=0j)

    @classmethod
    def hermitian(cls, rho11: float, rho12: complex) -> 'DensityMatrix':
        rho12 = complex(rho12)
        return cls(rho11=float(rho11), rho12=rho12, rho21=rho12.conjugate())

    @classmethod
    def from_vector(cls, y: np.ndarray) -> 'DensityMatrix':
        return cls(rho11=float(y[0]), rho12=complex(y[1], y[2]), rho21=complex(y[3], y[4]))

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'DensityMatrix':
        """Initial state from config; rho21 defaults to conj(rho12)"""
        data = data or {}
        try:
            rho11 = float(data.get('rho11', 1.0))
            rho12 = complex(float(data.get('rho12_re', 0.0)), float(data.get('rho12_im', 0.0)))
            if 'rho21_re' in data or 'rho21_im' in data:
                rho21 = complex(float(data.get('rho21_re', 0.0)), float(data.get('rho21_im', 0.0)))
            else:
                rho21 = rho12.conjugate()
        except (TypeError, ValueError) as e:
            raise InvalidParameter(f"Invalid initial state: {e}")
        return cls(rho11=rho11, rho12=rho12, rho21=rho21)

    @property
    def rho22(self) -> float:
        return 1.0 - self.rho11

    @property
    def hermiticity_defect(self) -> float:
        return abs(self.rho21 - self.rho12.conjugate())

    @property
    def positivity_defect(self) -> float:
        """rho11 (1 - rho11) - |rho12|^2; negative values mean a non-physical state"""
        return self.rho11 * self.rho22 - abs(self.rho12) ** 2

    def to_vector(self) -> np.ndarray:
        return np.array([self.rho11, self.rho12.real, self.rho12.imag, self.rho21.real, self.rho21.imag])

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.rho11, self.rho12], [self.rho21, self.rho22]], dtype=complex)

    def distance(self, other: 'DensityMatrix') -> float:
        """Componentwise maximum deviation"""
        return float(np.max(np.abs(self.to_vector() - other.to_vector())))


RhsFunction = Callable[[DensityMatrix], DensityMatrix]


def rhs_general(rho: DensityMatrix, rates: RelaxationRates, nu: float) -> DensityMatrix:
    """
    Time derivative for arbitrary detuning, returned as a DensityMatrix of
    derivatives (d rho11, d rho12, d rho21)
    """
    c, s = rates.basis.c_norm, rates.basis.s_norm
    c4, s4 = c ** 4, s ** 4
    gamma = rates.gamma_omega
    coherence = (rho.rho12 + rho.rho21).real

    d11 = -0.5 * (
        2.0 * gamma * (c4 + s4) * rho.rho11
        - 2.0 * gamma * s4
        + s * c ** 3 * (rates.gamma_plus - rates.gamma_minus) * coherence
    )
    source = 0.5 * rates.g22 + 0.5 * (rates.g11 - rates.g22) * rho.rho11
    d12 = (-2j * nu * rho.rho12 - 0.5 * rates.g12 * rho.rho12 - 0.5 * rates.g21 * rho.rho21 + source)
    d21 = (2j * nu * rho.rho21 - 0.5 * rates.g12 * rho.rho21 - 0.5 * rates.g21 * rho.rho12 + source)
    return DensityMatrix(rho11=d11, rho12=d12, rho21=d21)


def rhs_resonant(rho: DensityMatrix, gamma: float, nu: float,
                 mode: ResonantSource = ResonantSource.CONSISTENT) -> DensityMatrix:
    """
    Exact-resonance equations. The population source term is Gamma/4 in
    consistent mode and Gamma/2 in paper-literal mode; the coherence
    equations are shared.
    """
    mode = ResonantSource(mode)
    population_source = 0.25 * gamma if mode is ResonantSource.CONSISTENT else 0.5 * gamma

    d11 = -0.5 * gamma * rho.rho11 + population_source
    d12 = -2j * nu * rho.rho12 - 0.75 * gamma * rho.rho12 - 0.25 * gamma * rho.rho21 + 0.5 * gamma
    d21 = 2j * nu * rho.rho21 - 0.75 * gamma * rho.rho21 - 0.25 * gamma * rho.rho12 + 0.5 * gamma
    return DensityMatrix(rho11=d11, rho12=d12, rho21=d21)


class SystemVariant(Enum):
    GENERAL = "general"
    RESONANT = "resonant"


@dataclass(frozen=True)
class DensitySystem:
    """Right-hand side plus the rates that set the time scale and bound the RK4 step"""

    variant: str
    rhs: RhsFunction
    nu: float
    gamma: float
    rate_scale: Optional[float] = None
    params_hash: Optional[str] = None

    def vector_field(self, y: np.ndarray) -> np.ndarray:
        return self.rhs(DensityMatrix.from_vector(y)).to_vector()

    def step_bound(self) -> float:
        """0.05 * min(1/(2 nu), 1/Gamma); infinite for a frozen system"""
        rate = self.gamma if self.rate_scale is None else self.rate_scale
        scales = [1.0 / (2.0 * self.nu) if self.nu > 0 else math.inf,
                  1.0 / rate if rate > 0 else math.inf]
        return STEP_SAFETY * min(scales)


def general_system(rates: RelaxationRates, nu: Optional[float] = None,
                   params_hash: Optional[str] = None) -> DensitySystem:
    nu = rates.basis.nu if nu is None else nu
    scale = max(rates.gamma_omega, rates.gamma_plus, rates.gamma_minus, abs(rates.g12), abs(rates.g21))
    return DensitySystem(
        variant=f"{SystemVariant.GENERAL.value}/{rates.variant.value}",
        rhs=lambda rho: rhs_general(rho, rates, nu),
        nu=nu, gamma=rates.gamma_omega, rate_scale=scale, params_hash=params_hash,
    )


def resonant_system(gamma: float, nu: float, mode: ResonantSource = ResonantSource.CONSISTENT,
                    params_hash: Optional[str] = None) -> DensitySystem:
    if gamma < 0:
        raise InvalidParameter(f"Gamma must be >= 0, got {gamma}")
    mode = ResonantSource(mode)
    return DensitySystem(
        variant=f"{SystemVariant.RESONANT.value}/{mode.value}",
        rhs=lambda rho: rhs_resonant(rho, gamma, nu, mode),
        nu=nu, gamma=gamma, params_hash=params_hash,
    )


def system_for(params: ValidatedParams, flags: ModeFlags,
               variant: SystemVariant = SystemVariant.RESONANT, envelope: Optional[Envelope] = None,
               **quad_options) -> DensitySystem:
    """Build the equations selected in configuration for validated params"""
    variant = SystemVariant(variant)
    fingerprint = params.fingerprint()
    if variant is SystemVariant.GENERAL:
        rates = relaxation_rates(params, envelope, **quad_options)
        return general_system(rates, params_hash=fingerprint)

    nu = dressed_basis(params.detuning, params.rabi).nu
    if params.detuning != 0.0:
        logger.warning(f"Resonant equations requested at detuning {params.detuning}; "
                       f"off-resonance terms are dropped")
    gamma = params.gamma
    if gamma is None:
        gamma = relaxation_rates(params, envelope, **quad_options).gamma_omega
    return resonant_system(gamma, nu, flags.resonant_source, params_hash=fingerprint)


def _as_vector_field(rhs) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(rhs, DensitySystem):
        return rhs.vector_field
    return lambda y: rhs(DensityMatrix.from_vector(y)).to_vector()


def affine_generator(rhs) -> Tuple[np.ndarray, np.ndarray]:
    """
    Matrix M and source c with d/dt y = M y + c on the real state vector

    Every right-hand side of this model is affine, so M and c follow from
    evaluating it at the origin and at the unit vectors.
    """
    vector_field = _as_vector_field(rhs)
    source = vector_field(np.zeros(STATE_SIZE))
    generator = np.empty((STATE_SIZE, STATE_SIZE))
    for j, unit in enumerate(np.eye(STATE_SIZE)):
        generator[:, j] = vector_field(unit) - source
    return generator, source


def _solve(matrix: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if np.linalg.cond(matrix) * np.finfo(float).eps > 1e-2:
        raise SingularSystem(f"{what}: linear system is singular")
    try:
        return np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularSystem(f"{what}: {e}")


def fixed_point(rhs) -> DensityMatrix:
    """Stationary state of any affine right-hand side"""
    generator, source = affine_generator(rhs)
    return DensityMatrix.from_vector(_solve(generator, -source, "fixed point"))


def relaxation_spectrum(rhs) -> np.ndarray:
    """Eigenvalues of the generator, sorted by decay rate"""
    generator, _ = affine_generator(rhs)
    eigenvalues = np.linalg.eigvals(generator)
    return eigenvalues[np.lexsort((eigenvalues.imag, -eigenvalues.real))]


def rk4_step(vector_field: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = vector_field(y)
    k2 = vector_field(y + 0.5 * dt * k1)
    k3 = vector_field(y + 0.5 * dt * k2)
    k4 = vector_field(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_propagator(rhs, dt: float) -> np.ndarray:
    """
    One RK4 step as an augmented (6x6) matrix acting on (y, 1)

    The RK4 map of an affine autonomous system is itself affine, so it is
    assembled once and long runs use its matrix powers.
    """
    vector_field = _as_vector_field(rhs)
    origin = rk4_step(vector_field, np.zeros(STATE_SIZE), dt)
    propagator = np.eye(STATE_SIZE + 1)
    for j, unit in enumerate(np.eye(STATE_SIZE)):
        propagator[:STATE_SIZE, j] = rk4_step(vector_field, unit, dt) - origin
    propagator[:STATE_SIZE, STATE_SIZE] = origin
    return propagator


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution; vectors[i] is the real state vector at times[i]"""

    times: np.ndarray
    vectors: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def states(self) -> List[DensityMatrix]:
        return [DensityMatrix.from_vector(v) for v in self.vectors]

    @property
    def initial(self) -> DensityMatrix:
        return DensityMatrix.from_vector(self.vectors[0])

    @property
    def final(self) -> DensityMatrix:
        return DensityMatrix.from_vector(self.vectors[-1])

    def hermiticity_drift(self) -> float:
        rho12 = self.vectors[:, 1] + 1j * self.vectors[:, 2]
        rho21 = self.vectors[:, 3] + 1j * self.vectors[:, 4]
        return float(np.max(np.abs(rho21 - np.conj(rho12))))

    def min_positivity(self) -> float:
        rho11 = self.vectors[:, 0]
        rho12_sq = self.vectors[:, 1] ** 2 + self.vectors[:, 2] ** 2
        return float(np.min(rho11 * (1.0 - rho11) - rho12_sq))

    def rows(self) -> Iterator[Tuple[float, ...]]:
        """Rows in TRAJECTORY_COLUMNS order"""
        for t, v in zip(self.times, self.vectors):
            yield (float(t),) + tuple(float(x) for x in v)


def resolve_step(system: DensitySystem, t_end: float, dt: Optional[float] = None,
                 auto_shrink: bool = True) -> Tuple[float, int]:
    """
    Pick the RK4 step: at most the stability bound and dividing t_end evenly

    Returns:
        (dt, number of steps)
    """
    bound = system.step_bound()
    if dt is None:
        dt = min(bound, t_end)
    elif dt <= 0:
        raise InvalidParameter(f"Step size must be > 0, got {dt}")
    elif dt > bound:
        if not auto_shrink:
            raise StepTooLarge(f"dt={dt} exceeds the stability bound {bound:.6g}")
        logger.warning(f"Step dt={dt} exceeds bound {bound:.6g}; shrinking")
        dt = bound

    steps = max(1, math.ceil(t_end / dt - 1e-9))
    return t_end / steps, steps


def integrate(rho0: DensityMatrix, system: DensitySystem, t_end: float, dt: Optional[float] = None,
              auto_shrink: bool = True, max_samples: int = DEFAULT_MAX_SAMPLES) -> Trajectory:
    """
    Classical RK4 fixed-step trajectory from rho0 to t_end

    Args:
        rho0: Hermitian initial state
        system: right-hand side and its rate scales
        t_end: final time (> 0)
        dt: requested step; None picks the stability bound
        auto_shrink: shrink an oversized dt instead of raising StepTooLarge
        max_samples: upper bound on stored samples (first and last always kept)

    Returns:
        Trajectory with metadata (dt, steps, variant, params_hash)
    """
    if not t_end > 0:
        raise InvalidParameter(f"t_end must be > 0, got {t_end}")
    if rho0.hermiticity_defect > HERMITICITY_TOL:
        raise NonHermitianInitialState(
            f"|rho21 - conj(rho12)| = {rho0.hermiticity_defect:.3e} exceeds {HERMITICITY_TOL}"
        )
    if max_samples < 2:
        raise InvalidParameter(f"max_samples must be >= 2, got {max_samples}")

    dt, steps = resolve_step(system, t_end, dt, auto_shrink)
    stride = max(1, math.ceil(steps / (max_samples - 1)))
    logger.debug(f"RK4: dt={dt:.6g}, steps={steps}, stride={stride}, variant={system.variant}")

    one_step = rk4_propagator(system, dt)
    chunk = np.linalg.matrix_power(one_step, stride)

    state = np.append(rho0.to_vector(), 1.0)
    indices = [0]
    vectors = [state[:STATE_SIZE].copy()]
    done = 0
    while done < steps:
        todo = min(stride, steps - done)
        advance = chunk if todo == stride else np.linalg.matrix_power(one_step, todo)
        state = advance @ state
        done += todo
        indices.append(done)
        vectors.append(state[:STATE_SIZE].copy())

    times = np.array(indices, dtype=float) * dt
    times[-1] = t_end
    metadata = {
        'dt': dt,
        'steps': steps,
        'variant': system.variant,
        'params_hash': system.params_hash,
    }
    logger.info(f"Integrated {system.variant} to t={t_end:.6g} in {steps} steps")
    return Trajectory(times=times, vectors=np.array(vectors), metadata=metadata)


class SteadyStateMethod(Enum):
    LINEAR_SOLVE = "linear-solve"
    ANALYTIC = "closed-form"


def _steady_state_linear(gamma: float, nu: float) -> DensityMatrix:
    """Zero of the consistent resonant equations with rho21 = conj(rho12)"""
    if gamma == 0.0:
        # diagonal is unrelaxed; return the Gamma -> 0+ limit
        return DensityMatrix.hermitian(0.5, 0j)

    def reduced(y: np.ndarray) -> np.ndarray:
        rho = DensityMatrix.hermitian(y[0], complex(y[1], y[2]))
        d = rhs_resonant(rho, gamma, nu, ResonantSource.CONSISTENT)
        return np.array([d.rho11, d.rho12.real, d.rho12.imag])

    source = reduced(np.zeros(3))
    matrix = np.column_stack([reduced(unit) - source for unit in np.eye(3)])
    y = _solve(matrix, -source, "steady state")
    return DensityMatrix.hermitian(y[0], complex(y[1], y[2]))


def _steady_state_closed_form(gamma: float, nu: float) -> DensityMatrix:
    """rho12 = Gamma (2 i nu - Gamma/2) / (2 (4 nu^2 - Gamma^2/2)); pole at nu = Gamma / (2 sqrt 2)"""
    denominator = 2.0 * (4.0 * nu * nu - 0.5 * gamma * gamma)
    if abs(denominator) <= 1e-12 * 2.0 * max(4.0 * nu * nu, 0.5 * gamma * gamma):
        raise SingularSystem(f"Printed steady-state formula has a pole at nu={nu}, Gamma={gamma}")
    rho12 = gamma * complex(-0.5 * gamma, 2.0 * nu) / denominator
    return DensityMatrix.hermitian(0.5, rho12)


def steady_state(gamma: float, nu: float,
                 method: SteadyStateMethod = SteadyStateMethod.LINEAR_SOLVE) -> DensityMatrix:
    """
    Long-time limit of the resonant equations

    Raises:
        SingularSystem: analytic formula evaluated at its pole, or Gamma = nu = 0
    """
    if gamma < 0 or nu < 0:
        raise InvalidParameter(f"Gamma and nu must be >= 0, got Gamma={gamma}, nu={nu}")
    if gamma == 0.0 and nu == 0.0:
        raise SingularSystem("Steady state undefined for Gamma = nu = 0")
    method = SteadyStateMethod(method)
    if method is SteadyStateMethod.ANALYTIC:
        return _steady_state_closed_form(gamma, nu)
    return _steady_state_linear(gamma, nu)


@dataclass(frozen=True)
class SteadyStateReport:
    """Both steady-state methods side by side plus the selected system's fixed point"""

    gamma: float
    nu: float
    linear_solve: DensityMatrix
    analytic: Optional[DensityMatrix]
    discrepancy: Optional[float]
    analytic_singular: bool
    fixed_point: Optional[DensityMatrix] = None
    population_mismatch: bool = False
    relaxation_eigenvalues: Tuple[complex, ...] = ()

    def as_dict(self) -> Dict[str, Any]:
        def state(rho: Optional[DensityMatrix]):
            if rho is None:
                return None
            return dict(zip(TRAJECTORY_COLUMNS[1:], (float(x) for x in rho.to_vector())))

        return {
            'gamma': self.gamma,
            'nu': self.nu,
            'linear_solve': state(self.linear_solve),
            'closed_form': state(self.analytic),
            'closed_form_discrepancy': self.discrepancy,
            'closed_form_singular': self.analytic_singular,
            'fixed_point': state(self.fixed_point),
            'population_mismatch': self.population_mismatch,
            'relaxation_eigenvalues': [[float(z.real), float(z.imag)] for z in self.relaxation_eigenvalues],
        }


def steady_state_report(gamma: float, nu: float, system: Optional[DensitySystem] = None) -> SteadyStateReport:
    """
    Compare the linear-solve steady state with the closed form and,
    when a system is given, with that system's own fixed point
    """
    linear = steady_state(gamma, nu, SteadyStateMethod.LINEAR_SOLVE)
    try:
        analytic = steady_state(gamma, nu, SteadyStateMethod.ANALYTIC)
        discrepancy = linear.distance(analytic)
        singular = False
        if discrepancy > 1e-12:
            logger.warning(f"Closed-form steady state differs from linear solve by {discrepancy:.3e}")
    except SingularSystem as e:
        logger.warning(str(e))
        analytic, discrepancy, singular = None, None, True

    fixed, mismatch, eigenvalues = None, False, ()
    if system is not None:
        eigenvalues = tuple(relaxation_spectrum(system))
        try:
            fixed = fixed_point(system)
        except SingularSystem as e:
            logger.warning(str(e))
        # the half-filled diagonal is only expected of the resonant equations
        if fixed is not None and system.variant.startswith(SystemVariant.RESONANT.value):
            mismatch = abs(fixed.rho11 - 0.5) > 1e-9
            if mismatch:
                logger.warning(f"Fixed point of {system.variant} has rho11={fixed.rho11:.6g}, expected 1/2")

    return SteadyStateReport(
        gamma=gamma, nu=nu, linear_solve=linear, analytic=analytic, discrepancy=discrepancy,
        analytic_singular=singular, fixed_point=fixed, population_mismatch=mismatch,
        relaxation_eigenvalues=eigenvalues,
    )
