"""
Radiation - Steady-state correlation, three-line radiation pattern xi(theta),
angle-resolved Mollow spectrum and beam-angle analysis

Line labels follow the sign of the Rabi shift: 'plus' is the line at
omega0 + rabi (argument psi_plus), 'minus' the line at omega0 - rabi.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.signal import argrelextrema, find_peaks, peak_widths

from .envelope import Envelope, sinc
from .errors import InvalidParameter, QuadratureNonConvergence
from .params import ModeFlags, Obliquity, PsiMode, ValidatedParams

logger = logging.getLogger(__name__)

LINES = ('central', 'plus', 'minus')
PATTERN_COLUMNS = ('theta_deg', 'xi_total', 'xi_central', 'xi_plus', 'xi_minus')
SPECTRUM_COLUMNS = ('omega', 'theta_deg', 's_total', 's_central', 's_plus', 's_minus')

# pattern weights of the central and side lines
PATTERN_WEIGHTS = (0.5, 0.25, 0.25)
ORACLE_GAMMA_LENGTH = 1e-10
ORACLE_BASE_NODES = 48
VISIBILITY_TOL = 1e-12
# relative deviations are measured against at least this fraction of the pattern maximum
ORACLE_RELATIVE_FLOOR = 1e-6
DEFAULT_THETA_STEP_DEG = 0.25


def correlation_ss(tau, gamma: float, rabi: float, omega: float = 1.0):
    """
    Strong-field steady-state correlation <sigma+(0) sigma-(tau)>

    1/4 (e^{-Gamma tau/2} + 1/2 e^{-3 Gamma tau/4} (e^{-i rabi tau} + e^{i rabi tau})) e^{-i omega tau}
    for tau >= 0 and its conjugate at -tau. Scalars or arrays.
    """
    tau = np.asarray(tau, dtype=float)
    t = np.abs(tau)
    central = np.exp(-0.5 * gamma * t)
    sides = 0.5 * np.exp(-0.75 * gamma * t) * (np.exp(-1j * rabi * t) + np.exp(1j * rabi * t))
    value = 0.25 * (central + sides) * np.exp(-1j * omega * t)
    value = np.where(tau < 0, np.conj(value), value)
    return value if value.ndim else complex(value)


def _lorentzian(detuning, half_width: float):
    """half_width / (detuning^2 + half_width^2); integrates to pi"""
    return half_width / (np.asarray(detuning, dtype=float) ** 2 + half_width ** 2)


def correlation_spectrum(omega_detect, gamma: float, rabi: float, omega: float = 1.0):
    """
    Closed-form Re integral_0^inf correlation_ss(tau) e^{i omega_detect tau} dtau:
    three Lorentzians of half-widths Gamma/2, 3Gamma/4, 3Gamma/4 and weights 1/4, 1/8, 1/8
    """
    if gamma <= 0:
        raise InvalidParameter(f"Gamma must be > 0 for a finite spectrum, got {gamma}")
    delta = np.asarray(omega_detect, dtype=float) - omega
    return (0.25 * _lorentzian(delta, 0.5 * gamma)
            + 0.125 * _lorentzian(delta - rabi, 0.75 * gamma)
            + 0.125 * _lorentzian(delta + rabi, 0.75 * gamma))


def spectrum_from_correlation(tau: np.ndarray, corr: np.ndarray, omega_detect) -> np.ndarray:
    """
    Direct one-sided transform of sampled correlation data (tau >= 0, ascending)
    with trapezoid weights
    """
    tau = np.asarray(tau, dtype=float)
    corr = np.asarray(corr, dtype=complex)
    if tau.ndim != 1 or tau.shape != corr.shape:
        raise InvalidParameter("tau and correlation samples must be 1-D arrays of equal length")
    if np.any(np.diff(tau) <= 0) or tau[0] < 0:
        raise InvalidParameter("tau samples must be non-negative and strictly increasing")
    omega_detect = np.atleast_1d(np.asarray(omega_detect, dtype=float))
    kernel = np.exp(1j * np.outer(omega_detect, tau)) * corr[None, :]
    return integrate.trapezoid(kernel, tau, axis=1).real


def psi_arguments(theta, kl_half: float, phi: float, rabi_over_omega: float,
                  mode: PsiMode = PsiMode.DERIVED) -> Tuple[Any, Any, Any]:
    """
    psi = (kl/2)(cos(theta) - phi); psi_plus/minus = psi +/- shift with
    shift = (kl/2) r cos(theta) in derived mode and r cos(theta) in
    paper-literal mode, r = rabi/omega
    """
    mode = PsiMode(mode)
    cos_theta = np.cos(theta)
    psi = kl_half * (cos_theta - phi)
    scale = kl_half if mode is PsiMode.DERIVED else 1.0
    shift = scale * rabi_over_omega * cos_theta
    return psi, psi + shift, psi - shift


@dataclass(frozen=True)
class PatternPoint:
    theta: float
    xi_total: float
    xi_central: float
    xi_plus: float
    xi_minus: float
    psi: float
    psi_plus: float
    psi_minus: float

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)

    def row(self) -> Tuple[float, ...]:
        return (self.theta_deg, self.xi_total, self.xi_central, self.xi_plus, self.xi_minus)


def pattern_components(theta, params: ValidatedParams,
                       mode: PsiMode = PsiMode.DERIVED) -> Dict[str, Any]:
    """Vectorized weighted sinc^2 terms; theta in radians"""
    psi, psi_plus, psi_minus = psi_arguments(theta, params.kl_half, params.phi, params.rabi_over_omega, mode)
    w_central, w_plus, w_minus = PATTERN_WEIGHTS
    central = w_central * sinc(psi) ** 2
    plus = w_plus * sinc(psi_plus) ** 2
    minus = w_minus * sinc(psi_minus) ** 2
    return {
        'psi': psi, 'psi_plus': psi_plus, 'psi_minus': psi_minus,
        'central': central, 'plus': plus, 'minus': minus,
        'total': central + plus + minus,
    }


def xi_pattern(theta: float, params: ValidatedParams, mode: PsiMode = PsiMode.DERIVED) -> PatternPoint:
    """Closed-form pattern 1/2 {sinc^2 psi + 1/2 sinc^2 psi_plus + 1/2 sinc^2 psi_minus}"""
    c = pattern_components(float(theta), params, mode)
    return PatternPoint(
        theta=float(theta),
        xi_total=float(c['total']), xi_central=float(c['central']),
        xi_plus=float(c['plus']), xi_minus=float(c['minus']),
        psi=float(c['psi']), psi_plus=float(c['psi_plus']), psi_minus=float(c['psi_minus']),
    )


def theta_grid_deg(start: float = 0.0, stop: float = 90.0, step: float = DEFAULT_THETA_STEP_DEG) -> np.ndarray:
    """Angles in degrees on [start, stop)"""
    if step <= 0:
        raise InvalidParameter(f"Angle step must be > 0, got {step}")
    if stop <= start:
        raise InvalidParameter(f"Angle grid is empty: start={start}, stop={stop}")
    count = int(math.ceil((stop - start) / step - 1e-9))
    return start + step * np.arange(count)


def pattern_table(theta_deg: Sequence[float], params: ValidatedParams,
                  mode: PsiMode = PsiMode.DERIVED) -> np.ndarray:
    """Rows in PATTERN_COLUMNS order"""
    theta_deg = np.asarray(theta_deg, dtype=float)
    c = pattern_components(np.radians(theta_deg), params, mode)
    return np.column_stack([theta_deg, c['total'], c['central'], c['plus'], c['minus']])


def oracle_nodes(params: ValidatedParams) -> int:
    """Gauss-Legendre nodes per dimension, growing with the phase excursion along the wire"""
    excursion = params.kl_half * (abs(params.phi) + 1.0 + params.rabi_over_omega)
    return ORACLE_BASE_NODES + 2 * int(math.ceil(excursion))


def _triangle_integral(theta: float, params: ValidatedParams, envelope: Envelope,
                       gamma: float, nodes: int) -> float:
    half = params.length / 2.0
    s, w = np.polynomial.legendre.leggauss(nodes)
    f = envelope.evaluator()

    x = half * s
    outer_weights = half * w
    # x' runs over [x, l/2]
    x_col = x[:, None]
    x_prime = x_col + (half - x_col) * (s[None, :] + 1.0) / 2.0
    inner_weights = (half - x_col) / 2.0 * w[None, :]

    tau = (x_prime - x_col) * math.cos(theta)
    corr = correlation_ss(tau, gamma, params.rabi, params.omega)
    integrand = np.conj(f(x_col)) * f(x_prime) * corr
    inner = np.sum(integrand * inner_weights, axis=1)
    total = np.sum(outer_weights * inner)
    return float(2.0 * total.real * 2.0 / params.length ** 2)


def xi_pattern_bruteforce(theta: float, params: ValidatedParams, envelope: Optional[Envelope] = None,
                          nodes: Optional[int] = None, gamma: Optional[float] = None,
                          rtol: float = 1e-9) -> float:
    """
    Direct double integral of the pattern over the triangle x' in [x, l/2],
    2 Re integral f*(x) f(x') <sigma+(0) sigma-((x' - x) cos(theta))> normalized by 2/l^2

    Gamma defaults to 1e-10 / l so the decay along the wire is negligible.

    Raises:
        QuadratureNonConvergence: refining the node count changes the result by more than rtol
    """
    if params.length == 0.0:
        return float(2.0 * correlation_ss(0.0, 0.0, params.rabi, params.omega).real)
    envelope = envelope or Envelope.linear_phase(params.phi, params.k)
    envelope.check_support(params.length)
    gamma = ORACLE_GAMMA_LENGTH / params.length if gamma is None else gamma
    nodes = nodes or oracle_nodes(params)

    coarse = _triangle_integral(theta, params, envelope, gamma, nodes)
    fine = _triangle_integral(theta, params, envelope, gamma, nodes + nodes // 2)
    if abs(fine - coarse) > rtol * max(abs(fine), 1e-3):
        raise QuadratureNonConvergence(
            f"Pattern double integral at theta={theta:.6g} not converged with {nodes} nodes: "
            f"{coarse:.12e} vs {fine:.12e}"
        )
    return fine


def compare_with_oracle(params: ValidatedParams, theta_deg: Iterable[float],
                        modes: Sequence[PsiMode] = (PsiMode.DERIVED, PsiMode.PAPER_LITERAL)) -> Dict[str, Any]:
    """
    Maximum relative deviation of each closed-form mode from the double integral

    Returns:
        {'deviations': {mode: max relative deviation}, 'selected': mode value,
         'oracle': array of oracle values}
    """
    theta_deg = np.asarray(list(theta_deg), dtype=float)
    oracle = np.array([xi_pattern_bruteforce(math.radians(t), params) for t in theta_deg])
    floor = ORACLE_RELATIVE_FLOOR * max(float(np.max(np.abs(oracle))), 1e-300)

    deviations = {}
    for mode in modes:
        mode = PsiMode(mode)
        closed = pattern_components(np.radians(theta_deg), params, mode)['total']
        relative = np.abs(closed - oracle) / np.maximum(np.abs(oracle), floor)
        deviations[mode.value] = float(np.max(relative))

    selected = min(deviations, key=deviations.get)
    logger.info(f"Pattern oracle deviations {deviations}; closest mode {selected}")
    return {'deviations': deviations, 'selected': selected, 'oracle': oracle}


def obliquity_factor(theta, obliquity: Obliquity = Obliquity.SIN2):
    obliquity = Obliquity(obliquity)
    return np.sin(theta) ** 2 if obliquity is Obliquity.SIN2 else np.cos(theta) ** 2


@dataclass(frozen=True)
class SpectrumPoint:
    omega: float
    theta: float
    s_value: float
    line_components: Tuple[float, float, float]

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)

    def row(self) -> Tuple[float, ...]:
        return (self.omega, self.theta_deg, self.s_value) + tuple(self.line_components)


def spectrum_components(omega_detect, theta, params: ValidatedParams, gamma: float,
                        flags: Optional[ModeFlags] = None, prefactor: float = 1.0) -> Dict[str, Any]:
    """
    Vectorized angle-resolved Mollow spectrum

    S = K obl(theta) Gamma {sinc^2 psi / ((w - w0)^2 + (Gamma/2)^2)
        + 3/4 sinc^2 psi_plus / ((w - w0 - rabi)^2 + (3 Gamma/4)^2)
        + 3/4 sinc^2 psi_minus / ((w - w0 + rabi)^2 + (3 Gamma/4)^2)}
    """
    flags = flags or ModeFlags()
    if gamma <= 0:
        raise InvalidParameter(f"Gamma must be > 0 for a finite spectrum, got {gamma}")
    omega_detect = np.asarray(omega_detect, dtype=float)
    psi, psi_plus, psi_minus = psi_arguments(theta, params.kl_half, params.phi,
                                             params.rabi_over_omega, flags.psi_mode)
    scale = prefactor * obliquity_factor(theta, flags.obliquity) * gamma
    delta = omega_detect - params.omega0

    central = scale * sinc(psi) ** 2 / (delta ** 2 + (0.5 * gamma) ** 2)
    plus = scale * 0.75 * sinc(psi_plus) ** 2 / ((delta - params.rabi) ** 2 + (0.75 * gamma) ** 2)
    minus = scale * 0.75 * sinc(psi_minus) ** 2 / ((delta + params.rabi) ** 2 + (0.75 * gamma) ** 2)
    return {'central': central, 'plus': plus, 'minus': minus, 'total': central + plus + minus}


def spectrum(omega_detect: float, theta: float, params: ValidatedParams, gamma: float,
             flags: Optional[ModeFlags] = None, prefactor: float = 1.0) -> SpectrumPoint:
    c = spectrum_components(float(omega_detect), float(theta), params, gamma, flags, prefactor)
    return SpectrumPoint(
        omega=float(omega_detect), theta=float(theta), s_value=float(c['total']),
        line_components=(float(c['central']), float(c['plus']), float(c['minus'])),
    )


def spectrum_table(omega_grid: Sequence[float], theta_deg: Sequence[float], params: ValidatedParams,
                   gamma: float, flags: Optional[ModeFlags] = None, prefactor: float = 1.0) -> np.ndarray:
    """Rows in SPECTRUM_COLUMNS order, omega varying fastest within each angle"""
    omega_grid = np.asarray(omega_grid, dtype=float)
    theta_deg = np.asarray(theta_deg, dtype=float)
    theta_mesh, omega_mesh = np.meshgrid(theta_deg, omega_grid, indexing='ij')
    c = spectrum_components(omega_mesh, np.radians(theta_mesh), params, gamma, flags, prefactor)
    return np.column_stack([
        omega_mesh.ravel(), theta_mesh.ravel(),
        c['total'].ravel(), c['central'].ravel(), c['plus'].ravel(), c['minus'].ravel(),
    ])


def omega_grid(center: float, half_span: float, points: int) -> np.ndarray:
    if points < 2:
        raise InvalidParameter(f"Frequency grid needs at least 2 points, got {points}")
    if half_span <= 0:
        raise InvalidParameter(f"Frequency half-span must be > 0, got {half_span}")
    return np.linspace(center - half_span, center + half_span, int(points))


def line_shapes(omega_detect, params: ValidatedParams, gamma: float) -> Dict[str, np.ndarray]:
    """Spectrum components with sinc^2, obliquity and prefactor set to one"""
    if gamma <= 0:
        raise InvalidParameter(f"Gamma must be > 0 for a finite spectrum, got {gamma}")
    delta = np.asarray(omega_detect, dtype=float) - params.omega0
    return {
        'central': gamma / (delta ** 2 + (0.5 * gamma) ** 2),
        'plus': 0.75 * gamma / ((delta - params.rabi) ** 2 + (0.75 * gamma) ** 2),
        'minus': 0.75 * gamma / ((delta + params.rabi) ** 2 + (0.75 * gamma) ** 2),
    }


def line_weights(omega_detect, params: ValidatedParams, gamma: float) -> Dict[str, float]:
    """Frequency-integrated line shapes (Simpson); 2 pi : pi : pi on a wide, fine grid"""
    omega_detect = np.asarray(omega_detect, dtype=float)
    shapes = line_shapes(omega_detect, params, gamma)
    return {name: float(integrate.simpson(shapes[name], x=omega_detect)) for name in LINES}


def line_widths(omega_detect, params: ValidatedParams, gamma: float) -> Dict[str, Dict[str, float]]:
    """Peak position and FWHM of each line shape measured on the grid"""
    omega_detect = np.asarray(omega_detect, dtype=float)
    step = float(omega_detect[1] - omega_detect[0])
    shapes = line_shapes(omega_detect, params, gamma)
    result = {}
    for name in LINES:
        peaks, _ = find_peaks(shapes[name])
        if len(peaks) == 0:
            result[name] = {'center': float('nan'), 'fwhm': float('nan')}
            continue
        top = peaks[np.argmax(shapes[name][peaks])]
        widths = peak_widths(shapes[name], [top], rel_height=0.5)[0]
        result[name] = {'center': float(omega_detect[top]), 'fwhm': float(widths[0] * step)}
    return result


@dataclass(frozen=True)
class LineAnalysis:
    """
    Beam angles (degrees, None when the main lobe is invisible), critical
    phase shifts, lobe counts per component and pairwise splittings
    """

    beam_angle_central: Optional[float]
    beam_angle_plus: Optional[float]
    beam_angle_minus: Optional[float]
    phi_cr_central: float
    phi_cr_plus: float
    phi_cr_minus: float
    lobe_counts: Dict[str, int] = field(default_factory=dict)
    splitting: Dict[str, float] = field(default_factory=dict)
    psi_mode: str = PsiMode.DERIVED.value

    @property
    def beam_angles(self) -> Dict[str, Optional[float]]:
        return {'central': self.beam_angle_central, 'plus': self.beam_angle_plus,
                'minus': self.beam_angle_minus}

    @property
    def critical_shifts(self) -> Dict[str, float]:
        return {'central': self.phi_cr_central, 'plus': self.phi_cr_plus, 'minus': self.phi_cr_minus}

    @property
    def max_splitting(self) -> float:
        return max(self.splitting.values(), default=0.0)

    @property
    def all_main_lobes_invisible(self) -> bool:
        """No main lobe strictly inside the visible region (axial lobes count as edge cases)"""
        return all(angle is None or angle == 0.0 for angle in self.beam_angles.values())

    def as_dict(self) -> Dict[str, Any]:
        return {
            'psi_mode': self.psi_mode,
            'beam_angles_deg': {k: ('invisible' if v is None else v) for k, v in self.beam_angles.items()},
            'critical_shifts': self.critical_shifts,
            'lobe_counts': dict(self.lobe_counts),
            'splitting_deg': dict(self.splitting),
            'all_main_lobes_invisible': self.all_main_lobes_invisible,
        }


def beam_roots(phi: float, rabi_over_omega: float, mode: PsiMode = PsiMode.DERIVED) -> Dict[str, float]:
    """cos(theta) of each line's main-lobe maximum"""
    r = rabi_over_omega
    if PsiMode(mode) is PsiMode.DERIVED:
        return {'central': phi, 'plus': phi / (1.0 + r), 'minus': phi / (1.0 - r)}
    return {'central': phi, 'plus': phi * (1.0 + r), 'minus': phi * (1.0 - r)}


def critical_shifts(rabi_over_omega: float, mode: PsiMode = PsiMode.DERIVED) -> Dict[str, float]:
    """
    Phase gradient at which each line's main lobe reaches the axis and leaves
    the visible region

    Labels follow the carrier shift of psi_plus/psi_minus, so in derived mode
    plus = 1 + r and minus = 1 - r, the reverse of a "1 -/+ r" ordering.
    """
    r = rabi_over_omega
    if PsiMode(mode) is PsiMode.DERIVED:
        return {'central': 1.0, 'plus': 1.0 + r, 'minus': 1.0 - r}
    return {'central': 1.0, 'plus': 1.0 / (1.0 + r), 'minus': 1.0 / (1.0 - r)}


def _beam_angle(cos_root: float) -> Optional[float]:
    if cos_root <= 0.0 or cos_root > 1.0 + VISIBILITY_TOL:
        return None
    if cos_root >= 1.0 - VISIBILITY_TOL:
        return 0.0  # axial
    return math.degrees(math.acos(cos_root))


def count_lobes(values: np.ndarray) -> int:
    """Strict local maxima on the grid"""
    return int(len(argrelextrema(np.asarray(values), np.greater)[0]))


def line_analysis(params: ValidatedParams, mode: PsiMode = PsiMode.DERIVED,
                  theta_deg: Optional[Sequence[float]] = None) -> LineAnalysis:
    """
    Beam angles from the roots of psi, psi_plus, psi_minus; lobe counts from
    the pattern components on the angle grid
    """
    mode = PsiMode(mode)
    theta_deg = theta_grid_deg() if theta_deg is None else np.asarray(theta_deg, dtype=float)
    if len(theta_deg) > 1 and float(np.max(np.diff(theta_deg))) > DEFAULT_THETA_STEP_DEG + 1e-12:
        logger.warning(f"Angle grid coarser than {DEFAULT_THETA_STEP_DEG} deg; lobe counts may be low")

    roots = beam_roots(params.phi, params.rabi_over_omega, mode)
    angles = {name: _beam_angle(roots[name]) for name in LINES}
    shifts = critical_shifts(params.rabi_over_omega, mode)

    components = pattern_components(np.radians(theta_deg), params, mode)
    lobes = {name: count_lobes(components[name]) for name in LINES}

    splitting = {}
    for i, first in enumerate(LINES):
        for second in LINES[i + 1:]:
            if angles[first] is not None and angles[second] is not None:
                splitting[f"{first}-{second}"] = abs(angles[first] - angles[second])

    return LineAnalysis(
        beam_angle_central=angles['central'], beam_angle_plus=angles['plus'],
        beam_angle_minus=angles['minus'],
        phi_cr_central=shifts['central'], phi_cr_plus=shifts['plus'], phi_cr_minus=shifts['minus'],
        lobe_counts=lobes, splitting=splitting, psi_mode=mode.value,
    )
