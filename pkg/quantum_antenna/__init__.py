"""
Quantum wire antenna - driven two-level emitter spread along a thin wire

Radiative rates, dressed-basis dynamics, the three-line radiation pattern
and the angle-resolved Mollow spectrum.
"""

from .dynamics import DensityMatrix, Trajectory, integrate, steady_state
from .errors import NumericalError, QuantumAntennaError
from .params import AntennaParams, ModeFlags, ValidatedParams, validate
from .radiation import LineAnalysis, PatternPoint, SpectrumPoint, line_analysis, spectrum, xi_pattern
from .relaxation import RelaxationRates, gamma_of_omega, relaxation_params

__version__ = "1.0.0"

__all__ = [
    'AntennaParams', 'ModeFlags', 'ValidatedParams', 'validate',
    'RelaxationRates', 'gamma_of_omega', 'relaxation_params',
    'DensityMatrix', 'Trajectory', 'integrate', 'steady_state',
    'PatternPoint', 'SpectrumPoint', 'LineAnalysis', 'xi_pattern', 'spectrum', 'line_analysis',
    'QuantumAntennaError', 'NumericalError',
]
