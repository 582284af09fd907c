"""
Errors - Exception hierarchy shared by every quantum antenna module
"""


class QuantumAntennaError(Exception):
    """Base class for all simulator errors"""

    exit_code = 1


class InvalidParameter(QuantumAntennaError):
    """A configuration value is outside its allowed range"""


class NonPositiveFrequency(InvalidParameter):
    """Drive, transition or emission frequency is not strictly positive"""


class UltraStrongCoupling(InvalidParameter):
    """Rabi frequency reaches the drive frequency (rotating-wave bound)"""


class NegativeLength(InvalidParameter):
    """Half electrical length kl/2 is negative; negative strengths raise plain InvalidParameter"""


class UnknownPreset(QuantumAntennaError):
    """Preset id is not one of the built-in figure presets"""


class ConfigParseError(QuantumAntennaError):
    """Configuration file cannot be read or has the wrong structure"""


class IoError(QuantumAntennaError):
    """Output file could not be written or read back"""


class NumericalError(QuantumAntennaError):
    """Base class for failures of the numerical machinery"""

    exit_code = 2


class QuadratureNonConvergence(NumericalError):
    """Adaptive quadrature hit its subdivision limit before the tolerance"""


class DegenerateBasis(NumericalError):
    """
    Dressed basis undefined because detuning and drive both vanish

    dressed_basis() only flags this case and falls back to the bare states;
    the class is for callers that need a well-defined basis and choose to raise.
    """


class StepTooLarge(NumericalError):
    """Integration step exceeds the stability bound and auto-shrink is off"""


class NonHermitianInitialState(NumericalError):
    """Initial density matrix violates rho21 == conj(rho12)"""


class SingularSystem(NumericalError):
    """Steady-state formula or linear system has no unique solution"""
