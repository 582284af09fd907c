"""
Core Parameter Tests

Validation ranges, radiative strength resolution, mode flags and the SI
conversion layer.
"""

import math

import pytest

from quantum_antenna.errors import (
    InvalidParameter,
    NegativeLength,
    NonPositiveFrequency,
    UltraStrongCoupling,
)
from quantum_antenna.params import (
    DEFAULT_GAMMA,
    AntennaParams,
    ModeFlags,
    Obliquity,
    PsiMode,
    ResonantSource,
    SIParams,
    StrengthSource,
    from_si,
    params_from_config,
    to_si,
    validate,
)


class TestDerivedQuantities:
    """Test quantities computed from the raw parameters"""

    def test_length_and_wavenumber(self):
        """k equals omega in natural units and l = 2 (kl/2) / k"""
        params = AntennaParams(omega=2.0, omega0=2.0, rabi=0.1, kl_half=math.pi)
        assert params.k == 2.0
        assert params.length == pytest.approx(math.pi)

    def test_detuning_and_rabi_ratio(self):
        params = AntennaParams(omega0=1.1, omega=1.0, rabi=0.25)
        assert params.detuning == pytest.approx(0.1)
        assert params.rabi_over_omega == pytest.approx(0.25)

    def test_fingerprint_is_stable(self):
        """Equal params give equal fingerprints, any change alters it"""
        first = AntennaParams(phi=0.8)
        assert first.fingerprint() == AntennaParams(phi=0.8).fingerprint()
        assert first.fingerprint() != AntennaParams(phi=0.81).fingerprint()
        assert len(first.fingerprint()) == 16


class TestValidation:
    """Test range checks on the physical configuration"""

    def test_defaults_are_valid(self):
        validated = validate(AntennaParams())
        assert validated.strength_source is StrengthSource.DEFAULT
        assert validated.gamma == DEFAULT_GAMMA
        assert validated.warnings == ()

    @pytest.mark.parametrize("changes", [{'omega': 0.0}, {'omega': -1.0}, {'omega0': 0.0}])
    def test_non_positive_frequency(self, changes):
        with pytest.raises(NonPositiveFrequency):
            validate(AntennaParams(**changes))

    def test_rabi_must_stay_below_drive(self):
        with pytest.raises(UltraStrongCoupling):
            validate(AntennaParams(rabi=1.0))
        with pytest.raises(UltraStrongCoupling):
            validate(AntennaParams(rabi=1.5))

    def test_negative_rabi(self):
        with pytest.raises(InvalidParameter):
            validate(AntennaParams(rabi=-0.1))

    def test_negative_length(self):
        with pytest.raises(NegativeLength):
            validate(AntennaParams(kl_half=-1.0))

    def test_zero_length_is_allowed(self):
        assert validate(AntennaParams(kl_half=0.0)).length == 0.0

    @pytest.mark.parametrize("name", ['dipole', 'prefactor', 'gamma_override'])
    def test_negative_strength(self, name):
        with pytest.raises(InvalidParameter) as exc:
            validate(AntennaParams(**{name: -1.0}))
        assert not isinstance(exc.value, NegativeLength)

    def test_non_finite_values(self):
        with pytest.raises(InvalidParameter):
            validate(AntennaParams(phi=float('nan')))
        with pytest.raises(InvalidParameter):
            validate(AntennaParams(kl_half=float('inf')))

    def test_validation_is_idempotent(self):
        once = validate(AntennaParams(rabi=0.1, prefactor=2.0))
        assert validate(once) == once

    def test_with_changes_revalidates(self, default_params):
        assert default_params.with_changes(rabi=0.1).rabi == 0.1
        with pytest.raises(UltraStrongCoupling):
            default_params.with_changes(rabi=2.0)


class TestStrengthSource:
    """Test the gamma > prefactor > dipole priority"""

    def test_gamma_wins_and_warns(self):
        validated = validate(AntennaParams(gamma_override=0.01, prefactor=1.0, dipole=0.5))
        assert validated.strength_source is StrengthSource.GAMMA
        assert validated.gamma == 0.01
        assert len(validated.warnings) == 1
        assert 'gamma' in validated.warnings[0]

    def test_prefactor_before_dipole(self):
        validated = validate(AntennaParams(prefactor=1.0, dipole=0.5))
        assert validated.strength_source is StrengthSource.PREFACTOR
        assert validated.gamma is None

    def test_dipole_alone(self):
        validated = validate(AntennaParams(dipole=0.5))
        assert validated.strength_source is StrengthSource.DIPOLE
        assert validated.warnings == ()


class TestModeFlags:
    """Test the switches that pick between model variants"""

    def test_defaults(self):
        flags = ModeFlags()
        assert flags.psi_mode is PsiMode.DERIVED
        assert flags.obliquity is Obliquity.SIN2
        assert flags.resonant_source is ResonantSource.CONSISTENT

    def test_from_dict_accepts_strings(self):
        flags = ModeFlags.from_dict({'psi_mode': 'paper-literal', 'obliquity': 'cos2'})
        assert flags.psi_mode is PsiMode.PAPER_LITERAL
        assert flags.obliquity is Obliquity.COS2
        assert ModeFlags.from_dict(flags.to_dict()) == flags

    def test_unknown_flag(self):
        with pytest.raises(InvalidParameter):
            ModeFlags.from_dict({'psi': 'derived'})

    def test_unknown_value(self):
        with pytest.raises(InvalidParameter, match="psi_mode"):
            ModeFlags(psi_mode='exact')


class TestConfigSection:
    """Test building params from a config mapping"""

    def test_gamma_key_maps_to_override(self):
        params = AntennaParams.from_dict({'gamma': 0.02, 'rabi': 0.1})
        assert params.gamma_override == 0.02
        assert params.rabi == 0.1

    def test_unknown_key(self):
        with pytest.raises(InvalidParameter, match="Unknown"):
            AntennaParams.from_dict({'rabbi': 0.1})

    def test_non_numeric_value(self):
        with pytest.raises(InvalidParameter):
            AntennaParams.from_dict({'phi': 'steep'})

    def test_si_block_replaces_dimensionless_keys(self):
        section = {
            'rabi': 0.5,
            'si': {'omega_rad_s': 2.0e15, 'omega0_rad_s': 2.0e15, 'rabi_rad_s': 4.0e14,
                   'length_m': 1.9e-6, 'phi': 0.8},
        }
        params = params_from_config(section)
        assert params.omega == 1.0
        assert params.rabi == pytest.approx(0.2)
        assert params.kl_half == pytest.approx(2.0e15 / 299792458.0 * 1.9e-6 / 2.0)


class TestSIConversion:
    """Test SI input conversion to the dimensionless model and back"""

    @pytest.fixture
    def si(self):
        return SIParams(omega_rad_s=2.0e15, omega0_rad_s=2.1e15, rabi_rad_s=4.0e14,
                        length_m=1.9e-6, phi=0.8, dipole_cm=1.0e-29)

    def test_frequencies_scale_to_drive(self, si):
        params = from_si(si)
        assert params.omega == 1.0
        assert params.omega0 == pytest.approx(1.05)
        assert params.rabi == pytest.approx(0.2)
        assert params.prefactor > 0

    def test_round_trip(self, si):
        back = to_si(from_si(si), si.omega_rad_s)
        assert back.omega0_rad_s == pytest.approx(si.omega0_rad_s)
        assert back.rabi_rad_s == pytest.approx(si.rabi_rad_s)
        assert back.length_m == pytest.approx(si.length_m)
        assert back.dipole_cm == pytest.approx(si.dipole_cm, rel=1e-9, abs=0.0)

    def test_non_positive_drive(self, si):
        with pytest.raises(NonPositiveFrequency):
            from_si(SIParams(omega_rad_s=0.0, omega0_rad_s=1.0, rabi_rad_s=0.0, length_m=1.0, phi=0.0))
        with pytest.raises(NonPositiveFrequency):
            to_si(AntennaParams(), 0.0)

    def test_unknown_si_key(self):
        with pytest.raises(InvalidParameter):
            SIParams.from_dict({'omega_rad_s': 1.0, 'colour': 2.0})
