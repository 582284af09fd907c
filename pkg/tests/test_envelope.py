"""
Envelope Tests

Form factor quadrature against the closed form, tabulated envelopes and the
quadrature failure path.
"""

import math
from unittest import mock

import numpy as np
import pytest

from quantum_antenna.envelope import (
    Envelope,
    EnvelopeKind,
    adaptive_quad,
    envelope_for,
    form_factor,
    form_factor_linear_phase,
    sinc,
)
from quantum_antenna.errors import InvalidParameter, QuadratureNonConvergence

THETA_181 = np.linspace(0.0, math.pi, 181)


class TestSinc:
    """Test the sin(x)/x helper"""

    def test_origin(self):
        assert sinc(0.0) == 1.0

    def test_series_branch_is_continuous(self):
        x = 1e-6
        assert sinc(0.9 * x) == pytest.approx(math.sin(0.9 * x) / (0.9 * x), rel=1e-15)
        assert sinc(1.1 * x) == pytest.approx(math.sin(1.1 * x) / (1.1 * x), rel=1e-15)

    def test_zeros_and_arrays(self):
        values = sinc(np.array([math.pi, 2.0 * math.pi, -math.pi]))
        assert isinstance(values, np.ndarray)
        assert np.allclose(values, 0.0, atol=1e-15)


class TestFormFactor:
    """Test F(theta, omega) by adaptive quadrature"""

    @pytest.mark.parametrize("preset_id", ['fig2a', 'fig2b', 'fig3a', 'fig3b', 'fig4a', 'fig4b'])
    def test_matches_closed_form(self, preset_params, preset_id):
        """Quadrature and sinc closed form agree to 1e-8 over 181 angles"""
        params = preset_params[preset_id]
        env = Envelope.linear_phase(params.phi, params.k)
        closed = form_factor_linear_phase(THETA_181, params.kl_half, params.phi)
        numeric = np.array([form_factor(t, params.omega, env, params.length) for t in THETA_181])
        assert np.max(np.abs(numeric - closed)) <= 1e-8

    def test_zero_length(self):
        env = Envelope.linear_phase(0.8)
        assert form_factor(0.3, 1.0, env, 0.0) == 1.0 + 0.0j

    def test_negative_length(self):
        with pytest.raises(InvalidParameter):
            form_factor(0.3, 1.0, Envelope.linear_phase(0.8), -1.0)

    def test_short_wire_is_isotropic(self):
        env = Envelope.linear_phase(0.0)
        for theta in (0.0, 0.7, math.pi / 2):
            assert abs(form_factor(theta, 1.0, env, 2e-8) - 1.0) < 1e-12

    def test_closed_form_off_drive_frequency(self):
        """psi' scales with omega_k / omega"""
        value = form_factor_linear_phase(0.0, 2.0, 1.0, omega_ratio=1.5)
        assert value == pytest.approx(math.sin(1.0) / 1.0)


class TestTabulatedEnvelope:
    """Test spline-interpolated envelopes"""

    @pytest.fixture
    def samples(self):
        half = 2.0 * math.pi
        x = np.linspace(-half, half, 401)
        return x, np.exp(1j * 0.8 * x)

    def test_reproduces_linear_phase(self, samples):
        x, values = samples
        env = Envelope.tabulated(x, values)
        assert env.kind is EnvelopeKind.TABULATED
        for theta in (0.2, 0.6435, 1.2):
            expected = form_factor_linear_phase(theta, 2.0 * math.pi, 0.8)
            assert abs(form_factor(theta, 1.0, env, 4.0 * math.pi) - expected) < 1e-6

    def test_support_must_cover_wire(self, samples):
        x, values = samples
        env = Envelope.tabulated(x, values)
        with pytest.raises(InvalidParameter, match="covers"):
            form_factor(0.2, 1.0, env, 5.0 * math.pi)

    def test_too_few_samples(self):
        with pytest.raises(InvalidParameter, match="at least"):
            Envelope.tabulated([0.0, 1.0, 2.0], [1.0, 1.0, 1.0])

    def test_unsorted_samples(self):
        x = [0.0, 1.0, 2.0, 3.0, 2.5, 5.0, 6.0, 7.0, 8.0]
        with pytest.raises(InvalidParameter, match="increasing"):
            Envelope.tabulated(x, [1.0] * 9)

    def test_length_mismatch(self):
        with pytest.raises(InvalidParameter):
            Envelope.tabulated(list(range(10)), [1.0] * 9)

    def test_envelope_for_config_section(self, samples):
        x, values = samples
        section = {'x': list(x), 're': list(values.real), 'im': list(values.imag)}
        env = envelope_for(0.8, 1.0, section)
        assert env.kind is EnvelopeKind.TABULATED
        assert envelope_for(0.8, 1.0, None) == Envelope.linear_phase(0.8, 1.0)


class TestAdaptiveQuad:
    """Test the quadrature wrapper"""

    def test_polynomial(self):
        assert adaptive_quad(lambda u: u * u, -1.0, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_odd_integrand_at_roundoff_floor(self):
        """An exactly cancelling integral is accepted instead of failing"""
        value = adaptive_quad(lambda u: math.sin(37.0 * u) * math.cos(3.0 * u), -1.0, 1.0)
        assert abs(value) < 1e-12

    def test_subdivision_limit_raises(self):
        with pytest.raises(QuadratureNonConvergence):
            adaptive_quad(lambda u: math.sin(1000.0 * u) ** 2, 0.0, 10.0, limit=2)

    def test_failure_message_from_quadpack(self):
        failed = (1.0, 0.5, {}, "The maximum number of subdivisions (200) has been achieved.")
        with mock.patch('quantum_antenna.envelope.integrate.quad', return_value=failed):
            with pytest.raises(QuadratureNonConvergence, match="subdivisions"):
                adaptive_quad(lambda u: u, 0.0, 1.0, what="identity")

    def test_roundoff_diagnostic_tolerated(self):
        roundoff = (0.25, 1e-14, {}, "The occurrence of roundoff error is detected")
        with mock.patch('quantum_antenna.envelope.integrate.quad', return_value=roundoff):
            assert adaptive_quad(lambda u: u, 0.0, 1.0) == 0.25
