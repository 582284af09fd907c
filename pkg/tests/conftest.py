"""
Project-level test configuration

Provides common fixtures for the quantum antenna test suite: validated
parameter sets for the figure presets, mode flags and a config loader.
"""

import math
import sys
from pathlib import Path

import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent.parent))

from quantum_antenna.config import ConfigLoader, apply_preset  # noqa: E402
from quantum_antenna.params import AntennaParams, ModeFlags, params_from_config, validate  # noqa: E402


def pytest_configure(config):
    """Configure pytest with custom markers"""
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (brute-force quadrature, long integrations)"
    )
    config.addinivalue_line(
        "markers", "integration: marks tests that run a full command and write files"
    )


@pytest.fixture(scope="session")
def project_root():
    """Get the project root directory"""
    return Path(__file__).parent.parent


@pytest.fixture(scope="session")
def loader():
    """Config loader on the packaged defaults"""
    return ConfigLoader()


@pytest.fixture(scope="session")
def preset_params(loader):
    """Validated params for every figure preset, keyed by preset id"""
    defaults = loader.load()
    return {
        preset_id: params_from_config(apply_preset(defaults, preset_id)['params'])
        for preset_id in defaults['presets']
    }


@pytest.fixture
def default_params():
    """kl/2 = 2 pi, phi = 0.8, rabi = 0.2 omega at resonance"""
    return validate(AntennaParams())


@pytest.fixture
def short_wire_params():
    """Nearly point-like antenna"""
    return validate(AntennaParams(kl_half=1e-8, phi=0.0, rabi=0.2, prefactor=1.0))


@pytest.fixture
def derived_flags():
    return ModeFlags()


@pytest.fixture
def literal_flags():
    return ModeFlags(psi_mode='paper-literal', obliquity='cos2', resonant_source='paper-literal')


def _make_params(**changes):
    """Validated params with the default wire and selected fields changed"""
    base = dict(omega0=1.0, omega=1.0, rabi=0.2, kl_half=2.0 * math.pi, phi=0.8)
    base.update(changes)
    return validate(AntennaParams(**base))


@pytest.fixture
def make_params():
    """Factory for validated params around the default wire"""
    return _make_params
