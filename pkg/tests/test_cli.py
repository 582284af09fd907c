"""
Command Line Tests

End-to-end runs of every command through main(), writing into tmp_path.
Grids are kept coarse so each run stays quick.
"""

import json
import math
import os

import pytest
import yaml

from quantum_antenna.cli import ENV_CONFIG, main, run_preset
from quantum_antenna.export import read_table

COARSE = {
    'grids': {
        'theta': {'start': 0.0, 'stop': 90.0, 'step': 5.0},
        'spectrum_theta': {'start': 30.0, 'stop': 90.0, 'step': 30.0},
        'omega': {'half_span': 0.3, 'points': 201},
    },
}


@pytest.fixture(autouse=True)
def _no_env_config(monkeypatch):
    monkeypatch.delenv(ENV_CONFIG, raising=False)


def _config(tmp_path, **sections):
    data = json.loads(json.dumps(COARSE))
    for name, section in sections.items():
        data.setdefault(name, {}).update(section)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data))
    return str(path)


def _read_json(path):
    with open(path) as f:
        return json.load(f)


@pytest.mark.integration
class TestPatternCommand:
    """Test pattern and preset runs"""

    def test_writes_pattern_files(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(['--config', _config(tmp_path), '--out', str(out), 'pattern']) == 0

        printed = capsys.readouterr().out.split()
        expected = [str(out / "pattern_pattern.csv"), str(out / "pattern_pattern_polar.csv"),
                    str(out / "pattern_lines.json")]
        assert printed == expected
        assert all(os.path.exists(path) for path in expected)

        table = read_table(expected[0])
        assert table.columns == ['theta_deg', 'xi_total', 'xi_central', 'xi_plus', 'xi_minus']
        assert len(table.rows) == 18
        assert json.loads(table.metadata['config'])['command'] == 'pattern'

    def test_output_is_deterministic(self, tmp_path):
        config = _config(tmp_path)
        for name in ("a", "b"):
            assert main(['--config', config, '--out', str(tmp_path / name), 'pattern']) == 0
        for filename in ("pattern_pattern.csv", "pattern_pattern_polar.csv", "pattern_lines.json"):
            first = (tmp_path / "a" / filename).read_bytes()
            assert first == (tmp_path / "b" / filename).read_bytes()

    def test_undriven_components_coincide(self, tmp_path):
        out = tmp_path / "out"
        assert main(['--config', _config(tmp_path, params={'rabi': 0.0}), '--out', str(out), 'pattern']) == 0
        table = read_table(str(out / "pattern_pattern.csv"))
        central, plus, minus = table.rows[:, 2], table.rows[:, 3], table.rows[:, 4]
        assert central == pytest.approx(2.0 * plus, rel=1e-12)
        assert central == pytest.approx(2.0 * minus, rel=1e-12)

    def test_preset_output_is_deterministic(self, tmp_path):
        for name in ("a", "b"):
            assert main(['--out', str(tmp_path / name), 'preset', 'fig2b']) == 0
        for filename in ("fig2b_pattern.csv", "fig2b_pattern_polar.csv", "fig2b_lines.json"):
            assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()

    def test_json_format(self, tmp_path):
        out = tmp_path / "out"
        assert main(['--config', _config(tmp_path), '--out', str(out), '--format', 'json', 'pattern']) == 0
        payload = _read_json(out / "pattern_pattern.json")
        assert payload['config']['command'] == 'pattern'
        assert len(payload['data']['xi_total']) == 18

    def test_preset_fig2b(self, tmp_path):
        out = tmp_path / "out"
        assert main(['--out', str(out), 'preset', 'fig2b']) == 0

        lines = _read_json(out / "fig2b_lines.json")
        angles = lines['lines']['beam_angles_deg']
        assert angles['central'] == pytest.approx(math.degrees(math.acos(0.8)), abs=1e-6)
        assert angles['plus'] == pytest.approx(math.degrees(math.acos(0.8 / 1.2)), abs=1e-6)
        assert angles['minus'] == 0.0
        assert lines['config']['preset'] == 'fig2b'
        assert lines['config']['params']['kl_half'] == pytest.approx(2.0 * math.pi)

        polar = read_table(str(out / "fig2b_pattern_polar.csv"))
        assert polar.rows[:, 1].max() == 0.0
        assert polar.rows[:, 1].min() >= -60.0

    def test_preset_option_implies_command(self, tmp_path):
        out = tmp_path / "out"
        assert main(['--config', _config(tmp_path), '--out', str(out), '--preset', 'fig3b']) == 0
        assert (out / "fig3b_pattern.csv").exists()

    def test_run_preset(self, tmp_path, loader):
        result = run_preset('fig3a', _config(tmp_path), {'output': {'directory': str(tmp_path / "out")}}, loader)
        assert result['success']
        assert result['exit_code'] == 0
        assert len(result['files']) == 3


class TestUsageErrors:
    """Test exit status 1 for configuration and usage errors"""

    def test_unknown_preset(self, tmp_path):
        assert main(['--out', str(tmp_path), '--preset', 'fig9z']) == 1

    def test_preset_without_id(self, tmp_path):
        assert main(['--out', str(tmp_path), 'preset']) == 1

    def test_no_arguments(self):
        assert main([]) == 1

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            main(['bogus'])
        assert exc.value.code == 1

    def test_missing_config_file(self, tmp_path):
        assert main(['--config', str(tmp_path / "missing.yaml"), 'pattern']) == 1

    def test_invalid_parameter(self, tmp_path):
        config = _config(tmp_path, params={'rabi': 1.5})
        assert main(['--config', config, '--out', str(tmp_path / "out"), 'pattern']) == 1
        assert not (tmp_path / "out" / "pattern_pattern.csv").exists()

    def test_run_preset_unknown_id(self, loader):
        result = run_preset('fig9z', loader=loader)
        assert not result['success']
        assert result['error_type'] == 'UnknownPreset'


@pytest.mark.integration
class TestDynamicsCommand:
    """Test the trajectory and steady-state report"""

    def test_step_too_large_exits_2(self, tmp_path):
        config = _config(tmp_path, dynamics={'dt': 100.0, 'auto_shrink': False})
        assert main(['--config', config, '--out', str(tmp_path / "out"), 'dynamics']) == 2

    def test_step_is_shrunk_by_default(self, tmp_path):
        out = tmp_path / "out"
        config = _config(tmp_path, dynamics={'dt': 100.0, 't_end': 0.5})
        assert main(['--config', config, '--out', str(out), 'dynamics']) == 0
        summary = _read_json(out / "dynamics_steady_state.json")
        assert summary['trajectory']['dt'] <= 0.25

    def test_consistent_source(self, tmp_path):
        out = tmp_path / "out"
        config = _config(tmp_path, dynamics={'t_end': 0.5})
        assert main(['--config', config, '--out', str(out), 'dynamics']) == 0

        summary = _read_json(out / "dynamics_steady_state.json")
        report = summary['steady_state']
        assert report['population_mismatch'] is False
        assert report['fixed_point']['rho11'] == pytest.approx(0.5, abs=1e-9)
        assert summary['hermiticity_drift'] <= 1e-10

        table = read_table(str(out / "dynamics_trajectory.csv"))
        assert table.columns == ['t', 'rho11', 'rho12_re', 'rho12_im', 'rho21_re', 'rho21_im']
        assert table.rows[0, 1] == 1.0
        assert table.rows[-1, 0] == pytest.approx(500.0)

    def test_paper_literal_source_flags_mismatch(self, tmp_path):
        out = tmp_path / "out"
        config = _config(tmp_path, dynamics={'t_end': 0.5})
        assert main(['--config', config, '--out', str(out), '--resonant-source', 'paper-literal', 'dynamics']) == 0
        report = _read_json(out / "dynamics_steady_state.json")['steady_state']
        assert report['population_mismatch'] is True
        assert report['fixed_point']['rho11'] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.integration
class TestSpectrumAndGamma:
    """Test the spectrum and gamma commands"""

    def test_spectrum(self, tmp_path):
        out = tmp_path / "out"
        assert main(['--config', _config(tmp_path), '--out', str(out), 'spectrum']) == 0
        table = read_table(str(out / "spectrum_spectrum.csv"))
        assert table.columns == ['omega', 'theta_deg', 's_total', 's_central', 's_plus', 's_minus']
        assert len(table.rows) == 201 * 2
        lines = _read_json(out / "spectrum_lines.json")
        assert lines['gamma'] == pytest.approx(1e-3)

    def test_point_dipole_ratio(self, tmp_path):
        out = tmp_path / "out"
        config = _config(tmp_path, params={'kl_half': 1e-8, 'phi': 0.0, 'prefactor': 1.0},
                         grids={'frequency': {'start': 1.0, 'stop': 1.0, 'points': 1}})
        assert main(['--config', config, '--out', str(out), 'gamma']) == 0

        table = read_table(str(out / "gamma_gamma.csv"))
        assert table.columns == ['omega_k', 'gamma', 'gamma_over_a', 'gamma_point_dipole']
        assert table.rows[0, 2] == pytest.approx(2.0 / 3.0, abs=1e-6)
        assert table.rows[0, 1] == pytest.approx(table.rows[0, 3], rel=1e-6)

        rates = _read_json(out / "gamma_rates.json")
        assert rates['prefactor'] == 1.0
        assert rates['dressed_basis']['nu'] == pytest.approx(0.1)


@pytest.mark.integration
class TestSweepCommand:
    """Test sweeps and their manifest"""

    def test_sweep_manifest(self, tmp_path):
        out = tmp_path / "out"
        config = _config(tmp_path, sweep={'command': 'pattern', 'parameter': 'rabi',
                                          'values': [0.05, 0.1], 'workers': 2})
        assert main(['--config', config, '--out', str(out), 'sweep']) == 0

        manifest = _read_json(out / "sweep_manifest.json")
        assert manifest['parameter'] == 'rabi'
        assert [p['value'] for p in manifest['points']] == [0.05, 0.1]
        assert all(p['status'] == 'ok' for p in manifest['points'])
        assert manifest['points'][0]['params_fingerprint'] != manifest['points'][1]['params_fingerprint']
        assert (out / "sweep_rabi_001_pattern.csv").exists()

    def test_failed_point_is_recorded(self, tmp_path):
        out = tmp_path / "out"
        config = _config(tmp_path, sweep={'command': 'pattern', 'parameter': 'rabi',
                                          'values': [0.1, 1.5], 'workers': 2})
        assert main(['--config', config, '--out', str(out), 'sweep']) == 1

        points = _read_json(out / "sweep_manifest.json")['points']
        assert points[0]['status'] == 'ok'
        assert points[1]['status'] == 'failed'
        assert points[1]['files'] == []
        assert points[1]['params_fingerprint'] is None
        assert 'Rabi frequency' in points[1]['error']

    def test_sweep_of_sweep_is_rejected(self, tmp_path):
        config = _config(tmp_path, sweep={'command': 'sweep'})
        assert main(['--config', config, '--out', str(tmp_path / "out"), 'sweep']) == 1
