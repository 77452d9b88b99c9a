"""
Tests for configuration loading and validation.
"""

import json

import pytest

from config import DEFAULT_TOLERANCES, load_config, tolerances_from_config, validate_config
from errors import ParameterError


def test_defaults_derive_boundary_strengths(clean_env):
    config = load_config()
    assert config['p_plus'] == pytest.approx(1.1 * (1 + 0.3 ** 2) ** 0.5)
    assert config['p_minus'] == pytest.approx(-0.3 * (1 + 0.5 ** 2) ** 0.5)
    validate_config(config)


def test_env_file_sections(clean_env):
    path = clean_env / 'lab.env'
    path.write_text('MODEL_N=3\nMODEL_THETA_BAR=0.1,-0.2,0.3\nTOL_BAE=1e-4\nRUN_WORKERS=2\n')
    config = load_config(str(path))
    assert config['n_sites'] == 3
    assert config['theta_bar'] == [0.1, -0.2, 0.3]
    assert config['workers'] == 2
    assert tolerances_from_config(config).bae == 1e-4


def test_json_file_sections(clean_env):
    path = clean_env / 'lab.json'
    path.write_text(json.dumps({'model': {'n': 2, 'p': 1.0, 'q': 1.0}, 'thermo': {'n_list': [3, 4, 5]}}))
    config = load_config(str(path))
    assert config['n_sites'] == 2
    assert config['n_list'] == [3, 4, 5]
    assert config['p_plus'] == pytest.approx(1.5 * (1 + 0.3 ** 2) ** 0.5)


def test_environment_beats_file_and_overrides_beat_environment(clean_env, monkeypatch):
    path = clean_env / 'lab.env'
    path.write_text('MODEL_N=3\nRUN_SEED=5\n')
    monkeypatch.setenv('LAB_MODEL_N', '2')
    config = load_config(str(path), overrides={'seed': 9})
    assert config['n_sites'] == 2
    assert config['seed'] == 9


def test_explicit_strengths_win_over_reduced_parameters(clean_env):
    config = load_config(overrides={'p_plus': 2.0})
    assert config['p_plus'] == 2.0


def test_missing_file_and_bad_values(clean_env):
    with pytest.raises(ParameterError):
        load_config('does-not-exist.env')
    path = clean_env / 'bad.env'
    path.write_text('MODEL_N=three\n')
    with pytest.raises(ParameterError):
        load_config(str(path))


def test_validation_reports_every_problem(clean_env):
    config = load_config(overrides={'n_sites': 2, 'theta_bar': [0.1], 'fit_order': 4, 'workers': 0})
    with pytest.raises(ParameterError) as exc:
        validate_config(config)
    message = str(exc.value)
    assert 'MODEL_THETA_BAR' in message
    assert 'THERMO_FIT_ORDER' in message
    assert 'RUN_WORKERS' in message


def test_unknown_tolerance_is_rejected():
    with pytest.raises(ParameterError):
        DEFAULT_TOLERANCES.with_overrides({'nonsense': 1.0})
    assert DEFAULT_TOLERANCES.with_overrides({'match': 0.2}).match == 0.2
