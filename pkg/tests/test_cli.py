"""
End-to-end tests for the command-line front end.
"""

import json

import pytest

from cli import build_parser, main
from results_io import read_csv
from run_ledger import RunLedger


@pytest.fixture
def fast_config(clean_env):
    path = clean_env / 'lab.env'
    path.write_text('MODEL_N=2\nRUN_POINTS=10\nTHERMO_N_LIST=2,3\n'
                    'SWEEP_P_STEPS=2\nSWEEP_Q_STEPS=3\n'
                    f'RUN_LEDGER_PATH={clean_env / "runs.db"}\n')
    return path


def _run(config, out, *extra):
    return main([extra[0], '--config', str(config), '--out', str(out)] + list(extra[1:]))


def test_parser_lists_every_command():
    parser = build_parser()
    args = parser.parse_args(['verify', '--tol', 'bae=1e-4', '--no-ledger'])
    assert args.command == 'verify'
    assert args.tol == ['bae=1e-4']
    assert args.no_ledger
    with pytest.raises(SystemExit):
        parser.parse_args(['plot'])


def test_verify_writes_report_and_records_run(fast_config, clean_env):
    out = clean_env / 'results'
    assert _run(fast_config, out, 'verify') == 0
    report = json.loads((out / 'verify_report.json').read_text())
    assert report['failed'] == []
    assert report['provenance']['command'] == 'verify'
    names = {r['identity'] for r in report['identities']}
    assert 'hamiltonian' in names and 'qybe' in names

    runs = RunLedger(str(clean_env / 'runs.db')).recent_runs()
    assert runs[0]['command'] == 'verify'
    assert runs[0]['exit_code'] == 0


def test_verify_flags_corrupted_r_matrix(fast_config, clean_env, monkeypatch):
    monkeypatch.setenv('LAB_RUN_CORRUPT_R', 'true')
    out = clean_env / 'corrupt'
    assert _run(fast_config, out, 'verify', '--no-ledger') == 1
    report = json.loads((out / 'verify_report.json').read_text())
    assert 'qybe' in report['failed']


def test_spectrum_outputs(fast_config, clean_env):
    out = clean_env / 'spectrum'
    assert _run(fast_config, out, 'spectrum', '--no-ledger') == 0
    spectrum = json.loads((out / 'spectrum.json').read_text())
    assert len(spectrum['energies']) == 9
    assert len(spectrum['states'][0]['z1_roots']) == 7
    rows = read_csv(out / 'roots.csv')
    assert set(rows['family']) == {'z', 'z1'}


def test_roots_command_reports_bae(fast_config, clean_env, monkeypatch):
    monkeypatch.setenv('LAB_MODEL_N', '3')
    out = clean_env / 'roots'
    assert _run(fast_config, out, 'roots', '--no-ledger') == 0
    document = json.loads((out / 'roots.json').read_text())
    assert document['checks'][0]['bae']['pass']


def test_sweep_writes_grid(fast_config, clean_env):
    out = clean_env / 'sweep'
    assert _run(fast_config, out, 'sweep', '--no-ledger') == 0
    frame = read_csv(out / 'surface_energy.csv')
    assert len(frame) == 6
    assert list(frame.columns)[:3] == ['p', 'q', 'regime']


def test_thermo_without_extrapolation(fast_config, clean_env):
    out = clean_env / 'thermo'
    assert _run(fast_config, out, 'thermo', '--n-max', '1', '--no-ledger') == 0
    document = json.loads((out / 'thermo.json').read_text())
    assert document['surface_energy']['regime'] == 'B'
    assert document['surface_energy']['closed_form'] is not None


def test_size_guard_is_a_numeric_failure(fast_config, clean_env, capsys):
    out = clean_env / 'big'
    assert _run(fast_config, out, 'classify', '--n-max', '1', '--no-ledger') == 3
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error['error'] == 'size_error'


def test_usage_errors_exit_with_two(fast_config, clean_env, capsys):
    assert _run(fast_config, clean_env / 'x', 'verify', '--tol', 'match', '--no-ledger') == 2
    assert _run(fast_config, clean_env / 'x', 'verify', '--tol', 'bogus=1', '--no-ledger') == 2
    assert main(['verify', '--config', str(clean_env / 'missing.env'), '--no-ledger']) == 2


def test_domain_error_in_thermo(fast_config, clean_env, monkeypatch):
    monkeypatch.setenv('LAB_MODEL_P', '-0.3')
    assert _run(fast_config, clean_env / 'domain', 'thermo', '--n-max', '1', '--no-ledger') == 2
