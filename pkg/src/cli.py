"""
Command-line front end of the integrability lab.

Subcommands: verify | spectrum | roots | classify | thermo | sweep.
Exit codes: 0 success, 1 check failure, 2 usage error, 3 numeric failure.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from config import load_config, tolerances_from_config, validate_config
from errors import ExtrapolationError, LabError, ParameterError, SizeError
from model import ModelParams, hamiltonian, hamiltonian_from_transfer, identity_suite, r11
from numerics import relative_residual
from patterns import bae_residual, classify, pairing_check
from results_io import config_hash, provenance, write_csv, write_json
from run_ledger import RunLedger
from spectrum import all_states_pipeline, ground_state_pipeline, root_records, root_rows
from thermo import extrapolate_surface_energy, fourier_pair_check, surface_energy, surface_energy_sweep

logger = logging.getLogger(__name__)

COMMANDS = ('verify', 'spectrum', 'roots', 'classify', 'thermo', 'sweep')

# representative values for regimes whose energy does not depend on them
DEFAULT_Z_X = 2.0
DEFAULT_LAMBDA = 1.0


def setup_logging() -> None:
    """Configure root logging from LAB_LOG_LEVEL and LAB_LOG_FILE."""
    level = getattr(logging, os.getenv('LAB_LOG_LEVEL', 'INFO').upper(), logging.INFO)
    handlers = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv('LAB_LOG_FILE')
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _corrupted_r11(u: complex, eta: float) -> np.ndarray:
    r = r11(u, eta)
    r[4, 4] += 0.1 * eta ** 2
    return r


def _check_size(params: ModelParams, config: Dict) -> None:
    if params.n_sites > config['n_max']:
        raise SizeError(f"N={params.n_sites} exceeds --n-max {config['n_max']}",
                        n_sites=params.n_sites, n_max=config['n_max'])


def _probe_settings(config: Dict) -> Dict:
    return {'probe_points': config['probe_points'], 'rotation_point': config['rotation_point'],
            'seed': config['seed'], 'max_dimension': config['max_dimension']}


def cmd_verify(config: Dict, out_dir: Path, header: Dict) -> Tuple[int, Dict]:
    """Identity suite plus the Hamiltonian / transfer-matrix consistency check."""
    tolerances = tolerances_from_config(config)
    params = ModelParams.from_config(config)
    r_builder = _corrupted_r11 if config.get('corrupt_r') else r11
    records = identity_suite(params, points=config['points'], seed=config['seed'],
                             tolerances=tolerances, r_builder=r_builder)

    small = params.with_sites(min(params.n_sites, 3))
    direct = hamiltonian(small)
    generated = hamiltonian_from_transfer(small, max_dimension=config['max_dimension'])
    residual = relative_residual(direct, generated)
    records.append({'identity': 'hamiltonian', 'points_tested': 1, 'max_residual': residual,
                    'tolerance': tolerances.hamiltonian, 'pass': bool(residual <= tolerances.hamiltonian),
                    'n_sites': small.n_sites})

    failed = [r['identity'] for r in records if not r['pass']]
    write_json(out_dir / 'verify_report.json', {'identities': records, 'failed': failed}, header)
    if failed:
        logger.error(f"Identity checks failed: {', '.join(failed)}")
        return 1, {'failed': failed}
    return 0, {'identities': len(records)}


def _state_payload(result) -> Dict:
    return {
        'index': result.state.index,
        'energy': result.state.energy,
        'energy_from_roots': result.energy_from_roots,
        'energy_mismatch': result.energy_mismatch,
        'transfer_residuals': result.state.transfer_residuals,
        'lead11': result.pair.lead11,
        'lead_half': result.pair.lead_half,
        'relations': result.relations,
        'root_residual': result.roots.max_residual,
        'z_roots': result.roots.zbar,
        'z1_roots': result.roots.z1bar,
    }


def _run_states(config: Dict):
    params = ModelParams.from_config(config)
    _check_size(params, config)
    tolerances = tolerances_from_config(config)
    if config.get('all_states'):
        results = all_states_pipeline(params, tolerances, **_probe_settings(config))
    else:
        results = [ground_state_pipeline(params, tolerances, **_probe_settings(config))]
    return params, tolerances, results


def cmd_spectrum(config: Dict, out_dir: Path, header: Dict) -> Tuple[int, Dict]:
    """Energies, eigenvalue polynomials, roots and the ground-state pattern."""
    params, tolerances, results = _run_states(config)
    energies = np.linalg.eigvalsh(hamiltonian(params.homogeneous_copy()))
    report = classify(results[0].roots, params, tolerances.match, tolerances.string_structure)

    write_json(out_dir / 'spectrum.json', {
        'params': params.as_dict(),
        'energies': energies,
        'states': [_state_payload(r) for r in results],
        'pattern': report.to_dict(),
    }, header)
    write_json(out_dir / 'roots.json', {'records': root_records(params, results)}, header)
    write_csv(out_dir / 'roots.csv', root_rows(results), header)

    bad = [r.state.index for r in results if not r.relations['pass']]
    if bad:
        logger.error(f"Functional relations failed for states {bad}")
        return 1, {'failed_states': bad}
    return 0, {'states': len(results), 'ground_energy': results[0].state.energy, 'label': report.label}


def cmd_roots(config: Dict, out_dir: Path, header: Dict) -> Tuple[int, Dict]:
    """Root export with the BAE residual and the z / z^(1) pairing gaps."""
    params, tolerances, results = _run_states(config)
    checks = []
    for result in results:
        checks.append({
            'state_index': result.state.index,
            'bae': bae_residual(result.roots, params, tolerances) if params.homogeneous else None,
            'pairing': pairing_check(result.roots, eta=params.eta, member_tol=tolerances.string_member),
        })
    write_json(out_dir / 'roots.json', {'records': root_records(params, results), 'checks': checks}, header)
    write_csv(out_dir / 'roots.csv', root_rows(results), header)

    failed = [c['state_index'] for c in checks if c['bae'] is not None and not c['bae']['pass']]
    if failed:
        logger.error(f"BAE residual above tolerance for states {failed}")
        return 1, {'failed_states': failed}
    return 0, {'states': len(results)}


def cmd_classify(config: Dict, out_dir: Path, header: Dict) -> Tuple[int, Dict]:
    params = ModelParams.from_config(config)
    _check_size(params, config)
    tolerances = tolerances_from_config(config)
    result = ground_state_pipeline(params, tolerances, **_probe_settings(config))
    report = classify(result.roots, params, tolerances.match, tolerances.string_structure)
    write_json(out_dir / 'classification.json', {'params': params.as_dict(), 'report': report.to_dict()}, header)
    if not report.classified:
        return 1, {'label': report.label, 'misfit': report.misfit}
    return 0, {'label': report.label, 'misfit': report.misfit}


def cmd_thermo(config: Dict, out_dir: Path, header: Dict) -> Tuple[int, Dict]:
    """Convention lock, closed form, quadrature and ED extrapolation at one (p, q)."""
    tolerances = tolerances_from_config(config)
    fourier = fourier_pair_check(tolerances=tolerances)
    p, q = config['p'], config['q']
    if p is None or q is None:
        raise ParameterError("thermo needs the reduced boundary parameters MODEL_P and MODEL_Q")

    z_x = config['z_x'] if config['z_x'] is not None else DEFAULT_Z_X
    lam = config['lambda_'] if config['lambda_'] is not None else DEFAULT_LAMBDA
    result = surface_energy(p, q, regime=config['regime'], z_x=z_x, lam=lam, tolerances=tolerances)

    n_list = [n for n in config['n_list'] if n <= config['n_max']]
    if n_list:
        try:
            extrapolated = extrapolate_surface_energy(
                p, q, n_list, config['fit_order'], tolerances=tolerances,
                alpha_minus=config['alpha_minus'], alpha_plus=config['alpha_plus'],
                phi_minus=config['phi_minus'], phi_plus=config['phi_plus'])
        except ExtrapolationError as e:
            extrapolated = e.result
        result.extrapolated = extrapolated.extrapolated
        result.uncertainty = extrapolated.uncertainty
        result.raw = extrapolated.raw
        result.branches = extrapolated.branches
        result.notes.extend(extrapolated.notes)

    write_json(out_dir / 'thermo.json', {'fourier_checks': fourier, 'surface_energy': result.to_dict(),
                                         'notes': ['b~_n uses sign(w); csc branch applies for -1 < q < 0']},
               header)
    deviation = result.relative_deviation
    if deviation is not None and deviation > tolerances.extrapolation:
        logger.warning(f"Extrapolated E_b deviates from the closed form by {deviation:.2%}")
        return 1, {'relative_deviation': deviation}
    return 0, {'closed_form': result.closed_form, 'extrapolated': result.extrapolated}


def cmd_sweep(config: Dict, out_dir: Path, header: Dict) -> Tuple[int, Dict]:
    """Surface-energy grid over (p, q)."""
    tolerances = tolerances_from_config(config)
    ps = np.linspace(config['sweep_p_min'], config['sweep_p_max'], config['sweep_p_steps'])
    qs = np.linspace(config['sweep_q_min'], config['sweep_q_max'], config['sweep_q_steps'])
    n_list = [n for n in config['n_list'] if n <= config['n_max']] if config['sweep_extrapolate'] else []
    rows = surface_energy_sweep(ps, qs, n_list=n_list, probe_n=config['sweep_probe_n'],
                                fit_order=config['fit_order'], workers=config['workers'],
                                tolerances=tolerances)
    columns = ['p', 'q', 'regime', 'E_b_closed', 'E_b_integral', 'E_b_extrapolated', 'abs_deviation', 'error']
    write_csv(out_dir / 'surface_energy.csv', rows, header, columns)
    failures = sum(1 for row in rows if row['error'])
    return 0, {'points': len(rows), 'failures': failures}


COMMAND_HELP = {
    'verify': 'Check the Yang-Baxter, reflection, crossing and commutativity identities',
    'spectrum': 'Diagonalize and export eigenvalue polynomials, roots and the ground-state pattern',
    'roots': 'Export zero roots with BAE residuals and pairing gaps',
    'classify': 'Classify the ground-state root pattern into a regime',
    'thermo': 'Surface energy: closed form, quadrature and finite-size extrapolation',
    'sweep': 'Surface-energy grid over the boundary parameters',
}

HANDLERS = {
    'verify': cmd_verify,
    'spectrum': cmd_spectrum,
    'roots': cmd_roots,
    'classify': cmd_classify,
    'thermo': cmd_thermo,
    'sweep': cmd_sweep,
}


def _parse_tolerances(items: Optional[List[str]]) -> Dict[str, float]:
    overrides = {}
    for item in items or []:
        name, sep, value = item.partition('=')
        if not sep:
            raise ParameterError(f"--tol expects NAME=VALUE, got '{item}'")
        try:
            overrides[name.strip()] = float(value)
        except ValueError:
            raise ParameterError(f"--tol {name} needs a number, got '{value}'")
    return overrides


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Config file (.env-style KEY=VALUE or JSON)')
    common.add_argument('--out', help='Output directory (default: results)')
    common.add_argument('--seed', type=int, help='Random seed for identity points')
    common.add_argument('--n-max', type=int, dest='n_max', help='Largest chain length allowed')
    common.add_argument('--tol', action='append', metavar='NAME=VALUE', help='Override one tolerance')
    common.add_argument('--no-ledger', action='store_true', help='Do not record the run')

    parser = argparse.ArgumentParser(prog='spin1-lab',
                                     description='Spin-1 open Heisenberg chain integrability lab')
    sub = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=COMMAND_HELP[name])
    return parser


def run(args: argparse.Namespace) -> int:
    started = time.time()
    config = None
    status, exit_code, summary = 'error', 3, {}
    try:
        overrides = {'out_dir': args.out, 'seed': args.seed, 'n_max': args.n_max,
                     'tolerances': _parse_tolerances(args.tol)}
        config = load_config(args.config, overrides)
        validate_config(config)

        out_dir = Path(config['out_dir'])
        header = provenance(config, tolerances_from_config(config), args.command)
        logger.info(f"Running '{args.command}' (config {header['config_sha256'][:12]})")
        exit_code, summary = HANDLERS[args.command](config, out_dir, header)
        status = 'success' if exit_code == 0 else 'check_failed'
    except LabError as e:
        exit_code = e.exit_code
        status = e.code
        summary = e.to_dict()
        logger.error(f"{args.command} failed: {e}", exc_info=exit_code == 3)
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        summary = {'error': 'internal_error', 'message': str(e)}
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)

    if config is not None and config.get('enable_ledger') and not args.no_ledger:
        RunLedger(config['ledger_path']).record_run(
            args.command, config_hash(config), status, exit_code, summary,
            seed=config.get('seed'), duration_s=time.time() - started)
    return exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    load_dotenv()
    setup_logging()
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == '__main__':
    sys.exit(main())
