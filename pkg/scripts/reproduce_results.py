"""
Reproduce the ground-state root patterns, regime probes and surface energies.

Writes data files only (no plots) under results/reproduction by default.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from config import DEFAULT_TOLERANCES
from errors import ExtrapolationError
from model import ModelParams, identity_suite
from patterns import bae_residual, classify, pairing_check, regime_grid
from results_io import write_csv, write_json
from spectrum import ground_state_pipeline, root_records, root_rows
from thermo import (extrapolate_surface_energy, fourier_pair_check, ground_energy_thermo,
                    closed_form_ground_energy, surface_energy_sweep)

FIGURE_POINTS = [
    ('regime_E', 0.6, -0.2),
    ('regime_K', 0.6, -2.5),
    ('regime_I', 1.5, -1.2),
]
EXPECTED_LABELS = {(0.6, -0.2): 'E', (0.6, -2.5): 'K', (1.5, -1.2): 'I', (0.25, 1.0): 'B'}


def print_section(title):
    """Print a section header."""
    print("\n" + "=" * 60)
    print(f"  {title}")
    print("=" * 60)


def check_identities(header):
    print_section("1. Integrability identities")
    params = ModelParams.from_reduced(3, 0.6, -0.2)
    records = identity_suite(params, points=100, seed=header['seed'])
    for r in records:
        mark = "[OK]" if r['pass'] else "[FAIL]"
        print(f"  {mark} {r['identity']:<18} max residual {r['max_residual']:.2e}")
    return all(r['pass'] for r in records)


def root_patterns(out_dir, header, n_sites):
    print_section("2. Ground-state root patterns")
    ok = True
    for name, p, q in FIGURE_POINTS:
        for theta_bar in ((), tuple(0.1 * (j - (n_sites + 1) / 2) for j in range(1, n_sites + 1))):
            params = ModelParams.from_reduced(n_sites, p, q, theta_bar=theta_bar)
            result = ground_state_pipeline(params)
            report = classify(result.roots, params)
            suffix = '_inhomogeneous' if theta_bar else ''
            write_json(out_dir / f'{name}{suffix}.json',
                       {'records': root_records(params, [result]), 'pattern': report.to_dict()}, header)
            write_csv(out_dir / f'{name}{suffix}.csv', root_rows([result]), header)
            expected = EXPECTED_LABELS[(p, q)]
            mark = "[OK]" if report.label == expected else "[WARN]"
            ok &= report.label == expected
            print(f"  {mark} p={p}, q={q}{' (theta)' if theta_bar else ''}: label {report.label} "
                  f"(expected {expected}, misfit {report.misfit:.3f})")
            if not theta_bar:
                bae = bae_residual(result.roots, params)
                gaps = [pair['gap'] for pair in pairing_check(result.roots)]
                print(f"       BAE max residual {bae['max_residual']:.2e}, "
                      f"largest pairing gap {max(gaps) if gaps else 0.0:.2e}")
    return ok


def regime_map(out_dir, header, n_sites, workers):
    print_section("3. Regime probes")
    ps = [0.25, 0.6, 1.5]
    qs = [-2.5, -1.2, -0.2, 1.0]
    rows = regime_grid(ps, qs, n_sites, workers=workers)
    write_csv(out_dir / 'regime_map.csv', rows, header, ['p', 'q', 'N', 'label', 'misfit'])
    for row in rows:
        print(f"  p={row['p']:<5} q={row['q']:<5} -> {row['label']}")
    return True


def surface_energies(out_dir, header, n_list, workers):
    print_section("4. Surface energy")
    fourier_pair_check()
    print("  [OK] Fourier convention locked")

    rng = np.random.default_rng(header['seed'])
    worst = 0.0
    for p, q in zip(rng.uniform(0.05, 0.45, 20), rng.uniform(0.55, 3.0, 20)):
        numeric = ground_energy_thermo('B', 100, p, q, z_x=2.0)
        worst = max(worst, abs(numeric - closed_form_ground_energy(p, q, 100)))
    print(f"  [{'OK' if worst < 1e-6 else 'FAIL'}] regime B quadrature vs closed form: {worst:.2e}")

    for p, q in ((1.0, 1.0), (0.6, -0.2)):
        try:
            result = extrapolate_surface_energy(p, q, n_list)
            marker = 'OK'
        except ExtrapolationError as e:
            result = e.result
            marker = 'FAIL'
        print(f"  [{marker}] p={p}, q={q}: closed {result.closed_form:.6f}, extrapolated "
              f"{result.extrapolated:.6f} +- {result.uncertainty or 0.0:.4f} ({result.relative_deviation:.2%})")

    ps = np.linspace(0.2, 3.0, 15)
    qs = np.linspace(0.2, 3.0, 15)
    rows = surface_energy_sweep(ps, qs, workers=workers)
    write_csv(out_dir / 'surface_energy_grid.csv', rows, header)
    print(f"  Wrote {len(rows)} grid points")
    return worst < 1e-6


def main():
    """Run all reproduction steps."""
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument('--out', default='results/reproduction')
    parser.add_argument('--n-sites', type=int, default=4)
    parser.add_argument('--n-list', type=int, nargs='+', default=[3, 4, 5, 6])
    parser.add_argument('--workers', type=int, default=1)
    parser.add_argument('--seed', type=int, default=20240611)
    args = parser.parse_args()

    logging.basicConfig(level=logging.WARNING,
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    out_dir = Path(args.out)
    header = {'command': 'reproduce', 'seed': args.seed, 'tolerances': DEFAULT_TOLERANCES.as_dict()}

    print("\n" + "=" * 60)
    print("  Spin-1 open chain - reproduction run")
    print("=" * 60)

    results = {
        'identities': check_identities(header),
        'patterns': root_patterns(out_dir, header, args.n_sites),
        'regimes': regime_map(out_dir, header, args.n_sites, args.workers),
        'surface': surface_energies(out_dir, header, args.n_list, args.workers),
    }

    print_section("Summary")
    for name, ok in results.items():
        print(f"  {'[OK]' if ok else '[WARN]'} {name}")
    return 0 if all(results.values()) else 1


if __name__ == '__main__':
    sys.exit(main())
