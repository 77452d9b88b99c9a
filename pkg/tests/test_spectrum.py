"""
Tests for diagonalization, eigenvalue reconstruction and root extraction.
"""

import numpy as np
import pytest

from errors import ExtractionError
from model import ModelParams, hamiltonian
from numerics import EvenPoly
from spectrum import (LambdaPair, RootSet, all_states_pipeline, canonical_zbar, default_radius,
                      diagonalize, energy_from_roots, extract_roots, ground_state_pipeline,
                      reconstruct_lambda, root_records, root_rows, verify_relations)


def test_canonical_zbar_representative():
    assert canonical_zbar(0.3 - 1.5j) == -0.3 + 1.5j
    assert canonical_zbar(-0.3 + 1.5j) == -0.3 + 1.5j
    assert canonical_zbar(-2.0 + 1e-12j) == 2.0
    assert canonical_zbar(0j) == 0j


def test_root_set_exposes_zbar_forms():
    roots = RootSet(z1_roots=(1j * 0.5j,), z_roots=(2.0,))
    assert roots.z1bar == [0.5j]
    # z = 2 -> zbar = -2i -> canonical 2i
    assert roots.zbar == [2j]


def test_energy_from_roots_sums_pole_terms():
    # one z root at z = 1 with eta = 1 contributes -1/(1 - 1/4)
    assert energy_from_roots([1.0]) == pytest.approx(-4.0 / 3.0)
    # zbar = 0 (z = 0) contributes +4
    assert energy_from_roots([0.0]) == pytest.approx(4.0)


def test_extract_roots_checks_counts():
    params = ModelParams.from_reduced(1, 0.6, -0.2)
    # degrees N+1 = 2 and 2N+3 = 5 are required; give the wrong one on purpose
    pair = LambdaPair(lam11=EvenPoly((1.0, 2.0, 1.0)), lam_half=EvenPoly((1.0, 0.0, 1.0)), eta=1.0)
    with pytest.raises(ExtractionError):
        extract_roots(pair, params)


def test_diagonalize_returns_common_eigenstates(tolerances):
    params = ModelParams.from_reduced(2, 0.6, -0.2)
    states = diagonalize(params, tolerances)
    assert len(states) == 9
    energies = [s.energy for s in states]
    assert energies == sorted(energies)
    assert np.allclose(energies, np.linalg.eigvalsh(hamiltonian(params)), atol=1e-9)
    assert all(s.is_common(tolerances) for s in states)


@pytest.mark.parametrize('n_sites', [2, 3, 4])
def test_ground_state_root_contract(n_sites, tolerances):
    params = ModelParams.from_reduced(n_sites, 0.6, -0.2)
    result = ground_state_pipeline(params, tolerances)
    assert len(result.roots.z_roots) == n_sites + 1
    assert len(result.roots.z1_roots) == 2 * n_sites + 3
    assert result.energy_mismatch < tolerances.root_energy
    assert result.relations['pass']
    assert result.relations['theta_relation'].get('skipped') == 'homogeneous chain'


def test_all_states_satisfy_relations_at_two_sites(tolerances):
    params = ModelParams.from_reduced(2, 1.5, -1.2)
    results = all_states_pipeline(params, tolerances)
    assert len(results) == 9
    for result in results:
        assert result.relations['pass']
        assert result.energy_mismatch < tolerances.root_energy


def test_inhomogeneous_chain_satisfies_theta_relation(tolerances):
    params = ModelParams.from_reduced(2, 0.6, -0.2, theta_bar=(0.13, -0.21))
    results = all_states_pipeline(params, tolerances)
    for result in results:
        assert result.relations['theta_relation']['pass']
        assert result.relations['fusion']['pass']
        assert len(result.roots.z1_roots) == 7


def test_sampling_circle_sits_on_root_scale():
    assert default_radius(ModelParams.from_reduced(4, 0.6, -0.2)) == pytest.approx(4.0)
    assert default_radius(ModelParams.from_reduced(4, 0.6, -0.2, eta=0.5)) == pytest.approx(1.0)


def test_four_site_fit_matches_value_at_zero(tolerances):
    params = ModelParams.from_reduced(4, 0.6, -0.2)
    ground = diagonalize(params, tolerances, n_states=1)[0]
    pair = reconstruct_lambda(ground, params, tolerances)
    report = verify_relations(pair, params, tolerances)
    assert report['value_at_zero']['pass']
    assert report['fusion']['pass']
    roots = extract_roots(pair, params, tolerances)
    assert energy_from_roots(roots.z1_roots) == pytest.approx(ground.energy, abs=tolerances.root_energy)


def test_inhomogeneous_ground_state_at_three_sites(tolerances):
    params = ModelParams.from_reduced(3, 0.6, -0.2, theta_bar=(0.11, -0.17, 0.23))
    result = ground_state_pipeline(params, tolerances)
    assert result.relations['theta_relation']['pass']
    assert result.relations['fusion']['pass']
    assert len(result.roots.z_roots) == 4


@pytest.mark.slow
def test_all_states_at_three_sites_with_inhomogeneities(tolerances):
    params = ModelParams.from_reduced(3, 0.6, -0.2, theta_bar=(0.11, -0.17, 0.23))
    results = all_states_pipeline(params, tolerances)
    assert len(results) == 27
    for result in results:
        assert result.relations['fusion']['pass']
        assert result.relations['theta_relation']['pass']
        assert len(result.relations['theta_relation']['per_site']) == 3


def test_root_exports(tolerances):
    params = ModelParams.from_reduced(2, 0.6, -0.2)
    result = ground_state_pipeline(params, tolerances)
    records = root_records(params, [result])
    assert records[0]['params']['N'] == 2
    assert len(records[0]['z1_roots']) == 7
    rows = root_rows([result])
    assert len(rows) == 3 + 7
    assert {row['family'] for row in rows} == {'z', 'z1'}
