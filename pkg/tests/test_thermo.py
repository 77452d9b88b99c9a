"""
Tests for the kernel transforms, ground-state energy integrals and surface energies.
"""

import math

import numpy as np
import pytest

import thermo
from errors import DomainError, ExtrapolationError, ParameterError
from thermo import (a_kernel, a_tilde, b_tilde, boundary_indices, closed_form_ground_energy,
                    discrete_root_energy, discrete_roots, extrapolate_surface_energy, fourier_pair_check,
                    ground_energy_thermo, rho_bstring, rho_delta, surface_energy,
                    surface_energy_closed_form, surface_energy_sweep)


def test_kernel_transforms_at_zero_frequency():
    assert a_tilde(3, 0.0) == 1.0
    assert b_tilde(3, 0.0) == 0.0
    assert b_tilde(2, -0.5) == pytest.approx(-1j * math.exp(-1.0))


def test_a_kernel_is_normalized():
    from scipy import integrate
    value, _ = integrate.quad(lambda u: a_kernel(2.0, u), -np.inf, np.inf)
    assert value == pytest.approx(1.0, abs=1e-9)


def test_fourier_convention_lock(tolerances):
    records = fourier_pair_check(tolerances=tolerances)
    assert len(records) == 5 * 4 * 2
    assert all(r['pass'] for r in records)


def test_closed_form_surface_energy_values():
    assert surface_energy_closed_form(1.0, 1.0) == pytest.approx(2 * math.pi - 7.0 / 3.0)
    # csc branch for -1 < q < 0
    assert surface_energy_closed_form(1.0, -0.5) == pytest.approx(13.0 / 6.0)
    assert closed_form_ground_energy(1.0, 1.0, 10) == pytest.approx(2 * math.pi - 7.0 / 3.0 - 10)


@pytest.mark.parametrize('p, q', [(0.0, 1.0), (-0.3, 1.0), (1.0, 0.0), (1.0, -1.0)])
def test_closed_form_domain(p, q):
    with pytest.raises(DomainError):
        surface_energy_closed_form(p, q)


def test_bulk_density_is_even_and_positive():
    w = np.linspace(-3, 3, 13)
    values = rho_delta(w, 50, 0.3, 1.2)
    assert np.allclose(values, values[::-1])
    assert np.all(values > 0)


def test_densities_stay_finite_far_out():
    # p = 0.3 < 1/2: both grow like e^{(1-2p)|w|} and stay finite
    w = np.array([40.0, 200.0, 800.0])
    bulk = rho_delta(w, 50, 0.3, 1.2)
    correction = rho_bstring('B', 50, 0.3, 1.2, z_x=2.0)(w)
    assert np.all(np.isfinite(bulk))
    assert np.all(np.isfinite(correction))
    assert rho_bstring('A', 50, 0.6, 1.2)(800.0) == 0.0


def test_regime_b_energy_at_one_hundred_sites():
    numeric = ground_energy_thermo('B', 100, 0.3, 1.2, z_x=2.0)
    assert math.isfinite(numeric)
    assert numeric == pytest.approx(-97.993038, abs=1e-5)
    assert math.isfinite(ground_energy_thermo('A', 100, 0.6, 1.2))


def test_regime_b_boundary_indices():
    assert boundary_indices('B', 0.3, 1.2, z_x=2.0) == pytest.approx([0.3, 1.3, 1.0, 2.0])
    assert boundary_indices('I', 1.5, -1.2) == pytest.approx([0.2, 1.2])
    with pytest.raises(ParameterError):
        boundary_indices('Q', 0.3, 1.2)


def test_free_parameters_are_required():
    with pytest.raises(ParameterError):
        rho_bstring('B', 50, 0.3, 1.2)
    with pytest.raises(ParameterError):
        ground_energy_thermo('G', 50, 0.6, -0.3, z_x=2.0)


def test_discrete_roots_of_regime_b():
    roots = discrete_roots('B', 0.3, 1.2, z_x=2.0)
    assert roots == pytest.approx([0j, 0.8j, 1.8j, 1.5j, 2.5j])
    assert discrete_root_energy(0j) == pytest.approx(4.0)


@pytest.mark.parametrize('seed', range(4))
def test_regime_b_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    for _ in range(5):
        p = rng.uniform(0.05, 0.45)
        q = rng.uniform(0.55, 3.0)
        numeric = ground_energy_thermo('B', 100, p, q, z_x=2.0)
        assert numeric == pytest.approx(closed_form_ground_energy(p, q, 100), abs=1e-6)


def test_regime_b_is_independent_of_z_x():
    reference = ground_energy_thermo('B', 60, 0.3, 1.2, z_x=1.7)
    for z_x in (2.0, 2.9, 4.5):
        assert ground_energy_thermo('B', 60, 0.3, 1.2, z_x=z_x) == pytest.approx(reference, abs=1e-8)


def test_regime_g_is_independent_of_lambda():
    reference = ground_energy_thermo('G', 60, 0.6, -0.3, z_x=2.0, lam=0.4)
    for lam in (0.9, 1.6):
        assert ground_energy_thermo('G', 60, 0.6, -0.3, z_x=2.0, lam=lam) == pytest.approx(reference, abs=1e-7)


def test_energy_per_site_approaches_bulk_value():
    e50 = ground_energy_thermo('A', 50, 0.6, 1.2)
    e150 = ground_energy_thermo('A', 150, 0.6, 1.2)
    assert (e150 - e50) / 100 == pytest.approx(-1.0, abs=1e-8)


def test_surface_energy_result():
    result = surface_energy(0.3, 1.2, regime='B', z_x=2.0)
    assert result.integral_value == pytest.approx(result.closed_form, abs=1e-6)
    assert result.relative_deviation is None
    payload = result.to_dict()
    assert payload['regime'] == 'B'
    assert 'relative_deviation' in payload

    csc = surface_energy(0.6, -0.2)
    assert any('csc' in note for note in csc.notes)


def test_extrapolation_argument_checks():
    with pytest.raises(ParameterError):
        extrapolate_surface_energy(1.0, 1.0, [3, 4], fit_order=3)
    with pytest.raises(ParameterError):
        extrapolate_surface_energy(1.0, 1.0, [3])
    # one length of each parity cannot fix a line in 1/N^2
    with pytest.raises(ParameterError):
        extrapolate_surface_energy(1.0, 1.0, [3, 4])


# E_b(N) measured at p = q = 1; odd lengths sit close to the limit, even ones drift down slowly
ALTERNATING_SEQUENCE = {3: 3.916, 4: 4.530, 5: 3.917, 6: 4.402}


def _fake_ed(sequence):
    def energy(params, max_dimension):
        return sequence[params.n_sites] - params.n_sites
    return energy


def test_extrapolation_follows_the_flatter_parity(monkeypatch, tolerances):
    monkeypatch.setattr(thermo, 'ed_ground_energy', _fake_ed(ALTERNATING_SEQUENCE))
    result = extrapolate_surface_energy(1.0, 1.0, [3, 4, 5, 6])
    assert result.branches['odd'] == pytest.approx(3.9175625)
    assert result.branches['even'] == pytest.approx(4.2996)
    assert result.extrapolated == pytest.approx(result.branches['odd'])
    assert result.uncertainty == pytest.approx(4.2996 - 3.9175625)
    assert result.relative_deviation <= tolerances.extrapolation
    assert any('odd-N' in note for note in result.notes)


def test_extrapolation_miss_raises_with_result(monkeypatch):
    shifted = {n: value + 1.0 for n, value in ALTERNATING_SEQUENCE.items()}
    monkeypatch.setattr(thermo, 'ed_ground_energy', _fake_ed(shifted))
    with pytest.raises(ExtrapolationError) as exc:
        extrapolate_surface_energy(1.0, 1.0, [3, 4, 5, 6])
    assert exc.value.result.extrapolated == pytest.approx(4.9175625)
    assert exc.value.exit_code == 1


def test_extrapolation_without_closed_form(monkeypatch):
    monkeypatch.setattr(thermo, 'ed_ground_energy', _fake_ed({3: 1.0, 5: 1.5, 7: 1.7}))
    result = extrapolate_surface_energy(-0.5, 1.0, [3, 5, 7])
    assert result.closed_form is None
    assert set(result.branches) == {'odd'}
    assert result.uncertainty is not None


def test_closed_form_sweep_grid():
    rows = surface_energy_sweep([0.5, 0.2], [1.0, 2.0])
    assert [(r['p'], r['q']) for r in rows] == [(0.2, 1.0), (0.2, 2.0), (0.5, 1.0), (0.5, 2.0)]
    assert all(r['error'] == '' for r in rows)
    assert rows[0]['E_b_closed'] == pytest.approx(surface_energy_closed_form(0.2, 1.0))


def test_sweep_keeps_failing_points():
    rows = surface_energy_sweep([0.5], [0.0, 1.0])
    assert rows[0]['error'] == 'domain_error'
    assert rows[1]['error'] == ''


@pytest.mark.slow
@pytest.mark.parametrize('p, q', [(1.0, 1.0), (0.6, -0.2)])
def test_extrapolated_surface_energy(p, q, tolerances):
    result = extrapolate_surface_energy(p, q, [3, 4, 5, 6])
    assert len(result.raw) == 4
    assert result.uncertainty is not None
    assert result.relative_deviation <= tolerances.extrapolation
