"""
Tests for regime templates, root-pattern classification and the root constraints.
"""

import pytest

from errors import ParameterError
from model import ModelParams
from patterns import (TEMPLATES, UNCLASSIFIED, bae_residual, bulk_string_members, classify, pairing_check,
                      probe_report, regime_probe, score_template, template_for)
from spectrum import RootSet, ground_state_pipeline


def _root_set(zbar, z1bar):
    # RootSet stores z with zbar = -i z
    return RootSet(z1_roots=tuple(1j * z for z in z1bar), z_roots=tuple(1j * z for z in zbar))


def _regime_b_roots(p, z_x=2.0):
    zbar = [(1 + p) * 1j, 5.0, z_x * 1j, 0.3 + 1.5j, -0.3 + 1.5j]
    z1bar = [0j, (0.5 + p) * 1j, (1.5 + p) * 1j, 4.0, 6.0, (z_x - 0.5) * 1j, (z_x + 0.5) * 1j,
             0.3 + 1j, 0.3 + 2j, -0.3 + 1j, -0.3 + 2j]
    return _root_set(zbar, z1bar)


def _regime_i_roots(q):
    aq = abs(q)
    zbar = [aq * 1j, 0.4 + 1.5j, -0.4 + 1.5j, 1.1 + 1.5j, -1.1 + 1.5j]
    z1bar = [0j, (aq - 0.5) * 1j, (aq + 0.5) * 1j]
    for x in (0.4, -0.4, 1.1, -1.1):
        z1bar.extend([x + 1j, x + 2j])
    return _root_set(zbar, z1bar)


def _regime_k_roots(z_x=2.0, lift=0.19):
    # bulk four-string tops sit `lift` above their limiting position, as at N = 4
    xs = (0.4, -0.4, 1.1, -1.1)
    zbar = [z_x * 1j] + [x + 1.5j for x in xs]
    z1bar = [0j, (z_x - 0.5) * 1j, (z_x + 0.5) * 1j]
    for x in xs:
        z1bar.extend([x + 1j, x + (2 + lift) * 1j])
    return _root_set(zbar, z1bar)


@pytest.mark.parametrize('label', sorted(TEMPLATES))
@pytest.mark.parametrize('n_sites', [2, 4, 6])
def test_templates_have_the_right_root_counts(label, n_sites):
    z, z1 = TEMPLATES[label].expand(n_sites)
    assert len(z) == n_sites + 1
    assert len(z1) == 2 * n_sites + 3


def test_template_for_evaluates_positions():
    expanded = template_for('B', 4, 0.25, 1.0)
    assert expanded.positions['(1+p)i'] == 1.25j
    assert expanded.positions['(3/2+p)i'] == 1.75j
    assert 'z_x i' in expanded.z_descriptors
    with pytest.raises(ParameterError):
        template_for('Z', 4, 0.25, 1.0)


def test_reduced_bulk_needs_two_sites():
    with pytest.raises(ParameterError):
        TEMPLATES['B'].expand(1)


def test_classify_exact_regime_b_pattern():
    params = ModelParams.from_reduced(4, 0.25, 1.3)
    report = classify(_regime_b_roots(0.25), params)
    assert report.label == 'B'
    assert report.misfit == pytest.approx(0.0, abs=1e-12)
    assert report.fitted['z_x'] == pytest.approx(2.0)
    assert report.fitted['z_tilde'] == pytest.approx([-0.3, 0.3])
    assert report.unassigned == []
    assert report.second_best()[1] > 0.1


def test_classify_exact_regime_i_pattern():
    params = ModelParams.from_reduced(4, 1.5, -1.2)
    report = classify(_regime_i_roots(-1.2), params)
    assert report.label == 'I'
    assert report.misfit == pytest.approx(0.0, abs=1e-12)
    assert report.to_dict()['classified'] is True


def test_small_perturbations_keep_the_label():
    params = ModelParams.from_reduced(4, 1.5, -1.2)
    roots = _regime_i_roots(-1.2)
    shifted = RootSet(z1_roots=tuple(z + 0.01 for z in roots.z1_roots),
                      z_roots=tuple(z - 0.02j for z in roots.z_roots))
    report = classify(shifted, params)
    assert report.label == 'I'
    assert report.misfit < 0.05


def test_bulk_string_offsets_do_not_enter_the_misfit():
    params = ModelParams.from_reduced(4, 0.6, -2.5)
    report = classify(_regime_k_roots(), params)
    assert report.label == 'K'
    assert report.misfit == pytest.approx(0.0, abs=1e-12)
    assert report.fitted['z_x'] == pytest.approx(2.0)
    runner_up, score = report.second_best()
    assert runner_up != 'K'
    assert score > 0.15
    assert report.scores['L'] >= 10 * max(report.misfit, 1e-3)


def test_broken_bulk_strings_fail_the_template():
    roots = _regime_i_roots(-1.2)
    lifted = _root_set(roots.zbar, [z + 0.7j if abs(z.imag - 2.0) < 1e-9 else z for z in roots.z1bar])
    misfit, _ = score_template(TEMPLATES['I'], lifted.zbar, lifted.z1bar, 4, 1.5, -1.2)
    assert misfit == float('inf')
    misfit, _ = score_template(TEMPLATES['I'], lifted.zbar, lifted.z1bar, 4, 1.5, -1.2, string_tol=0.8)
    assert misfit == pytest.approx(0.0, abs=1e-12)


def test_scrambled_roots_are_unclassified():
    params = ModelParams.from_reduced(4, 1.5, -1.2)
    zbar = [0.7 + 0.2j, 2.3 + 0.9j, -1.7 + 2.6j, 3.1, 0.2 + 3.3j]
    z1bar = [0.9 + 0.3j, 1.4 + 2.7j, -2.2 + 0.4j, 2.9, 0.6 + 3.1j, -0.8 + 2.5j,
             1.9 + 1.5j, -1.3 + 0.6j, 3.7 + 0.1j, -3.3 + 2.8j, 0.1 + 4.2j]
    report = classify(_root_set(zbar, z1bar), params)
    assert report.label == UNCLASSIFIED
    assert not report.classified
    assert set(report.scores) == set(TEMPLATES)


def test_score_template_missing_families_is_infinite():
    roots = _regime_i_roots(-1.2)
    misfit, _ = score_template(TEMPLATES['G'], roots.zbar, roots.z1bar, 4, 1.5, -1.2)
    assert misfit > 0.15


def test_pairing_gaps_vanish_for_exact_strings():
    pairs = pairing_check(_regime_i_roots(-1.2))
    assert len(pairs) == 5
    assert all(pair['within_tol'] for pair in pairs)
    assert max(pair['gap'] for pair in pairs) == pytest.approx(0.0, abs=1e-12)


def test_pairing_skips_roots_without_string_partners():
    roots = _regime_k_roots(z_x=2.4, lift=0.0)
    # a complex extra root with no four-string partners
    with_extra = _root_set(list(roots.zbar) + [2.7 + 0.4j], roots.z1bar)
    assert len(bulk_string_members(with_extra)) == 4
    pairs = pairing_check(with_extra)
    assert len(pairs) == 4
    assert all(pair['gap'] == pytest.approx(0.0, abs=1e-12) for pair in pairs)
    assert sorted(round(pair['zbar'][1], 9) for pair in pairs) == [-1.5] * 4


def test_bae_residual_report_shape():
    params = ModelParams.from_reduced(4, 1.5, -1.2)
    report = bae_residual(_regime_i_roots(-1.2), params)
    assert len(report['per_root']) == 5
    assert set(report) == {'per_root', 'max_residual', 'tolerance', 'pass'}


@pytest.mark.parametrize('n_sites', [3, 4])
def test_ground_state_roots_satisfy_bae(n_sites, tolerances):
    params = ModelParams.from_reduced(n_sites, 0.6, -0.2)
    result = ground_state_pipeline(params, tolerances)
    assert bae_residual(result.roots, params, tolerances)['pass']


@pytest.mark.slow
@pytest.mark.parametrize('p, q, expected', [
    (0.6, -0.2, 'E'),
    (0.6, -2.5, 'K'),
    (1.5, -1.2, 'I'),
    (0.25, 1.0, 'B'),
])
def test_ground_state_patterns_at_four_sites(p, q, expected, tolerances):
    assert regime_probe(p, q, 4, tolerances) == expected
    report = probe_report(p, q, 4, tolerances)
    _, runner_up = report.second_best()
    assert runner_up >= 10 * report.misfit


@pytest.mark.slow
def test_pairing_gaps_shrink_with_chain_length(tolerances):
    gaps = []
    for n_sites in range(2, 6):
        result = ground_state_pipeline(ModelParams.from_reduced(n_sites, 0.6, -0.2), tolerances)
        pairs = pairing_check(result.roots, member_tol=tolerances.string_member)
        assert len(pairs) >= 1
        # the string nearest the imaginary axis
        gaps.append(min(pairs, key=lambda pair: abs(pair['zbar'][0]))['gap'])
    assert gaps == sorted(gaps, reverse=True)
