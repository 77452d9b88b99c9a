"""
Tests for the linear-algebra and even-polynomial helpers.
"""

import numpy as np
import pytest

from errors import AccuracyError, ConditioningError, ContractError, DegreeError, SizeError
from numerics import (EvenPoly, as_complex_matrix, eig_hermitian, even_poly_roots, fit_even_poly,
                      kron, quad_semiinfinite, quad_symmetric, relative_residual)


def test_as_complex_matrix_rejects_vectors_and_nan():
    with pytest.raises(ContractError):
        as_complex_matrix(np.ones(3))
    with pytest.raises(ContractError):
        as_complex_matrix([[1.0, np.nan], [0.0, 1.0]])


def test_kron_respects_budget():
    a = np.eye(3)
    assert kron(a, a).shape == (9, 9)
    with pytest.raises(SizeError):
        kron(a, np.eye(4), max_dimension=10)


def test_relative_residual_is_zero_for_equal_matrices():
    m = np.arange(9, dtype=complex).reshape(3, 3)
    assert relative_residual(m, m) == 0.0
    assert relative_residual(m, m + 1e-3) > 0.0


def test_eig_hermitian_orders_eigenvalues():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = x + x.conj().T
    values, vectors = eig_hermitian(h)
    assert np.all(np.diff(values) >= 0)
    assert np.allclose(h @ vectors, vectors * values, atol=1e-10)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(ContractError):
        eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_even_poly_evaluates_in_v_squared():
    p = EvenPoly((1.0, 2.0, 3.0))
    assert p.degree_in_v2 == 2
    assert p.leading == 3.0
    assert p(2.0) == pytest.approx(1 + 2 * 4 + 3 * 16)
    assert p(-2.0) == p(2.0)


def test_fit_recovers_coefficients_on_circle_nodes():
    target = EvenPoly((2.0 - 1j, 0.5, -1.5, 4.0))
    angles = np.pi * np.arange(6) / 6
    nodes = 1.7 * np.exp(1j * angles)
    fitted = fit_even_poly([(v, target(v)) for v in nodes], 3)
    assert np.allclose(fitted.coeffs, target.coeffs, atol=1e-10)


def test_fit_needs_enough_distinct_nodes():
    with pytest.raises(ContractError):
        fit_even_poly([(1.0, 1.0), (-1.0, 1.0)], 1)


def test_fit_flags_ill_conditioned_nodes():
    nodes = 1.0 + 1e-7 * np.arange(4)
    with pytest.raises(ConditioningError):
        fit_even_poly([(v, v ** 2) for v in nodes], 3)


def test_fit_flags_data_that_is_not_polynomial():
    nodes = np.exp(1j * np.pi * np.arange(8) / 8)
    with pytest.raises(AccuracyError):
        fit_even_poly([(v, np.exp(v)) for v in nodes], 1)


def test_roots_come_in_plus_minus_pairs():
    # (v^2 - 1)(v^2 + 4)
    p = EvenPoly((-4.0, 3.0, 1.0))
    roots = even_poly_roots(p)
    assert len(roots) == 4
    for r, s in zip(roots[::2], roots[1::2]):
        assert s == -r
    squares = sorted(np.round(np.array(roots[::2]) ** 2, 10), key=lambda w: w.real)
    assert np.allclose(squares, [-4.0, 1.0])


def test_roots_reject_degenerate_leading_coefficient():
    with pytest.raises(DegreeError):
        even_poly_roots(EvenPoly((1.0, 2.0, 0.0)))


def test_quadrature_helpers():
    assert quad_semiinfinite(lambda w: np.exp(-w)) == pytest.approx(1.0, abs=1e-10)
    assert quad_symmetric(lambda w: np.exp(-w * w)) == pytest.approx(np.sqrt(np.pi), abs=1e-9)


@pytest.mark.filterwarnings('ignore')
def test_quadrature_rejects_non_finite_integrands():
    with pytest.raises(AccuracyError):
        quad_semiinfinite(lambda w: np.nan)
    with pytest.raises(AccuracyError):
        quad_semiinfinite(lambda w: 0.0 * np.inf if w > 5 else np.exp(-w))
