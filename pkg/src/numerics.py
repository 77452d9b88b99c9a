"""
Dense complex linear algebra and even-polynomial utilities.

Matrices are plain complex numpy arrays. Eigenvalue polynomials are stored
in the squared variable w = v^2, which keeps the v -> -v pairing of roots
structural.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg

from config import DEFAULT_TOLERANCES, Tolerances
from errors import AccuracyError, ConditioningError, ContractError, DegreeError, SizeError

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray

MAX_KRON_DIMENSION = 3 ** 8 * 3


def as_complex_matrix(m) -> ComplexMatrix:
    """Validate and convert to a 2-D complex array with finite entries."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ContractError(f"Expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("Matrix has non-finite entries")
    return arr


def kron(a: ComplexMatrix, b: ComplexMatrix, max_dimension: int = MAX_KRON_DIMENSION) -> ComplexMatrix:
    """Kronecker product with a dimension guard."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dimension:
        raise SizeError(f"Kronecker product of size {rows}x{cols} exceeds the budget {max_dimension}",
                        rows=rows, cols=cols)
    return np.kron(a, b)


def relative_residual(left: ComplexMatrix, right: ComplexMatrix) -> float:
    """Frobenius residual of left - right, relative to the larger norm (absolute below 1)."""
    scale = max(np.linalg.norm(left), np.linalg.norm(right), 1.0)
    return float(np.linalg.norm(left - right) / scale)


def eig_hermitian(m: ComplexMatrix,
                  tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[np.ndarray, ComplexMatrix]:
    """
    Full eigendecomposition of a Hermitian matrix.

    Args:
        m: Square matrix, Hermitian within tolerances.hermitian (relative Frobenius)
        tolerances: Tolerance record

    Returns:
        (ascending real eigenvalues, orthonormal eigenvector columns)
    """
    m = as_complex_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ContractError(f"eig_hermitian needs a square matrix, got {m.shape}")
    norm = max(np.linalg.norm(m), 1.0)
    asymmetry = np.linalg.norm(m - m.conj().T) / norm
    if asymmetry > tolerances.hermitian:
        raise ContractError(f"Matrix is not Hermitian (relative asymmetry {asymmetry:.3e})",
                            asymmetry=float(asymmetry))

    values, vectors = linalg.eigh(0.5 * (m + m.conj().T))
    residual = np.linalg.norm(m @ vectors - vectors * values) / norm
    if residual > tolerances.eig_residual * max(1.0, m.shape[0]):
        logger.warning(f"Hermitian eigensolver residual {residual:.3e} above tolerance")
    return values, vectors


@dataclass(frozen=True)
class EvenPoly:
    """P(v) = sum_j coeffs[j] * (v^2)^j."""

    coeffs: Tuple[complex, ...]

    @property
    def degree_in_v2(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return self.coeffs[-1]

    def __call__(self, v):
        w = np.asarray(v, dtype=complex) ** 2
        return np.polynomial.polynomial.polyval(w, np.asarray(self.coeffs, dtype=complex))

    def max_coefficient(self) -> float:
        return float(np.max(np.abs(self.coeffs)))


def fit_even_poly(samples: Sequence[Tuple[complex, complex]], degree_in_v2: int,
                  tolerances: Tolerances = DEFAULT_TOLERANCES) -> EvenPoly:
    """
    Fit an even polynomial of exact degree through (v, value) samples.

    The system is solved in w = v^2 with columns scaled by the largest |w|,
    so nodes on a circle in the w-plane give a unitary (DFT-like) system.

    Raises:
        ContractError: too few distinct nodes
        ConditioningError: scaled Vandermonde condition estimate above tolerances.fit_condition
        AccuracyError: residual above tolerances.fit_residual * max|value|
    """
    if degree_in_v2 < 0:
        raise ContractError(f"degree_in_v2 must be non-negative, got {degree_in_v2}")
    v = np.array([s[0] for s in samples], dtype=complex)
    values = np.array([s[1] for s in samples], dtype=complex)
    w = v ** 2
    distinct = len(np.unique(np.round(w, 12)))
    if distinct < degree_in_v2 + 1:
        raise ContractError(f"Need {degree_in_v2 + 1} distinct v^2 nodes, got {distinct}")

    scale = float(np.max(np.abs(w))) or 1.0
    vander = np.vander(w / scale, degree_in_v2 + 1, increasing=True)
    condition = np.linalg.cond(vander)
    if condition > tolerances.fit_condition:
        raise ConditioningError(
            f"Node set is ill-conditioned (condition {condition:.3e}); respace the nodes",
            condition=float(condition))

    scaled, *_ = np.linalg.lstsq(vander, values, rcond=None)
    coeffs = scaled / scale ** np.arange(degree_in_v2 + 1)

    peak = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
    residual = float(np.max(np.abs(vander @ scaled - values)))
    if residual > tolerances.fit_residual * peak:
        raise AccuracyError(f"Even-polynomial fit residual {residual:.3e} exceeds "
                            f"{tolerances.fit_residual:.1e} * max|value|",
                            best_estimate=residual)
    return EvenPoly(tuple(complex(c) for c in coeffs))


def even_poly_roots(p: EvenPoly, tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[complex]:
    """
    All v-roots of an even polynomial, returned as (+r, -r) pairs.

    Roots in w are the eigenvalues of the companion matrix of the monic
    polynomial; each w gives the pair +-sqrt(w) (principal branch first).
    """
    coeffs = np.asarray(p.coeffs, dtype=complex)
    degree = len(coeffs) - 1
    scale = float(np.max(np.abs(coeffs))) or 1.0
    if abs(coeffs[-1]) <= tolerances.degenerate_leading * scale:
        raise DegreeError(f"Leading coefficient {coeffs[-1]:.3e} vanishes; the polynomial degree is degenerate",
                          degree=degree)
    if degree == 0:
        return []

    monic = coeffs / coeffs[-1]
    companion = np.zeros((degree, degree), dtype=complex)
    companion[1:, :-1] = np.eye(degree - 1)
    companion[:, -1] = -monic[:-1]
    w_roots = linalg.eigvals(companion)

    roots: List[complex] = []
    for w in w_roots:
        r = complex(np.sqrt(w))
        roots.extend([r, -r])

    check = np.abs(p(np.array(roots[::2]))) / scale
    worst = float(np.max(check)) if len(check) else 0.0
    if worst > tolerances.root_residual:
        logger.warning(f"Companion roots evaluate to {worst:.3e} (scaled); polynomial may be ill-conditioned")
    return roots


def quad_semiinfinite(f: Callable[[float], float], tol: float = DEFAULT_TOLERANCES.quadrature,
                      limit: int = 500) -> float:
    """
    Adaptive integral of f over [0, inf) with absolute error <= tol.

    Raises:
        AccuracyError: when the value or its error estimate is not finite, or the
            estimated error stays above tol (best estimate attached)
    """
    value, error = integrate.quad(f, 0.0, np.inf, epsabs=tol, epsrel=0.0, limit=limit)
    if not (np.isfinite(value) and np.isfinite(error)):
        raise AccuracyError(f"Quadrature produced a non-finite result ({value}, error {error})",
                            best_estimate=float(value))
    if error > tol:
        # the integrands decay like exp(-n w); split off the tail and retry
        head, head_err = integrate.quad(f, 0.0, 40.0, epsabs=tol / 2, epsrel=0.0, limit=limit)
        tail, tail_err = integrate.quad(f, 40.0, np.inf, epsabs=tol / 2, epsrel=0.0, limit=limit)
        value, error = head + tail, head_err + tail_err
        if not (np.isfinite(value) and np.isfinite(error)) or error > tol:
            raise AccuracyError(f"Quadrature did not converge: error estimate {error:.3e} > {tol:.1e}",
                                best_estimate=float(value))
    return float(value)


def quad_symmetric(f: Callable[[float], float], tol: float = DEFAULT_TOLERANCES.quadrature) -> float:
    """Integral of an even f over the whole line, by doubling the half-line integral."""
    return 2.0 * quad_semiinfinite(f, tol / 2.0)
