"""
Finite-N spectrum, eigenvalue polynomials and their zero roots.

Pipeline for one state: diagonalize H, confirm the eigenvector is common to
both transfer-matrix families, sample the eigenvalues <psi|t(u)|psi> on a
circle of nodes in the v^2 plane (v = u + eta/2), fit the even polynomials
Lambda^(1,1) and Lambda^(1/2,1), check the functional relations they obey,
and extract their zeros.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg

from config import DEFAULT_TOLERANCES, Tolerances
from errors import (AccuracyError, DegeneracyError, DegreeError, ExtractionError,
                    ReconstructionError)
from model import (DEFAULT_MAX_DIMENSION, KINDS, SPIN11, SPIN_HALF_1, ModelParams,
                   apply_transfer, check_budget, delta1, hamiltonian,
                   leading_coefficients, random_points, transfer_at_zero_value)
from numerics import EvenPoly, eig_hermitian, even_poly_roots, fit_even_poly

logger = logging.getLogger(__name__)

DEFAULT_PROBE_POINTS = (0.37, 1.13)
DEFAULT_ROTATION_POINT = 0.37


@dataclass
class EigenState:
    index: int
    energy: float
    vector: np.ndarray
    transfer_residuals: Dict[str, float] = field(default_factory=dict)

    def is_common(self, tolerances: Tolerances = DEFAULT_TOLERANCES) -> bool:
        return all(r <= tolerances.transfer_residual for r in self.transfer_residuals.values())


@dataclass(frozen=True)
class LambdaPair:
    """Eigenvalue polynomials in v = u + eta/2 for one common eigenstate."""

    lam11: EvenPoly
    lam_half: EvenPoly
    eta: float

    @property
    def lead11(self) -> complex:
        return self.lam11.leading

    @property
    def lead_half(self) -> complex:
        return self.lam_half.leading

    def lam11_at(self, u):
        return self.lam11(np.asarray(u, dtype=complex) + self.eta / 2)

    def lam_half_at(self, u):
        return self.lam_half(np.asarray(u, dtype=complex) + self.eta / 2)


def canonical_zbar(zbar: complex, tol: float = 1e-9) -> complex:
    """Representative of the pair +-zbar with Im > 0, or Re >= 0 on the real axis."""
    zbar = complex(zbar)
    if abs(zbar.imag) < tol:
        return complex(abs(zbar.real), 0.0) if zbar.real < 0 else zbar
    return zbar if zbar.imag > 0 else -zbar


@dataclass(frozen=True)
class RootSet:
    """
    Zero roots of one state; z1_roots holds 2N+3 and z_roots N+1 representatives.

    Lambda(u) vanishes at u = +-z - eta/2; the zbar forms are -i z.
    """

    z1_roots: tuple
    z_roots: tuple
    max_residual: float = 0.0

    @property
    def z1bar(self) -> List[complex]:
        return [canonical_zbar(-1j * z) for z in self.z1_roots]

    @property
    def zbar(self) -> List[complex]:
        return [canonical_zbar(-1j * z) for z in self.z_roots]


# Diagonalization

def _transfer_residuals(vectors: np.ndarray, params: ModelParams,
                        probe_points: Sequence[float]) -> np.ndarray:
    """Worst relative residual ||t psi - <psi|t|psi> psi|| over kinds and probes, per column."""
    worst = np.zeros(vectors.shape[1])
    for kind in KINDS:
        for point in probe_points:
            u0 = point * params.eta
            applied = apply_transfer(u0, params, kind, vectors)
            quotients = np.einsum('ij,ij->j', vectors.conj(), applied)
            residual = np.linalg.norm(applied - vectors * quotients, axis=0)
            scale = np.maximum(np.linalg.norm(applied, axis=0), 1.0)
            worst = np.maximum(worst, residual / scale)
    return worst


def _residuals_by_kind(vector: np.ndarray, params: ModelParams,
                       probe_points: Sequence[float]) -> Dict[str, float]:
    result = {}
    for kind in KINDS:
        worst = 0.0
        for point in probe_points:
            applied = apply_transfer(point * params.eta, params, kind, vector)
            quotient = np.vdot(vector, applied)
            residual = np.linalg.norm(applied - quotient * vector) / max(np.linalg.norm(applied), 1.0)
            worst = max(worst, float(residual))
        result[kind] = worst
    return result


def _energy_groups(energies: np.ndarray, tol: float) -> List[List[int]]:
    groups = [[0]]
    for i in range(1, len(energies)):
        if abs(energies[i] - energies[groups[-1][0]]) <= tol * max(1.0, abs(energies[i])):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _rotate_subspace(basis: np.ndarray, params: ModelParams, u0: float) -> np.ndarray:
    """Diagonalize t^(1/2,1)(u0) restricted to span(basis); returns unit eigenvectors."""
    restricted = basis.conj().T @ apply_transfer(u0, params, SPIN_HALF_1, basis)
    _, coefficients = linalg.eig(restricted)
    rotated = basis @ coefficients
    return rotated / np.linalg.norm(rotated, axis=0)


def diagonalize(params: ModelParams, tolerances: Tolerances = DEFAULT_TOLERANCES,
                probe_points: Sequence[float] = DEFAULT_PROBE_POINTS,
                rotation_point: float = DEFAULT_ROTATION_POINT,
                n_states: Optional[int] = None,
                max_dimension: int = DEFAULT_MAX_DIMENSION) -> List[EigenState]:
    """
    Full spectrum of H with common transfer-matrix eigenvectors.

    Degenerate energy levels are rotated so that t^(1/2,1)(u0) is diagonal within
    each level. Only the lowest n_states levels (all when None) are probed, but a
    degenerate level is always kept whole.

    For inhomogeneous chains H no longer commutes with t(u); the states are then
    the eigenvectors of t^(1/2,1)(u0) and energy holds the H expectation value.

    Raises:
        SizeError: 3^N times the auxiliary dimension exceeds max_dimension
        DegeneracyError: a rotated level still fails the transfer residual check
    """
    check_budget(params, SPIN11, max_dimension)
    if not params.homogeneous:
        return _diagonalize_inhomogeneous(params, probe_points, rotation_point, n_states)

    h = hamiltonian(params)
    energies, vectors = eig_hermitian(h, tolerances)
    logger.info(f"Diagonalized H for N={params.n_sites} (dimension {params.dimension}); "
                f"E0 = {energies[0]:.10f}")

    u0 = rotation_point * params.eta
    states: List[EigenState] = []
    for group in _energy_groups(energies, tolerances.degeneracy):
        if n_states is not None and len(states) >= n_states:
            break
        basis = vectors[:, group]
        if len(group) > 1:
            basis = _rotate_subspace(basis, params, u0)
            worst = _transfer_residuals(basis, params, probe_points)
            if np.max(worst) > tolerances.degeneracy:
                raise DegeneracyError(
                    f"Degenerate level at E={energies[group[0]]:.8f} not resolved by t^(1/2,1)({u0})",
                    dimension=len(group))
            logger.warning(f"Rotated degenerate level of dimension {len(group)} at E={energies[group[0]]:.8f}")
        for column, index in enumerate(group):
            vector = basis[:, column]
            state = EigenState(index=index, energy=float(energies[index]), vector=vector)
            state.transfer_residuals = _residuals_by_kind(vector, params, probe_points)
            states.append(state)
    return states


def _diagonalize_inhomogeneous(params: ModelParams,
                               probe_points: Sequence[float], rotation_point: float,
                               n_states: Optional[int]) -> List[EigenState]:
    u0 = rotation_point * params.eta
    t_half = apply_transfer(u0, params, SPIN_HALF_1, np.eye(params.dimension, dtype=complex))
    _, vectors = linalg.eig(t_half)
    vectors = vectors / np.linalg.norm(vectors, axis=0)

    h = hamiltonian(params.homogeneous_copy())
    expectations = np.real(np.einsum('ij,ij->j', vectors.conj(), h @ vectors))
    order = np.argsort(expectations)
    if n_states is not None:
        order = order[:n_states]

    states = []
    for rank, column in enumerate(order):
        vector = vectors[:, column]
        state = EigenState(index=rank, energy=float(expectations[column]), vector=vector)
        state.transfer_residuals = _residuals_by_kind(vector, params, probe_points)
        states.append(state)
    logger.info(f"Diagonalized t^(1/2,1)({u0}) for inhomogeneous N={params.n_sites}")
    return states


# Eigenvalue polynomials

FIT_RADII = (4.0, 2.0, 9.0)


def default_radius(params: ModelParams) -> float:
    """Circle radius in w = v^2 on the scale of the roots."""
    return FIT_RADII[0] * params.eta ** 2


def candidate_radii(params: ModelParams) -> List[float]:
    return [r * params.eta ** 2 for r in FIT_RADII]


def _circle_nodes(count: int, radius: float) -> np.ndarray:
    # v-nodes whose squares sit evenly on |w| = radius, offset off the real axis
    angles = 2 * np.pi * (np.arange(count) + 0.5) / count
    return np.sqrt(radius * np.exp(1j * angles))


def _sample_eigenvalue(state: EigenState, params: ModelParams, kind: str,
                       nodes: np.ndarray) -> List[tuple]:
    vector = state.vector / np.linalg.norm(state.vector)
    samples = []
    for v in nodes:
        u = v - params.eta / 2
        samples.append((v, complex(np.vdot(vector, apply_transfer(u, params, kind, vector)))))
    return samples


def _check_leading(name: str, got: complex, expected: complex, tolerances: Tolerances) -> None:
    if abs(expected) <= tolerances.degenerate_leading:
        raise DegreeError(f"Leading coefficient of {name} vanishes for these boundary parameters; "
                          f"the polynomial degree drops", expected=complex(expected))
    mismatch = abs(got - expected) / abs(expected)
    if mismatch > tolerances.leading_coefficient:
        raise DegreeError(f"Leading coefficient of {name} is {got:.8g}, expected {expected:.8g} "
                          f"(relative mismatch {mismatch:.2e})", mismatch=mismatch)


def reconstruct_lambda(state: EigenState, params: ModelParams,
                       tolerances: Tolerances = DEFAULT_TOLERANCES,
                       radius: Optional[float] = None) -> LambdaPair:
    """
    Fit Lambda^(1,1) (degree 2N+3 in v^2) and Lambda^(1/2,1) (degree N+1).

    Samples are Rayleigh quotients at degree+3 nodes per polynomial. Without an
    explicit radius the candidate circles are tried in turn; the first fit whose
    fusion residual is within tolerance wins, otherwise the one with the smallest.

    Raises:
        ReconstructionError: fit residual too large, or Lambda^(1/2,1)(0) off its closed form
        DegreeError: a leading coefficient disagrees with its closed form
    """
    if radius:
        return _fit_on_circle(state, params, tolerances, radius)

    checkpoints = random_points(np.random.default_rng(0), 8, scale=1.0)
    best, best_residual, last_error = None, np.inf, None
    for candidate in candidate_radii(params):
        try:
            pair = _fit_on_circle(state, params, tolerances, candidate)
        except (ReconstructionError, DegreeError) as e:
            last_error = e
            continue
        residual = max(fusion_residual(pair, params, u) for u in checkpoints)
        if residual <= tolerances.fusion:
            return pair
        logger.debug(f"State {state.index}: radius {candidate:.3g} leaves fusion residual {residual:.2e}")
        if residual < best_residual:
            best, best_residual = pair, residual
    if best is None:
        raise last_error
    logger.warning(f"State {state.index}: no sampling circle meets the fusion tolerance "
                   f"(best residual {best_residual:.2e})")
    return best


def _fit_on_circle(state: EigenState, params: ModelParams, tolerances: Tolerances,
                   radius: float) -> LambdaPair:
    degrees = {SPIN11: 2 * params.n_sites + 3, SPIN_HALF_1: params.n_sites + 1}
    polys = {}
    for kind, degree in degrees.items():
        samples = _sample_eigenvalue(state, params, kind, _circle_nodes(degree + 3, radius))
        try:
            polys[kind] = fit_even_poly(samples, degree, tolerances)
        except AccuracyError as e:
            raise ReconstructionError(f"Could not fit the {kind} eigenvalue of state {state.index}: {e}",
                                      state_index=state.index) from e

    expected = leading_coefficients(params)
    _check_leading('Lambda^(1,1)', polys[SPIN11].leading, expected['lam11'], tolerances)
    _check_leading('Lambda^(1/2,1)', polys[SPIN_HALF_1].leading, expected['lam_half'], tolerances)

    pair = LambdaPair(lam11=polys[SPIN11], lam_half=polys[SPIN_HALF_1], eta=params.eta)
    at_zero = complex(pair.lam_half_at(0.0))
    target = transfer_at_zero_value(params)
    mismatch = abs(at_zero - target) / max(abs(target), 1.0)
    if mismatch > tolerances.transfer_residual:
        raise ReconstructionError(f"Lambda^(1/2,1)(0) = {at_zero:.10g}, expected {target:.10g}",
                                  mismatch=mismatch)
    return pair


def _relation(residual: float, tolerance: float, **extra) -> Dict:
    record = {'residual': float(residual), 'tolerance': tolerance, 'pass': bool(residual <= tolerance)}
    record.update(extra)
    return record


def fusion_residual(pair: LambdaPair, params: ModelParams, u: complex) -> float:
    eta = params.eta
    product = pair.lam_half_at(u + eta / 2) * pair.lam_half_at(u - eta / 2)
    det = delta1(u + eta / 2, params)
    lam11 = pair.lam11_at(u)
    rhs = -4 * u * (u + eta) * (product - det)
    scale = max(abs(lam11), abs(4 * u * (u + eta) * product), 1.0)
    return float(abs(lam11 - rhs) / scale)


def theta_relation_residual(pair: LambdaPair, params: ModelParams, theta: complex) -> float:
    eta = params.eta
    left = pair.lam11_at(theta) * pair.lam_half_at(theta - 1.5 * eta)
    right = -4 * theta * (theta + eta) * delta1(theta - eta / 2, params) * pair.lam_half_at(theta + eta / 2)
    return float(abs(left - right) / max(abs(left), abs(right), 1.0))


def verify_relations(pair: LambdaPair, params: ModelParams,
                     tolerances: Tolerances = DEFAULT_TOLERANCES,
                     points: int = 50, seed: int = 0) -> Dict:
    """
    Residuals of crossing, the value at u=0, the asymptotics, fusion and the
    relation at the inhomogeneities. Report only; never raises on bad residuals.
    """
    rng = np.random.default_rng(seed)
    us = random_points(rng, points, scale=1.0)
    eta = params.eta

    crossing = max(abs(pair.lam11_at(u) - pair.lam11_at(-u - eta)) / max(abs(pair.lam11_at(u)), 1.0)
                   for u in us)
    target = transfer_at_zero_value(params)
    at_zero = abs(complex(pair.lam_half_at(0.0)) - target) / max(abs(target), 1.0)
    expected = leading_coefficients(params)
    asymptotics = max(abs(pair.lead11 - expected['lam11']) / max(abs(expected['lam11']), 1e-300),
                      abs(pair.lead_half - expected['lam_half']) / max(abs(expected['lam_half']), 1e-300))
    fusion = max(fusion_residual(pair, params, u) for u in us)

    report = {
        'crossing': _relation(crossing, tolerances.identity),
        'value_at_zero': _relation(at_zero, tolerances.transfer_residual),
        'asymptotics': _relation(asymptotics, tolerances.leading_coefficient),
        'fusion': _relation(fusion, tolerances.fusion, points=points),
    }
    if params.homogeneous:
        report['theta_relation'] = {'residual': None, 'tolerance': tolerances.fusion, 'pass': True,
                                    'skipped': 'homogeneous chain'}
    else:
        residuals = [theta_relation_residual(pair, params, th) for th in params.theta]
        report['theta_relation'] = _relation(max(residuals), tolerances.fusion,
                                             per_site=[float(r) for r in residuals])
    report['pass'] = all(entry['pass'] for entry in report.values())
    return report


# Roots

def extract_roots(pair: LambdaPair, params: ModelParams,
                  tolerances: Tolerances = DEFAULT_TOLERANCES) -> RootSet:
    """
    Zeros of both polynomials in v; one representative per +- pair.

    Raises:
        ExtractionError: root counts differ from 2N+3 and N+1
    """
    n_sites = params.n_sites
    z1 = even_poly_roots(pair.lam11, tolerances)[::2]
    z = even_poly_roots(pair.lam_half, tolerances)[::2]
    if len(z1) != 2 * n_sites + 3 or len(z) != n_sites + 1:
        raise ExtractionError(f"Expected {2 * n_sites + 3} and {n_sites + 1} root pairs, "
                              f"got {len(z1)} and {len(z)}")

    residuals = []
    for poly, roots in ((pair.lam11, z1), (pair.lam_half, z)):
        scale = poly.max_coefficient() * max(1.0, max(abs(r) for r in roots)) ** (2 * poly.degree_in_v2)
        residuals.extend(abs(poly(r)) / scale for r in roots)
    return RootSet(z1_roots=tuple(z1), z_roots=tuple(z), max_residual=float(max(residuals)))


def energy_from_roots(z1_roots: Sequence[complex], eta: float = 1.0) -> float:
    """E = -sum_k eta / (z_k^2 - eta^2/4) over the Lambda^(1,1) roots."""
    total = sum(eta / (complex(z) ** 2 - eta ** 2 / 4) for z in z1_roots)
    return float(-total.real)


def _pair(value: complex) -> List[float]:
    return [float(value.real), float(value.imag)]


def root_records(params: ModelParams, results: Sequence['StateResult']) -> List[Dict]:
    """JSON-ready records, one per state."""
    return [{
        'params': params.as_dict(),
        'state_index': r.state.index,
        'energy': r.state.energy,
        'energy_from_roots': r.energy_from_roots,
        'z_roots': [_pair(z) for z in r.roots.zbar],
        'z1_roots': [_pair(z) for z in r.roots.z1bar],
    } for r in results]


def root_rows(results: Sequence['StateResult']) -> List[Dict]:
    """Flat rows, one root per row, for CSV export."""
    rows = []
    for r in results:
        for family, values in (('z', r.roots.zbar), ('z1', r.roots.z1bar)):
            for i, value in enumerate(values):
                rows.append({'state_index': r.state.index, 'energy': r.state.energy,
                             'family': family, 'root_index': i,
                             'zbar_re': value.real, 'zbar_im': value.imag})
    return rows


@dataclass
class StateResult:
    state: EigenState
    pair: LambdaPair
    roots: RootSet
    relations: Dict
    energy_from_roots: float

    @property
    def energy_mismatch(self) -> float:
        return abs(self.energy_from_roots - self.state.energy)


def analyze_state(state: EigenState, params: ModelParams,
                  tolerances: Tolerances = DEFAULT_TOLERANCES, seed: int = 0,
                  radius: Optional[float] = None) -> StateResult:
    pair = reconstruct_lambda(state, params, tolerances, radius)
    roots = extract_roots(pair, params, tolerances)
    relations = verify_relations(pair, params, tolerances, seed=seed)
    energy = energy_from_roots(roots.z1_roots, params.eta)
    result = StateResult(state=state, pair=pair, roots=roots, relations=relations, energy_from_roots=energy)
    if params.homogeneous and result.energy_mismatch > tolerances.root_energy:
        logger.warning(f"State {state.index}: energy from roots {energy:.10f} differs from "
                       f"ED {state.energy:.10f} by {result.energy_mismatch:.2e}")
    return result


def ground_state_pipeline(params: ModelParams, tolerances: Tolerances = DEFAULT_TOLERANCES,
                          probe_points: Sequence[float] = DEFAULT_PROBE_POINTS,
                          rotation_point: float = DEFAULT_ROTATION_POINT,
                          seed: int = 0, max_dimension: int = DEFAULT_MAX_DIMENSION) -> StateResult:
    """Diagonalize, reconstruct and extract the roots of the lowest state."""
    states = diagonalize(params, tolerances, probe_points, rotation_point, n_states=1,
                         max_dimension=max_dimension)
    ground = states[0]
    result = analyze_state(ground, params, tolerances, seed)
    logger.info(f"Ground state N={params.n_sites}, p={params.p:.4f}, q={params.q:.4f}: "
                f"E0={ground.energy:.10f}, from roots {result.energy_from_roots:.10f}")
    return result


def all_states_pipeline(params: ModelParams, tolerances: Tolerances = DEFAULT_TOLERANCES,
                        probe_points: Sequence[float] = DEFAULT_PROBE_POINTS,
                        rotation_point: float = DEFAULT_ROTATION_POINT,
                        seed: int = 0, max_dimension: int = DEFAULT_MAX_DIMENSION) -> List[StateResult]:
    states = diagonalize(params, tolerances, probe_points, rotation_point, max_dimension=max_dimension)
    return [analyze_state(state, params, tolerances, seed) for state in states]
