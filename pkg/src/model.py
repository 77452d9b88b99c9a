"""
Integrable structure of the spin-1 Heisenberg chain with non-diagonal boundaries.

Builds the spin-(1,1) and spin-(1/2,1) R-matrices, the reflection matrices,
the two commuting transfer-matrix families and the Hamiltonian, and checks
the algebraic identities they satisfy (Yang-Baxter, reflection, unitarity,
crossing, commutativity).

Basis conventions: the quantum space index is composed with site 1 slowest;
the auxiliary space is the leftmost tensor factor and is traced last.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from config import DEFAULT_TOLERANCES, Tolerances
from errors import ParameterError, PoleError, SizeError
from numerics import ComplexMatrix, kron, relative_residual

logger = logging.getLogger(__name__)

SPIN11 = 'spin11'
SPIN_HALF_1 = 'spin_half_1'
KINDS = (SPIN11, SPIN_HALF_1)
AUX_DIMENSION = {SPIN11: 3, SPIN_HALF_1: 2}

DEFAULT_MAX_DIMENSION = 3 ** 6 * 3


@dataclass(frozen=True)
class SpinOperators:
    sx: ComplexMatrix
    sy: ComplexMatrix
    sz: ComplexMatrix

    def components(self):
        return (self.sx, self.sy, self.sz)


def spin_operators() -> SpinOperators:
    """Spin-1 matrices with S^z = diag(1, 0, -1)."""
    r = 1.0 / math.sqrt(2.0)
    sx = r * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy = r * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return SpinOperators(sx, sy, sz)


def pauli_operators() -> SpinOperators:
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return SpinOperators(sx, sy, sz)


def permutation(d1: int, d2: int) -> ComplexMatrix:
    """Swap V1 (x) V2 -> V2 (x) V1, i.e. P|i>|j> = |j>|i>."""
    p = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for i in range(d1):
        for j in range(d2):
            p[j * d1 + i, i * d2 + j] = 1.0
    return p


@dataclass(frozen=True)
class ModelParams:
    """
    Physical parameters of the chain.

    theta_bar holds the imaginary parts of the inhomogeneities, theta_j = i * theta_bar_j;
    an empty tuple means the homogeneous chain.
    """

    n_sites: int
    eta: float = 1.0
    p_minus: float = 1.0
    p_plus: float = 1.0
    alpha_minus: float = 0.0
    alpha_plus: float = 0.0
    phi_minus: float = 0.0
    phi_plus: float = 0.0
    theta_bar: tuple = field(default_factory=tuple)

    def __post_init__(self):
        errors = []
        if self.n_sites < 1:
            errors.append(f"n_sites must be positive, got {self.n_sites}")
        if not self.eta > 0:
            errors.append(f"eta must be positive, got {self.eta}")
        for name in ('eta', 'p_minus', 'p_plus', 'alpha_minus', 'alpha_plus', 'phi_minus', 'phi_plus'):
            value = getattr(self, name)
            if isinstance(value, complex) or not math.isfinite(value):
                errors.append(f"{name} must be a finite real number, got {value!r}")
        if self.theta_bar and len(self.theta_bar) != self.n_sites:
            errors.append(f"theta_bar needs {self.n_sites} entries, got {len(self.theta_bar)}")
        for side in ('minus', 'plus'):
            if abs(self.boundary_denominator(side)) < 1e-12:
                errors.append(f"boundary denominator on the {side} side vanishes")
        if errors:
            raise ParameterError("Invalid model parameters: " + "; ".join(errors))

    @classmethod
    def from_reduced(cls, n_sites: int, p: float, q: float, eta: float = 1.0,
                     alpha_minus: float = 0.5, alpha_plus: float = 0.3,
                     phi_minus: float = 0.4, phi_plus: float = 0.4,
                     theta_bar: Sequence[float] = ()) -> 'ModelParams':
        """Build from the reduced boundary parameters p, q (in units of eta)."""
        p_plus = (p + 0.5) * eta * math.sqrt(1.0 + alpha_plus ** 2)
        p_minus = -(q + 0.5) * eta * math.sqrt(1.0 + alpha_minus ** 2)
        return cls(n_sites=n_sites, eta=eta, p_minus=p_minus, p_plus=p_plus,
                   alpha_minus=alpha_minus, alpha_plus=alpha_plus,
                   phi_minus=phi_minus, phi_plus=phi_plus, theta_bar=tuple(theta_bar))

    @classmethod
    def from_config(cls, config: Dict) -> 'ModelParams':
        return cls(n_sites=config['n_sites'], eta=config['eta'],
                   p_minus=config['p_minus'], p_plus=config['p_plus'],
                   alpha_minus=config['alpha_minus'], alpha_plus=config['alpha_plus'],
                   phi_minus=config['phi_minus'], phi_plus=config['phi_plus'],
                   theta_bar=tuple(config.get('theta_bar') or ()))

    def boundary_denominator(self, side: str) -> float:
        p_side = self.p_minus if side == 'minus' else self.p_plus
        alpha = self.alpha_minus if side == 'minus' else self.alpha_plus
        return p_side ** 2 - 0.25 * (1.0 + alpha ** 2) * self.eta ** 2

    @property
    def p(self) -> float:
        return self.p_plus / (self.eta * math.sqrt(1.0 + self.alpha_plus ** 2)) - 0.5

    @property
    def q(self) -> float:
        return -self.p_minus / (self.eta * math.sqrt(1.0 + self.alpha_minus ** 2)) - 0.5

    @property
    def theta(self) -> np.ndarray:
        if not self.theta_bar:
            return np.zeros(self.n_sites, dtype=complex)
        return 1j * np.asarray(self.theta_bar, dtype=float)

    @property
    def homogeneous(self) -> bool:
        return not any(self.theta_bar)

    @property
    def dimension(self) -> int:
        return 3 ** self.n_sites

    def with_sites(self, n_sites: int) -> 'ModelParams':
        return replace(self, n_sites=n_sites, theta_bar=())

    def homogeneous_copy(self) -> 'ModelParams':
        return replace(self, theta_bar=())

    def as_dict(self) -> Dict:
        return {
            'N': self.n_sites, 'eta': self.eta,
            'p_minus': self.p_minus, 'p_plus': self.p_plus,
            'alpha_minus': self.alpha_minus, 'alpha_plus': self.alpha_plus,
            'phi_minus': self.phi_minus, 'phi_plus': self.phi_plus,
            'theta_bar': list(self.theta_bar), 'p': self.p, 'q': self.q,
        }


# R-matrices

def r11(u: complex, eta: float) -> ComplexMatrix:
    """Spin-(1,1) R-matrix on C^3 (x) C^3."""
    a = u * (u + eta) + 2 * eta ** 2
    b = u * (u + eta)
    c = (u + eta) * (u + 2 * eta)
    d = u * (u - eta)
    e = 2 * eta * (u + eta)
    f = 2 * eta ** 2
    g = 2 * u * eta
    r = np.zeros((9, 9), dtype=complex)
    r[0, 0] = r[8, 8] = c
    r[1, 1] = r[3, 3] = r[5, 5] = r[7, 7] = b
    r[1, 3] = r[3, 1] = r[5, 7] = r[7, 5] = e
    r[2, 2] = r[6, 6] = d
    r[2, 6] = r[6, 2] = f
    r[2, 4] = r[4, 2] = r[4, 6] = r[6, 4] = g
    r[4, 4] = a
    return r


def r_half_one(u: complex, eta: float) -> ComplexMatrix:
    """Spin-(1/2,1) R-matrix (u + eta/2) + eta sigma . S on C^2 (x) C^3."""
    sigma = pauli_operators()
    spin = spin_operators()
    r = (u + 0.5 * eta) * np.eye(6, dtype=complex)
    for s_a, S_a in zip(sigma.components(), spin.components()):
        r = r + eta * np.kron(s_a, S_a)
    return r


def r_one_half(u: complex, eta: float) -> ComplexMatrix:
    """Spin-(1,1/2) R-matrix on C^3 (x) C^2, obtained as P R^(1/2,1) P."""
    swap = permutation(2, 3)
    return swap @ r_half_one(u, eta) @ swap.T


# Reflection matrices

def _k_one(u: complex, p: float, alpha: float, phi: float, eta: float) -> ComplexMatrix:
    x1 = (p + u + eta / 2) * (p + u - eta / 2) + 0.5 * alpha ** 2 * eta * (u - eta / 2)
    x2 = (p + u - eta / 2) * (p - u + eta / 2) + alpha ** 2 * (u + eta / 2) * (u - eta / 2)
    x3 = (p - u - eta / 2) * (p - u + eta / 2) + 0.5 * alpha ** 2 * eta * (u - eta / 2)
    root2 = math.sqrt(2.0)
    lower = np.exp(-1j * phi)
    upper = np.exp(1j * phi)
    y4 = root2 * alpha * lower * u * (p + u - eta / 2)
    y4p = root2 * alpha * upper * u * (p + u - eta / 2)
    y5 = root2 * alpha * lower * u * (p - u + eta / 2)
    y5p = root2 * alpha * upper * u * (p - u + eta / 2)
    y6 = alpha ** 2 * lower ** 2 * u * (u - eta / 2)
    y6p = alpha ** 2 * upper ** 2 * u * (u - eta / 2)
    k = np.array([[x1, y4p, y6p],
                  [y4, x2, y5p],
                  [y6, y5, x3]], dtype=complex)
    return (2 * u + eta) * k


def k_minus_1(u: complex, params: ModelParams) -> ComplexMatrix:
    """Generic non-diagonal spin-1 reflection matrix K^-(u)."""
    return _k_one(u, params.p_minus, params.alpha_minus, params.phi_minus, params.eta)


def k_plus_1(u: complex, params: ModelParams) -> ComplexMatrix:
    """
    Dual spin-1 reflection matrix K^+(u) = K^-(-u-eta) at (p+, -alpha+, phi+).

    The alpha sign matches the spin-1/2 dual matrix and fixes both the leading
    coefficient of t^(1,1) and the right boundary term of H.
    """
    return _k_one(-u - params.eta, params.p_plus, -params.alpha_plus, params.phi_plus, params.eta)


def _k_half(u: complex, p: float, alpha: float, phi: float) -> ComplexMatrix:
    return np.array([[p + u, alpha * np.exp(1j * phi) * u],
                     [alpha * np.exp(-1j * phi) * u, p - u]], dtype=complex)


def k_half(u: complex, params: ModelParams, dual: bool = False) -> ComplexMatrix:
    """Spin-1/2 reflection matrix K^-(u), or its dual K^+(u) = K^-(-u-eta) at (p+, -alpha+)."""
    if dual:
        return _k_half(-u - params.eta, params.p_plus, -params.alpha_plus, params.phi_plus)
    return _k_half(u, params.p_minus, params.alpha_minus, params.phi_minus)


# Transfer matrices

RBuilder = Callable[[complex, float], ComplexMatrix]


def _aux_site_tensors(kind: str, u: complex, eta: float, r_builder: Optional[RBuilder] = None):
    """R_{0j}(u) and R_{j0}(u), both written in aux (x) site order as (d0, 3, d0, 3) tensors."""
    d0 = AUX_DIMENSION[kind]
    if kind == SPIN11:
        build = r_builder or r11
        aux_first = build(u, eta)
        site_first = build(u, eta)
    else:
        aux_first = r_half_one(u, eta)
        site_first = r_one_half(u, eta)
    to_site_first = permutation(d0, 3)
    reflected = to_site_first.T @ site_first @ to_site_first
    shape = (d0, 3, d0, 3)
    return aux_first.reshape(shape), reflected.reshape(shape)


def _apply_pair(op4: np.ndarray, y: np.ndarray, site: int) -> np.ndarray:
    # y axes: aux, label, site_1..site_N, batch
    y = np.tensordot(op4, y, axes=([2, 3], [0, 2 + site]))
    return np.moveaxis(y, 1, 2 + site)


def _apply_aux(k: ComplexMatrix, y: np.ndarray) -> np.ndarray:
    return np.tensordot(k, y, axes=([1], [0]))


def check_budget(params: ModelParams, kind: str, max_dimension: int = DEFAULT_MAX_DIMENSION) -> None:
    dimension = params.dimension * AUX_DIMENSION[kind]
    if dimension > max_dimension:
        raise SizeError(f"Auxiliary-extended dimension {dimension} exceeds the budget {max_dimension}; "
                        f"use a smaller N (currently {params.n_sites})",
                        dimension=dimension, budget=max_dimension)


def apply_transfer(u: complex, params: ModelParams, kind: str, vectors: np.ndarray,
                   r_builder: Optional[RBuilder] = None) -> np.ndarray:
    """
    Apply tr_0{K+ T K- T^} to quantum-space vectors without building the matrix.

    Args:
        u: Spectral parameter
        params: Model parameters
        kind: SPIN11 or SPIN_HALF_1
        vectors: Array of shape (3^N,) or (3^N, m)

    Returns:
        Array with the same shape as vectors
    """
    if kind not in KINDS:
        raise ParameterError(f"Unknown transfer-matrix kind '{kind}'")
    vectors = np.asarray(vectors, dtype=complex)
    single = vectors.ndim == 1
    batch = vectors.reshape(params.dimension, -1)
    n_sites = params.n_sites
    d0 = AUX_DIMENSION[kind]
    eta = params.eta
    theta = params.theta

    site_shape = (3,) * n_sites
    y = np.zeros((d0, d0) + site_shape + (batch.shape[1],), dtype=complex)
    psi = batch.reshape(site_shape + (batch.shape[1],))
    for a in range(d0):
        y[a, a] = psi

    if kind == SPIN11:
        k_minus = k_minus_1(u, params)
        k_plus = k_plus_1(u, params)
    else:
        k_minus = k_half(u, params)
        k_plus = k_half(u, params, dual=True)

    # reflecting monodromy R_10(u+th_1) ... R_N0(u+th_N): rightmost factor acts first
    for site in reversed(range(n_sites)):
        _, reflected = _aux_site_tensors(kind, u + theta[site], eta, r_builder)
        y = _apply_pair(reflected, y, site)
    y = _apply_aux(k_minus, y)
    # single-row monodromy R_0N(u-th_N) ... R_01(u-th_1)
    for site in range(n_sites):
        forward, _ = _aux_site_tensors(kind, u - theta[site], eta, r_builder)
        y = _apply_pair(forward, y, site)
    y = _apply_aux(k_plus, y)

    out = np.trace(y, axis1=0, axis2=1).reshape(params.dimension, -1)
    return out[:, 0] if single else out


def transfer(u: complex, params: ModelParams, kind: str,
             max_dimension: int = DEFAULT_MAX_DIMENSION,
             r_builder: Optional[RBuilder] = None) -> ComplexMatrix:
    """Full transfer matrix t(u) on (C^3)^N for the given kind."""
    check_budget(params, kind, max_dimension)
    return apply_transfer(u, params, kind, np.eye(params.dimension, dtype=complex), r_builder)


# Hamiltonian

def _site_operator(op: ComplexMatrix, site: int, n_sites: int) -> ComplexMatrix:
    left = np.eye(3 ** site, dtype=complex)
    right = np.eye(3 ** (n_sites - site - 1), dtype=complex)
    return np.kron(np.kron(left, op), right)


def _boundary_field(spin: SpinOperators, p_side: float, alpha: float, phi: float,
                    eta: float, sign: int) -> ComplexMatrix:
    """Single-site boundary term; sign=+1 for the left end, -1 for the right end."""
    sx, sy, sz = spin.components()
    identity = np.eye(3, dtype=complex)
    denominator = p_side ** 2 - 0.25 * (1.0 + alpha ** 2) * eta ** 2
    if abs(denominator) < 1e-12:
        raise ParameterError("Boundary denominator p^2 - (1+alpha^2) eta^2/4 vanishes")
    term = 2 * p_side * (alpha * math.cos(phi) * sx - alpha * math.sin(phi) * sy + sign * sz)
    term = term - eta * sz @ sz
    term = term - 0.5 * alpha ** 2 * eta * (math.cos(2 * phi) * (sx @ sx - sy @ sy) - sz @ sz)
    term = term - sign * alpha * eta * math.cos(phi) * (sx @ sz + sz @ sx)
    term = term + 0.5 * alpha ** 2 * eta * math.sin(2 * phi) * (sx @ sy + sy @ sx)
    term = term + sign * alpha * eta * math.sin(phi) * (sy @ sz + sz @ sy)
    term = term + eta * identity
    return term / denominator


def hamiltonian(params: ModelParams, max_dimension: int = 3 ** 8) -> ComplexMatrix:
    """
    Hamiltonian of the open chain (homogeneous form; inhomogeneities are ignored).

    H = (1/eta) sum_j [S_j.S_{j+1} - (S_j.S_{j+1})^2] + (3N + 8/3)/eta + H_L + H_R
    """
    n_sites = params.n_sites
    if params.dimension > max_dimension:
        raise SizeError(f"Hilbert space dimension {params.dimension} exceeds the budget {max_dimension}")
    spin = spin_operators()
    eta = params.eta

    bond = sum(np.kron(s, s) for s in spin.components())
    bond_term = (bond - bond @ bond) / eta

    h = np.zeros((params.dimension, params.dimension), dtype=complex)
    for j in range(n_sites - 1):
        left = np.eye(3 ** j, dtype=complex)
        right = np.eye(3 ** (n_sites - j - 2), dtype=complex)
        h += np.kron(np.kron(left, bond_term), right)
    h += (3 * n_sites + 8.0 / 3.0) / eta * np.eye(params.dimension)

    h_left = _boundary_field(spin, params.p_minus, params.alpha_minus, params.phi_minus, eta, +1)
    h_right = _boundary_field(spin, params.p_plus, params.alpha_plus, params.phi_plus, eta, -1)
    h += _site_operator(h_left, 0, n_sites)
    h += _site_operator(h_right, n_sites - 1, n_sites)
    return h


def total_sz(n_sites: int) -> ComplexMatrix:
    sz = spin_operators().sz
    return sum(_site_operator(sz, j, n_sites) for j in range(n_sites))


def hamiltonian_from_transfer(params: ModelParams, step: float = 1e-5,
                              max_dimension: int = DEFAULT_MAX_DIMENSION) -> ComplexMatrix:
    """
    t'(0) t(0)^-1 of the homogeneous spin-(1,1) transfer matrix.

    Central differences at steps h and h/2 combined by one Richardson step.
    """
    homogeneous = params.homogeneous_copy()

    def t(u):
        return transfer(u, homogeneous, SPIN11, max_dimension)

    def central(h):
        return (t(h) - t(-h)) / (2 * h)

    derivative = (4 * central(step / 2) - central(step)) / 3
    t0 = t(0.0)
    # X t0 = t'  <=>  t0^T X^T = t'^T
    return np.linalg.solve(t0.T, derivative.T).T


# Quantum determinant

def _a1(u: complex, params: ModelParams) -> complex:
    eta = params.eta
    if abs(2 * u + eta) < 1e-14:
        raise PoleError(f"a^(1)(u) has a pole at u = -eta/2 (u = {u})", u=complex(u))
    value = -(2 * u + 2 * eta) / (2 * u + eta)
    value *= (math.sqrt(1 + params.alpha_plus ** 2) * u + params.p_plus)
    value *= (math.sqrt(1 + params.alpha_minus ** 2) * u - params.p_minus)
    for th in params.theta:
        value *= (u + th + 1.5 * eta) * (u - th + 1.5 * eta)
    return complex(value)


def a1(u: complex, params: ModelParams) -> complex:
    return _a1(u, params)


def d1(u: complex, params: ModelParams) -> complex:
    return _a1(-u - params.eta, params)


def delta1(u: complex, params: ModelParams) -> complex:
    """delta^(1)(u) = a^(1)(u) d^(1)(u - eta); simple poles at u = -eta/2 and u = eta/2."""
    return a1(u, params) * d1(u - params.eta, params)


def leading_coefficients(params: ModelParams) -> Dict[str, complex]:
    """
    Leading coefficients of Lambda^(1/2,1) (v^(2N+2)) and Lambda^(1,1) (v^(4N+6)).

    The boundary fields enter through their relative angle; for phi+ = phi- these are
    2(alpha- alpha+ - 1) and 4[(1+alpha+^2)(1+alpha-^2) - 4(alpha+ alpha- - 1)^2].
    """
    overlap = params.alpha_minus * params.alpha_plus * math.cos(params.phi_plus - params.phi_minus) - 1.0
    lam_half = 2.0 * overlap
    lam11 = 4.0 * ((1 + params.alpha_plus ** 2) * (1 + params.alpha_minus ** 2) - 4.0 * overlap ** 2)
    return {'lam_half': complex(lam_half), 'lam11': complex(lam11)}


def transfer_at_zero_value(params: ModelParams) -> complex:
    """t^(1/2,1)(0) = 2 p- p+ prod_l (th_l + 3eta/2)(-th_l + 3eta/2)."""
    value = 2 * params.p_minus * params.p_plus
    for th in params.theta:
        value *= (th + 1.5 * params.eta) * (-th + 1.5 * params.eta)
    return complex(value)


# Identity checks

def random_points(rng: np.random.Generator, count: int, scale: float = 2.0) -> np.ndarray:
    return scale * (rng.normal(size=count) + 1j * rng.normal(size=count))


def qybe_residual(u: complex, v: complex, eta: float, r_builder: RBuilder = r11) -> float:
    i3 = np.eye(3)
    p23 = np.kron(i3, permutation(3, 3))
    r12 = np.kron(r_builder(u - v, eta), i3)
    r13 = p23 @ np.kron(r_builder(u, eta), i3) @ p23
    r23 = np.kron(i3, r_builder(v, eta))
    return relative_residual(r12 @ r13 @ r23, r23 @ r13 @ r12)


def mixed_ybe_residual(u: complex, v: complex, eta: float) -> float:
    """R^(1/2,1)_12(u-v) R^(1/2,1)_13(u) R^(1,1)_23(v) against the reversed product."""
    i2, i3 = np.eye(2), np.eye(3)
    p23 = np.kron(i2, permutation(3, 3))
    r12 = np.kron(r_half_one(u - v, eta), i3)
    r13 = p23 @ np.kron(r_half_one(u, eta), i3) @ p23
    r23 = np.kron(i2, r11(v, eta))
    return relative_residual(r12 @ r13 @ r23, r23 @ r13 @ r12)


def re_residual(u: complex, v: complex, params: ModelParams, r_builder: RBuilder = r11) -> float:
    eta = params.eta
    i3 = np.eye(3)
    swap = permutation(3, 3)
    r12 = r_builder(u - v, eta)
    r21 = swap @ r_builder(u + v, eta) @ swap
    k1 = np.kron(k_minus_1(u, params), i3)
    k2 = np.kron(i3, k_minus_1(v, params))
    return relative_residual(r12 @ k1 @ r21 @ k2, k2 @ r21 @ k1 @ r12)


def dual_re_residual(u: complex, v: complex, params: ModelParams, r_builder: RBuilder = r11) -> float:
    eta = params.eta
    i3 = np.eye(3)
    swap = permutation(3, 3)
    r12 = r_builder(v - u, eta)
    r21 = swap @ r_builder(-u - v - 2 * eta, eta) @ swap
    k1 = np.kron(k_plus_1(u, params), i3)
    k2 = np.kron(i3, k_plus_1(v, params))
    return relative_residual(r12 @ k1 @ r21 @ k2, k2 @ r21 @ k1 @ r12)


def mixed_re_residual(u: complex, v: complex, params: ModelParams) -> float:
    """Spin-1 / spin-1/2 reflection equation on C^3 (x) C^2."""
    eta = params.eta
    k1 = np.kron(k_minus_1(u, params), np.eye(2))
    k2 = np.kron(np.eye(3), k_half(v, params))
    left = r_one_half(u - v, eta) @ k1 @ r_one_half(u + v, eta) @ k2
    right = k2 @ r_one_half(u + v, eta) @ k1 @ r_one_half(u - v, eta)
    return relative_residual(left, right)


def unitarity_residual(u: complex, eta: float) -> float:
    product = r_half_one(u, eta) @ r_half_one(-u, eta)
    expected = -(u + 1.5 * eta) * (u - 1.5 * eta) * np.eye(6)
    return relative_residual(product, expected)


def commutator_residual(a: ComplexMatrix, b: ComplexMatrix) -> float:
    scale = max(np.linalg.norm(a) * np.linalg.norm(b), np.finfo(float).tiny)
    return float(np.linalg.norm(a @ b - b @ a) / scale)


def _identity_record(name: str, residuals: List[float], tolerance: float, **extra) -> Dict:
    worst = float(max(residuals)) if residuals else 0.0
    record = {
        'identity': name,
        'points_tested': len(residuals),
        'max_residual': worst,
        'tolerance': tolerance,
        'pass': bool(worst <= tolerance),
    }
    record.update(extra)
    return record


def identity_suite(params: ModelParams, points: int = 100, seed: int = 0,
                   tolerances: Tolerances = DEFAULT_TOLERANCES,
                   r_builder: RBuilder = r11, transfer_points: int = 4,
                   max_sites: int = 3) -> List[Dict]:
    """
    Evaluate every algebraic identity of the model at random complex points.

    Local identities (QYBE, RE, dual RE, mixed RE, unitarity) use `points` random
    pairs; transfer-matrix identities use `transfer_points` on a chain capped at
    `max_sites` sites.

    Returns:
        One record per identity: {identity, points_tested, max_residual, tolerance, pass}
    """
    rng = np.random.default_rng(seed)
    us = random_points(rng, points)
    vs = random_points(rng, points)
    eta = params.eta

    records = [
        _identity_record('qybe', [qybe_residual(u, v, eta, r_builder) for u, v in zip(us, vs)],
                         tolerances.identity),
        _identity_record('mixed_qybe', [mixed_ybe_residual(u, v, eta) for u, v in zip(us, vs)],
                         tolerances.identity),
        _identity_record('reflection', [re_residual(u, v, params, r_builder) for u, v in zip(us, vs)],
                         tolerances.identity),
        _identity_record('dual_reflection', [dual_re_residual(u, v, params, r_builder) for u, v in zip(us, vs)],
                         tolerances.identity),
        _identity_record('mixed_reflection', [mixed_re_residual(u, v, params) for u, v in zip(us, vs)],
                         tolerances.identity),
        _identity_record('unitarity', [unitarity_residual(u, eta) for u in us], tolerances.identity),
    ]

    small = params if params.n_sites <= max_sites else replace(
        params, n_sites=max_sites, theta_bar=tuple(params.theta_bar[:max_sites]))
    tu = random_points(rng, transfer_points, scale=1.0)
    tv = random_points(rng, transfer_points, scale=1.0)

    crossing = []
    commuting = []
    for u, v in zip(tu, tv):
        mats = {}
        for kind in KINDS:
            t_u = transfer(u, small, kind, r_builder=r_builder)
            t_cross = transfer(-u - eta, small, kind, r_builder=r_builder)
            crossing.append(relative_residual(t_u, t_cross))
            mats[kind] = (t_u, transfer(v, small, kind, r_builder=r_builder))
        commuting.append(commutator_residual(*mats[SPIN11]))
        commuting.append(commutator_residual(*mats[SPIN_HALF_1]))
        commuting.append(commutator_residual(mats[SPIN11][0], mats[SPIN_HALF_1][1]))

    records.append(_identity_record('crossing', crossing, tolerances.identity, n_sites=small.n_sites))
    records.append(_identity_record('commutativity', commuting, tolerances.commutator, n_sites=small.n_sites))

    t_half_zero = transfer(0.0, small, SPIN_HALF_1, r_builder=r_builder)
    expected = transfer_at_zero_value(small) * np.eye(small.dimension)
    records.append(_identity_record('transfer_at_zero', [relative_residual(t_half_zero, expected)],
                                    tolerances.identity, n_sites=small.n_sites))

    failed = [r['identity'] for r in records if not r['pass']]
    if failed:
        logger.warning(f"Identity checks failed: {', '.join(failed)}")
    else:
        logger.info(f"All {len(records)} identity checks passed")
    return records
