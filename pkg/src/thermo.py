"""
Thermodynamic limit of the ground state: kernel transforms, root densities,
ground-state and surface energies, and the finite-size extrapolation that
confronts them with exact diagonalization.

Fourier convention: f~(w) = integral f(u) exp(2iuw) du, under which
a_n(u) = n / (2 pi (u^2 + n^2/4)) maps to exp(-n|w|) and
b_n(u) = 2u / (2 pi (u^2 + n^2/4)) maps to sign(w) i exp(-n|w|).
Energies are in eta = 1 units.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg

from config import DEFAULT_TOLERANCES, Tolerances
from errors import ConventionError, DomainError, ExtrapolationError, LabError, ParameterError
from model import ModelParams, hamiltonian
from numerics import quad_semiinfinite
from patterns import DESCRIPTORS, TEMPLATES, probe_report

logger = logging.getLogger(__name__)

PERIODIC_ENERGY_PER_SITE = -1.0


# Kernels

def a_kernel(n: float, u: float) -> float:
    return n / (2 * math.pi * (u * u + n * n / 4))


def b_kernel(n: float, u: float) -> float:
    return 2 * u / (2 * math.pi * (u * u + n * n / 4))


def a_tilde(n: float, w):
    return np.exp(-np.abs(n * np.asarray(w, dtype=float)))


def b_tilde(n: float, w):
    w = np.asarray(w, dtype=float)
    return np.sign(w) * 1j * np.exp(-np.abs(n * w))


def _b_transform(n: float, w: float, tol: float) -> complex:
    if w == 0:
        return 0j
    # the cosine part vanishes by oddness
    value, _ = integrate.quad(lambda u: b_kernel(n, u), 0.0, np.inf, weight='sin', wvar=2 * abs(w),
                              epsabs=tol, limlst=200)
    return 1j * math.copysign(2.0 * value, w)


def _a_transform(n: float, w: float, tol: float) -> complex:
    if w == 0:
        value, _ = integrate.quad(lambda u: a_kernel(n, u), 0.0, np.inf, epsabs=tol, epsrel=0.0)
    else:
        value, _ = integrate.quad(lambda u: a_kernel(n, u), 0.0, np.inf, weight='cos', wvar=2 * abs(w),
                                  epsabs=tol, limlst=200)
    return complex(2.0 * value)


def fourier_pair_check(orders: Sequence[int] = (1, 2, 3, 4, 5),
                       points: Sequence[float] = (-1.0, -0.3, 0.3, 1.0),
                       tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[Dict]:
    """
    Verify the transform pairs of a_n and b_n by quadrature.

    Raises:
        ConventionError: any pair off by more than tolerances.fourier
    """
    records = []
    quad_tol = tolerances.fourier * 1e-2
    for n in orders:
        for w in points:
            for name, numeric, closed in (
                    ('a', _a_transform(n, w, quad_tol), complex(a_tilde(n, w))),
                    ('b', _b_transform(n, w, quad_tol), complex(b_tilde(n, w)))):
                error = abs(numeric - closed)
                records.append({'kernel': f'{name}_{n}', 'w': w, 'numeric': [numeric.real, numeric.imag],
                                'closed_form': [closed.real, closed.imag], 'error': error,
                                'pass': bool(error <= tolerances.fourier)})
    failed = [r for r in records if not r['pass']]
    if failed:
        worst = max(failed, key=lambda r: r['error'])
        raise ConventionError(f"Fourier convention check failed for {worst['kernel']} at w={worst['w']} "
                              f"(error {worst['error']:.3e})", failures=len(failed))
    logger.info(f"Fourier convention verified on {len(records)} kernel/point pairs")
    return records


# Densities

def _e(n: float, w):
    return np.exp(-np.abs(n) * np.abs(w))


def _over_denominator(n: float, w):
    """e^{-|n w|} / (e^{-|w|} + 2 e^{-3|w|} + e^{-5|w|}) without underflow at large |w|."""
    w = np.abs(np.asarray(w, dtype=float))
    return np.exp(-(abs(n) - 1) * w) / (1 + np.exp(-2 * w)) ** 2


def _delta_terms(n_sites: int, p: float, q: float) -> List[Tuple[float, float]]:
    """(weight, n) pairs of the sigma = delta numerator, a sum of weight * e^{-|n w|}."""
    return [(2 * n_sites, 2), (2 * n_sites, 4), (-1, 1), (1, 3),
            (1, 2 * p), (1, 2 * p + 2), (1, 2 * q), (1, 2 * q + 2)]


def _delta_numerator(w, n_sites: int, p: float, q: float):
    return sum(weight * _e(n, w) for weight, n in _delta_terms(n_sites, p, q))


def rho_delta(w, n_sites: int, p: float, q: float):
    """
    Bulk density with sigma = delta and the 1/N boundary terms kept.

    The i sign(w) factors of the b~ kernels cancel, so the value is real and even in w.
    """
    return sum(weight * _over_denominator(n, w) for weight, n in _delta_terms(n_sites, p, q)) / n_sites


def boundary_indices(regime: str, p: float, q: float, z_x: Optional[float] = None) -> List[float]:
    """The a values of the B_a terms of a regime."""
    aq = abs(q)
    p_pair = [p, p + 1]
    zx_pair = None if z_x is None else [z_x - 1, z_x]
    table = {
        'A': [],
        'B': p_pair + (zx_pair or []),
        'C': [q, q + 1] + (zx_pair or []),
        'D': [q, q + 1] + p_pair,
        'E': [aq],
        'F': p_pair + (zx_pair or []) + [aq],
        'G': (zx_pair or []) + [1 - aq],
        'H': p_pair + [1 - aq],
        'I': [aq - 1, aq],
        'J': p_pair + (zx_pair or []) + [aq - 1, aq],
        'K': zx_pair or [],
        'L': p_pair,
    }
    if regime not in table:
        raise ParameterError(f"Unknown regime '{regime}'")
    return table[regime]


def _require_free_parameters(regime: str, z_x: Optional[float], lam: Optional[float]) -> None:
    template = TEMPLATES[regime]
    missing = []
    if template.uses_zx and z_x is None:
        missing.append('z_x')
    if template.uses_lambda and lam is None:
        missing.append('lambda')
    if missing:
        raise ParameterError(f"Regime {regime} needs {', '.join(missing)}")


def _bstring_terms(regime: str, p: float, q: float, z_x: Optional[float]) -> List[Tuple[float, float]]:
    """(weight, n) pairs of the non-oscillating boundary-string numerator."""
    terms = []
    for a in boundary_indices(regime, p, q, z_x):
        terms.extend([(-1, 2 * a), (-1, 2 * a + 2)])
    return terms


def rho_bstring(regime: str, n_sites: int, p: float, q: float, z_x: Optional[float] = None,
                lam: Optional[float] = None) -> Callable:
    """
    Boundary-string and extra-root correction to the bulk density, as a function of w.

    B_a(w) = -(e^{-|2a w|} + e^{-|(2a+2) w|}) / (N (e^{-|w|} + 2 e^{-3|w|} + e^{-5|w|})); regimes
    G and H add 2 cos(2 lambda w) B_1, the transform of the +-lambda shifted pair.
    """
    if regime not in TEMPLATES:
        raise ParameterError(f"Unknown regime '{regime}'")
    _require_free_parameters(regime, z_x, lam)
    terms = _bstring_terms(regime, p, q, z_x)
    oscillating = TEMPLATES[regime].uses_lambda

    def density(w):
        w = np.asarray(w, dtype=float)
        total = np.zeros_like(w)
        for weight, n in terms:
            total = total + weight * _over_denominator(n, w)
        if oscillating:
            total = total - 2 * np.cos(2 * lam * w) * (_over_denominator(2, w) + _over_denominator(4, w))
        return total / n_sites

    return density


def _bstring_numerator(regime: str, p: float, q: float, z_x: Optional[float],
                       lam: Optional[float]) -> Callable:
    """N rho_bstring(w) times the bulk denominator, built from the kernel transforms directly."""
    terms = _bstring_terms(regime, p, q, z_x)
    oscillating = TEMPLATES[regime].uses_lambda

    def numerator(w):
        total = sum(weight * _e(n, w) for weight, n in terms)
        if oscillating:
            total = total - 2 * math.cos(2 * lam * w) * (_e(2, w) + _e(4, w))
        return total

    return numerator


# Energies

def discrete_root_energy(zbar: complex, eta: float = 1.0) -> complex:
    """Energy carried by one zbar^(1) root: eta / (zbar^2 + eta^2/4)."""
    zbar = complex(zbar)
    return eta / (zbar * zbar + eta * eta / 4)


def discrete_roots(regime: str, p: float, q: float, z_x: Optional[float] = None,
                   lam: Optional[float] = None) -> List[complex]:
    """Finite zbar^(1) roots of a regime; extra roots run off to infinity and carry no energy."""
    _require_free_parameters(regime, z_x, lam)
    template = TEMPLATES[regime]
    roots = [DESCRIPTORS[name](p, q) for name in template.z1_fixed]
    if template.uses_zx:
        roots.extend([(z_x - 0.5) * 1j, (z_x + 0.5) * 1j])
    if template.uses_lambda:
        roots.extend([lam + 1.5j, -lam + 1.5j])
    return roots


def _check_indices(values: Sequence[float]) -> None:
    for a in values:
        if abs(a) < 1e-12:
            raise DomainError("A boundary kernel index vanishes; the energy integral diverges at this point")


def ground_energy_thermo(regime: str, n_sites: int, p: float, q: float,
                         z_x: Optional[float] = None, lam: Optional[float] = None,
                         tolerances: Tolerances = DEFAULT_TOLERANCES) -> float:
    """
    E_g = N * integral rho~(w) [a~_5 - a~_1] dw + sum of the discrete root energies.

    With x = e^{-|w|}, N rho~ (a~_5 - a~_1) = numerator(w) * F(w) and F = -(1 - x^2)/(1 + x^2),
    so the integral converges for every positive kernel index.
    """
    if regime not in TEMPLATES:
        raise ParameterError(f"Unknown regime '{regime}'")
    _require_free_parameters(regime, z_x, lam)
    indices = boundary_indices(regime, p, q, z_x)
    _check_indices([2 * p, 2 * p + 2, 2 * q, 2 * q + 2] + [2 * a for a in indices] + [2 * a + 2 for a in indices])
    correction = _bstring_numerator(regime, p, q, z_x, lam)

    def factor(w):
        x2 = math.exp(-2 * w)
        return -(1 - x2) / (1 + x2)

    def per_site(w):
        return float(2 * (_e(2, w) + _e(4, w)) * factor(w))

    def boundary(w):
        numerator = _delta_numerator(w, 0, p, q) + correction(w)
        return float(numerator * factor(w))

    # the numerator is linear in N; integrate the two pieces separately
    bulk = 2.0 * quad_semiinfinite(per_site, tolerances.quadrature)
    surface = 2.0 * quad_semiinfinite(boundary, tolerances.quadrature)
    discrete = sum(discrete_root_energy(z) for z in discrete_roots(regime, p, q, z_x, lam))
    return float(n_sites * bulk + surface + discrete.real)


def surface_energy_closed_form(p: float, q: float) -> float:
    """
    E_b = 2 pi - 4/3 + 1/(p+1) - 1/p + 1/(q+1) - 1/q, plus 2 pi csc(q pi) for -1 < q < 0.

    Raises:
        DomainError: p <= 0, or q at a pole (0 or -1)
    """
    if p <= 0:
        raise DomainError(f"Closed form covers p > 0 only (got p={p}); the lower half-plane "
                          f"follows from the symmetry of the Hamiltonian")
    if abs(q) < 1e-12 or abs(q + 1) < 1e-12:
        raise DomainError(f"q={q} is a pole of the surface-energy formula")
    value = 2 * math.pi - 4.0 / 3.0 + 1 / (p + 1) - 1 / p + 1 / (q + 1) - 1 / q
    if -1 < q < 0:
        value += 2 * math.pi / math.sin(q * math.pi)
    return value


def closed_form_ground_energy(p: float, q: float, n_sites: int) -> float:
    return surface_energy_closed_form(p, q) + PERIODIC_ENERGY_PER_SITE * n_sites


@dataclass
class SurfaceEnergyResult:
    p: float
    q: float
    closed_form: Optional[float] = None
    integral_value: Optional[float] = None
    extrapolated: Optional[float] = None
    uncertainty: Optional[float] = None
    regime: Optional[str] = None
    raw: List[Tuple[int, float]] = field(default_factory=list)
    branches: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def relative_deviation(self) -> Optional[float]:
        if self.extrapolated is None or not self.closed_form:
            return None
        return abs(self.extrapolated - self.closed_form) / abs(self.closed_form)

    def to_dict(self) -> Dict:
        payload = asdict(self)
        payload['relative_deviation'] = self.relative_deviation
        return payload


def surface_energy(p: float, q: float, regime: Optional[str] = None, z_x: Optional[float] = None,
                   lam: Optional[float] = None, n_sites: int = 100,
                   tolerances: Tolerances = DEFAULT_TOLERANCES) -> SurfaceEnergyResult:
    """Closed-form surface energy, plus the quadrature value when a regime is given."""
    result = SurfaceEnergyResult(p=p, q=q, closed_form=surface_energy_closed_form(p, q), regime=regime)
    if -1 < q < 0:
        result.notes.append('csc branch applied for -1 < q < 0')
    if regime is not None:
        energy = ground_energy_thermo(regime, n_sites, p, q, z_x, lam, tolerances)
        result.integral_value = energy - PERIODIC_ENERGY_PER_SITE * n_sites
        if regime != 'B':
            result.notes.append(f'regime {regime} energy from the generalized density recipe')
    return result


# Finite-size extrapolation

def ed_ground_energy(params: ModelParams, max_dimension: int = 3 ** 8) -> float:
    h = hamiltonian(params, max_dimension)
    values = linalg.eigh(h, eigvals_only=True, subset_by_index=[0, 0])
    return float(values[0])


def _fit_branch(ns: np.ndarray, values: np.ndarray, order: int) -> Tuple[float, float]:
    """Intercept and leading 1/N^2 slope of a polynomial fit in 1/N^2."""
    coefficients = np.polyfit(1.0 / ns ** 2, values, order)
    return float(coefficients[-1]), float(coefficients[-2])


def extrapolate_surface_energy(p: float, q: float, n_list: Sequence[int], fit_order: int = 1,
                               max_dimension: int = 3 ** 8,
                               tolerances: Tolerances = DEFAULT_TOLERANCES,
                               **model_kwargs) -> SurfaceEnergyResult:
    """
    Extrapolate E_b(N) = E_g(N) + N from exact ground energies.

    Odd and even chain lengths converge along separate branches, so each parity
    is fitted on its own to E_b + c/N^2 (+ d/N^4). The reported value is the
    intercept of the branch with the smaller slope |c|; the uncertainty is the
    spread between the two intercepts, or the intercept shift when the smallest
    N is dropped if only one parity has enough lengths.

    Raises:
        ParameterError: bad fit order, or fewer than fit_order+1 lengths of either parity
        ExtrapolationError: the value misses the closed form by more than
            tolerances.extrapolation (the result is attached)
    """
    if fit_order not in (1, 2):
        raise ParameterError(f"fit_order must be 1 or 2, got {fit_order}")
    ns = sorted(set(int(n) for n in n_list))
    n_arr = np.array(ns, dtype=float)
    usable = [parity for parity in (1, 0) if np.sum(n_arr % 2 == parity) >= fit_order + 1]
    if not usable:
        raise ParameterError(f"Need {fit_order + 1} chain lengths of one parity, got {ns}")

    raw = []
    for n_sites in ns:
        params = ModelParams.from_reduced(n_sites, p, q, **model_kwargs)
        raw.append((n_sites, ed_ground_energy(params, max_dimension) - PERIODIC_ENERGY_PER_SITE * n_sites))
        logger.info(f"E_b({n_sites}) = {raw[-1][1]:.10f} at p={p}, q={q}")
    values = np.array([r[1] for r in raw])

    fits = {}
    for parity in usable:
        mask = n_arr % 2 == parity
        fits['odd' if parity else 'even'] = _fit_branch(n_arr[mask], values[mask], fit_order)
    chosen = min(fits, key=lambda name: abs(fits[name][1]))
    intercept = fits[chosen][0]

    if len(fits) == 2:
        uncertainty = abs(fits['odd'][0] - fits['even'][0])
    else:
        mask = n_arr % 2 == usable[0]
        branch_ns, branch_values = n_arr[mask], values[mask]
        uncertainty = None
        if len(branch_ns) >= fit_order + 2:
            uncertainty = abs(intercept - _fit_branch(branch_ns[1:], branch_values[1:], fit_order)[0])

    result = SurfaceEnergyResult(p=p, q=q, extrapolated=intercept, uncertainty=uncertainty, raw=raw,
                                 branches={name: fit[0] for name, fit in fits.items()})
    result.notes.append(f'{chosen}-N branch has the smaller finite-size slope')
    try:
        result.closed_form = surface_energy_closed_form(p, q)
    except DomainError as e:
        result.notes.append(str(e))
        return result

    deviation = result.relative_deviation
    if deviation is not None and deviation > tolerances.extrapolation:
        logger.warning(f"Extrapolated E_b at p={p}, q={q} misses the closed form by {deviation:.2%}; "
                       f"raw sequence {values.tolist()}")
        raise ExtrapolationError(f"Extrapolated E_b {intercept:.6f} misses the closed form "
                                 f"{result.closed_form:.6f} by {deviation:.2%}", result=result,
                                 relative_deviation=deviation)
    return result


def _sweep_row(task: Tuple) -> Dict:
    p, q, n_list, probe_n, fit_order, tolerances, max_dimension = task
    row = {'p': p, 'q': q, 'regime': None, 'E_b_closed': np.nan, 'E_b_integral': np.nan,
           'E_b_extrapolated': np.nan, 'abs_deviation': np.nan, 'error': ''}
    try:
        row['E_b_closed'] = surface_energy_closed_form(p, q)
        if probe_n:
            report = probe_report(p, q, probe_n, tolerances)
            row['regime'] = report.label
            if report.classified:
                fitted = report.fitted
                energy = ground_energy_thermo(report.label, 100, p, q, fitted.get('z_x'),
                                              fitted.get('lambda'), tolerances)
                row['E_b_integral'] = energy + 100
        if n_list:
            try:
                result = extrapolate_surface_energy(p, q, n_list, fit_order, max_dimension, tolerances)
            except ExtrapolationError as e:
                result = e.result
                row['error'] = e.code
            row['E_b_extrapolated'] = result.extrapolated
            row['abs_deviation'] = abs(result.extrapolated - row['E_b_closed'])
    except LabError as e:
        logger.warning(f"Sweep point p={p}, q={q} failed: {e}")
        row['error'] = e.code
    return row


def surface_energy_sweep(ps: Sequence[float], qs: Sequence[float], n_list: Sequence[int] = (),
                         probe_n: int = 0, fit_order: int = 1, workers: int = 1,
                         tolerances: Tolerances = DEFAULT_TOLERANCES,
                         max_dimension: int = 3 ** 8) -> List[Dict]:
    """
    Surface-energy grid over (p, q), sorted by (p, q).

    Each row carries the closed form and, when requested, the regime label from a
    probe at N = probe_n, the quadrature value for that regime and the ED extrapolation.
    Failing points keep their row with the error code.
    """
    tasks = [(float(p), float(q), tuple(n_list), probe_n, fit_order, tolerances, max_dimension)
             for p in ps for q in qs]
    logger.info(f"Surface-energy sweep over {len(tasks)} points with {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(task) for task in tasks]
    return sorted(rows, key=lambda row: (row['p'], row['q']))
