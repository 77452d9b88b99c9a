"""
Ground-state root patterns: the twelve regime templates, classification of
numeric root sets, the homogeneous zero-root BAE residual and the pairing of
z-roots with z^(1)-roots.

All root positions are handled in the zbar = -i z variable in units of eta,
using the representative of each +- pair with positive imaginary part.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_TOLERANCES, Tolerances
from errors import ClassificationError, ParameterError
from model import ModelParams
from spectrum import RootSet, canonical_zbar, ground_state_pipeline

logger = logging.getLogger(__name__)

UNCLASSIFIED = 'unclassified'

# descriptor name -> position as a function of (p, q)
DESCRIPTORS = {
    '0': lambda p, q: 0j,
    '(1+p)i': lambda p, q: (1 + p) * 1j,
    '(1+q)i': lambda p, q: (1 + q) * 1j,
    '(1/2+p)i': lambda p, q: (0.5 + p) * 1j,
    '(3/2+p)i': lambda p, q: (1.5 + p) * 1j,
    '(1/2+q)i': lambda p, q: (0.5 + q) * 1j,
    '(3/2+q)i': lambda p, q: (1.5 + q) * 1j,
    '(1/2+|q|)i': lambda p, q: (0.5 + abs(q)) * 1j,
    '(3/2-|q|)i': lambda p, q: (1.5 - abs(q)) * 1j,
    '|q|i': lambda p, q: abs(q) * 1j,
    '(|q|-1/2)i': lambda p, q: (abs(q) - 0.5) * 1j,
    '(|q|+1/2)i': lambda p, q: (abs(q) + 0.5) * 1j,
}

P_PAIR = ('(1/2+p)i', '(3/2+p)i')
Q_PAIR = ('(1/2+q)i', '(3/2+q)i')


@dataclass(frozen=True)
class RegimeTemplate:
    """
    Symbolic root pattern of one regime.

    Besides the fixed descriptors a template may carry the z_x family
    (zbar: z_x i; zbar^(1): (z_x -+ 1/2) i), the lambda family
    (zbar: +-lambda + i; zbar^(1): +-lambda + 3i/2), extra large real roots
    and the bulk strings: z~ + 3i/2 in zbar and z~ + i, z~ + 2i in zbar^(1),
    N of them (full_bulk) or N - 2.
    """

    label: str
    z_fixed: Tuple[str, ...]
    z1_fixed: Tuple[str, ...]
    z_extras: int
    z1_extras: int
    uses_zx: bool = False
    uses_lambda: bool = False
    full_bulk: bool = True

    def bulk_count(self, n_sites: int) -> int:
        return n_sites if self.full_bulk else n_sites - 2

    def expand(self, n_sites: int) -> Tuple[List[str], List[str]]:
        """Descriptor names for every zbar and zbar^(1) root at chain length N."""
        bulk = self.bulk_count(n_sites)
        if bulk < 0:
            raise ParameterError(f"Regime {self.label} needs N >= 2, got {n_sites}")
        z = list(self.z_fixed) + [f'z{i}' for i in range(self.z_extras)]
        z1 = list(self.z1_fixed) + [f'z{i + 1}' for i in range(self.z1_extras)]
        if self.uses_zx:
            z.append('z_x i')
            z1.extend(['(z_x-1/2)i', '(z_x+1/2)i'])
        if self.uses_lambda:
            z.extend(['lambda+i', '-lambda+i'])
            z1.extend(['lambda+3i/2', '-lambda+3i/2'])
        z.extend(f'z~_{j}+3i/2' for j in range(1, bulk + 1))
        for k in range(1, bulk + 1):
            z1.extend([f'z~1_{k}+i', f'z~1_{k}+2i'])
        return z, z1


TEMPLATES: Dict[str, RegimeTemplate] = {t.label: t for t in (
    RegimeTemplate('A', (), ('0',), 1, 2),
    RegimeTemplate('B', ('(1+p)i',), ('0',) + P_PAIR, 1, 2, uses_zx=True, full_bulk=False),
    RegimeTemplate('C', ('(1+q)i',), ('0',) + Q_PAIR, 1, 2, uses_zx=True, full_bulk=False),
    RegimeTemplate('D', ('(1+p)i', '(1+q)i'), ('0',) + P_PAIR + Q_PAIR, 1, 2, full_bulk=False),
    RegimeTemplate('E', (), ('0', '(1/2+|q|)i'), 1, 1),
    RegimeTemplate('F', ('(1+p)i',), ('0',) + P_PAIR + ('(1/2+|q|)i',), 1, 1, uses_zx=True, full_bulk=False),
    RegimeTemplate('G', (), ('0', '(3/2-|q|)i'), 0, 1, uses_zx=True, uses_lambda=True, full_bulk=False),
    RegimeTemplate('H', ('(1+p)i',), ('0',) + P_PAIR + ('(3/2-|q|)i',), 0, 1, uses_lambda=True,
                   full_bulk=False),
    RegimeTemplate('I', ('|q|i',), ('0', '(|q|-1/2)i', '(|q|+1/2)i'), 0, 0),
    RegimeTemplate('J', ('|q|i', '(1+p)i'), ('0', '(|q|-1/2)i', '(|q|+1/2)i') + P_PAIR, 0, 0,
                   uses_zx=True, full_bulk=False),
    RegimeTemplate('K', (), ('0',), 0, 0, uses_zx=True),
    RegimeTemplate('L', ('(1+p)i',), ('0',) + P_PAIR, 0, 0),
)}


@dataclass
class ExpandedTemplate:
    label: str
    n_sites: int
    z_descriptors: List[str]
    z1_descriptors: List[str]
    positions: Dict[str, complex]


def template_for(label: str, n_sites: int, p: float, q: float) -> ExpandedTemplate:
    """Template of a regime expanded at N, with the fixed positions evaluated at (p, q)."""
    if label not in TEMPLATES:
        raise ParameterError(f"Unknown regime '{label}'; expected one of {', '.join(TEMPLATES)}")
    template = TEMPLATES[label]
    z, z1 = template.expand(n_sites)
    positions = {name: canonical_zbar(DESCRIPTORS[name](p, q))
                 for name in template.z_fixed + template.z1_fixed}
    return ExpandedTemplate(label, n_sites, z, z1, positions)


@dataclass
class PatternReport:
    best_label: Optional[str]
    misfit: float
    assignments: List[Dict] = field(default_factory=list)
    unassigned: List[List[float]] = field(default_factory=list)
    fitted: Dict = field(default_factory=dict)
    scores: Dict[str, float] = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCES.match

    @property
    def classified(self) -> bool:
        return self.best_label is not None

    @property
    def label(self) -> str:
        return self.best_label or UNCLASSIFIED

    def second_best(self) -> Optional[Tuple[str, float]]:
        ranked = sorted(self.scores.items(), key=lambda item: item[1])
        return ranked[1] if len(ranked) > 1 else None

    def to_dict(self) -> Dict:
        payload = asdict(self)
        payload['label'] = self.label
        payload['classified'] = self.classified
        payload['scores'] = {k: (None if not np.isfinite(v) else v) for k, v in self.scores.items()}
        if not np.isfinite(self.misfit):
            payload['misfit'] = None
        return payload


class _Matcher:
    """Greedy assignment of roots to descriptors for one template."""

    def __init__(self, zbar: Sequence[complex], z1bar: Sequence[complex]):
        self.pools = {'z': list(zbar), 'z1': list(z1bar)}
        self.free = {'z': set(range(len(zbar))), 'z1': set(range(len(z1bar)))}
        self.assignments: List[Dict] = []
        self.fitted: Dict = {}

    def _nearest(self, family: str, target: complex) -> Optional[int]:
        free = sorted(self.free[family])
        if not free:
            return None
        distances = [abs(self.pools[family][i] - target) for i in free]
        return free[int(np.argmin(distances))]

    def assign(self, family: str, index: int, descriptor: str, deviation: float) -> None:
        self.free[family].discard(index)
        root = self.pools[family][index]
        self.assignments.append({'family': family, 'descriptor': descriptor,
                                 'root': [root.real, root.imag], 'deviation': float(deviation)})

    def match(self, family: str, descriptor: str, target: complex) -> float:
        index = self._nearest(family, target)
        if index is None:
            return np.inf
        deviation = abs(self.pools[family][index] - target)
        self.assign(family, index, descriptor, deviation)
        return deviation

    def peek(self, family: str, target: complex) -> Tuple[Optional[int], float]:
        index = self._nearest(family, target)
        if index is None:
            return None, np.inf
        return index, abs(self.pools[family][index] - target)


def _match_zx(m: _Matcher) -> float:
    best = None
    for index in sorted(m.free['z']):
        root = m.pools['z'][index]
        if root.imag <= 1.0:
            continue
        zx = root.imag
        low_index, low_dev = m.peek('z1', (zx - 0.5) * 1j)
        high_index, high_dev = m.peek('z1', (zx + 0.5) * 1j)
        if low_index is None or high_index is None or low_index == high_index:
            continue
        deviation = max(abs(root.real), low_dev, high_dev, max(0.0, 1.5 - zx))
        if best is None or deviation < best[0]:
            best = (deviation, index, zx)
    if best is None:
        return np.inf
    _, index, zx = best
    m.fitted['z_x'] = zx
    m.assign('z', index, 'z_x i', abs(m.pools['z'][index].real))
    return max(best[0], m.match('z1', '(z_x-1/2)i', (zx - 0.5) * 1j),
               m.match('z1', '(z_x+1/2)i', (zx + 0.5) * 1j))


def _match_lambda(m: _Matcher) -> float:
    free = sorted(m.free['z'])
    if len(free) < 2:
        return np.inf
    first = min(free, key=lambda i: abs(m.pools['z'][i].imag - 1.0))
    r1 = m.pools['z'][first]
    sign = 1.0 if r1.real >= 0 else -1.0
    m.free['z'].discard(first)
    second, _ = m.peek('z', -sign * abs(r1.real) + 1j)
    m.free['z'].add(first)
    r2 = m.pools['z'][second]
    lam = 0.5 * (abs(r1.real) + abs(r2.real))
    m.fitted['lambda'] = lam
    deviations = [abs(r1 - (sign * lam + 1j)), abs(r2 - (-sign * lam + 1j))]
    m.assign('z', first, 'lambda+i' if sign > 0 else '-lambda+i', deviations[0])
    m.assign('z', second, '-lambda+i' if sign > 0 else 'lambda+i', deviations[1])
    deviations.append(m.match('z1', 'lambda+3i/2', lam + 1.5j))
    deviations.append(m.match('z1', '-lambda+3i/2', -lam + 1.5j))
    return max(deviations)


def _match_bulk(m: _Matcher, count: int) -> float:
    worst = 0.0
    z_tilde = []
    for j in range(1, count + 1):
        free = sorted(m.free['z'])
        if not free:
            return np.inf
        index = min(free, key=lambda i: abs(m.pools['z'][i].imag - 1.5))
        root = m.pools['z'][index]
        deviation = abs(root.imag - 1.5)
        z_tilde.append(root.real)
        m.assign('z', index, f'z~_{j}+3i/2', deviation)
        worst = max(worst, deviation)

    z1_tilde = []
    for k in range(1, count + 1):
        free = sorted(m.free['z1'])
        if len(free) < 2:
            return np.inf
        first = min(free, key=lambda i: abs(m.pools['z1'][i].imag - 1.0))
        r1 = m.pools['z1'][first]
        m.free['z1'].discard(first)
        second, _ = m.peek('z1', r1.real + 2j)
        m.free['z1'].add(first)
        r2 = m.pools['z1'][second]
        center = 0.5 * (r1.real + r2.real)
        dev1 = abs(r1 - (center + 1j))
        dev2 = abs(r2 - (center + 2j))
        z1_tilde.append(center)
        m.assign('z1', first, f'z~1_{k}+i', dev1)
        m.assign('z1', second, f'z~1_{k}+2i', dev2)
        worst = max(worst, dev1, dev2)

    m.fitted['z_tilde'] = sorted(z_tilde)
    m.fitted['z1_tilde'] = sorted(z1_tilde)
    return worst


def _match_extras(m: _Matcher, template: RegimeTemplate) -> float:
    worst = 0.0
    for family, count, offset in (('z', template.z_extras, 0), ('z1', template.z1_extras, 1)):
        free = sorted(m.free[family])
        if len(free) != count:
            return np.inf
        # largest magnitude first
        free.sort(key=lambda i: -abs(m.pools[family][i]))
        for n, index in enumerate(free):
            deviation = abs(m.pools[family][index].imag)
            m.assign(family, index, f'z{n + offset}', deviation)
            worst = max(worst, deviation)
    return worst


def score_template(template: RegimeTemplate, zbar: Sequence[complex], z1bar: Sequence[complex],
                   n_sites: int, p: float, q: float,
                   string_tol: float = DEFAULT_TOLERANCES.string_structure) -> Tuple[float, _Matcher]:
    """
    Greedy match of one template; returns (misfit, matcher state).

    The misfit is the largest deviation of the boundary, free-parameter and
    extra roots. Bulk strings only have to be present in the right number
    with every member within string_tol of its string position.
    """
    m = _Matcher(zbar, z1bar)
    if template.bulk_count(n_sites) < 0:
        return np.inf, m
    deviations = []
    for family, names in (('z', template.z_fixed), ('z1', template.z1_fixed)):
        for name in names:
            deviations.append(m.match(family, name, canonical_zbar(DESCRIPTORS[name](p, q))))
    if template.uses_zx:
        deviations.append(_match_zx(m))
    if template.uses_lambda:
        deviations.append(_match_lambda(m))
    if _match_bulk(m, template.bulk_count(n_sites)) > string_tol:
        return np.inf, m
    deviations.append(_match_extras(m, template))
    return float(max(deviations)), m


def classify(roots: RootSet, params: ModelParams, tol: Optional[float] = None,
             string_tol: Optional[float] = None) -> PatternReport:
    """
    Best regime template for a ground-state root set.

    Every template is scored by its largest discriminating root deviation; ties
    keep the earlier label. Above tol the report is returned unclassified with
    all scores attached.
    """
    tol = DEFAULT_TOLERANCES.match if tol is None else tol
    string_tol = DEFAULT_TOLERANCES.string_structure if string_tol is None else string_tol
    eta = params.eta
    zbar = [canonical_zbar(z / eta) for z in roots.zbar]
    z1bar = [canonical_zbar(z / eta) for z in roots.z1bar]
    n_sites = params.n_sites

    scores: Dict[str, float] = {}
    best_label, best_misfit, best_matcher = None, np.inf, None
    for label, template in TEMPLATES.items():
        misfit, matcher = score_template(template, zbar, z1bar, n_sites, params.p, params.q, string_tol)
        scores[label] = misfit
        if misfit < best_misfit:
            best_label, best_misfit, best_matcher = label, misfit, matcher

    report = PatternReport(best_label=None, misfit=float(best_misfit), scores=scores, tolerance=tol)
    if best_matcher is not None:
        report.assignments = best_matcher.assignments
        report.fitted = best_matcher.fitted
        report.unassigned = [[best_matcher.pools[f][i].real, best_matcher.pools[f][i].imag]
                             for f in ('z', 'z1') for i in sorted(best_matcher.free[f])]
    if best_misfit <= tol:
        report.best_label = best_label
        logger.info(f"Classified root pattern as regime {best_label} (misfit {best_misfit:.3e})")
    else:
        logger.warning(f"Root pattern unclassified: best regime {best_label} misfit "
                       f"{best_misfit:.3e} > {tol:.3e}")
    return report


# Constraints between the two root families

def _bae_sides(zl: complex, z1bar: Sequence[complex], n_sites: int, p: float, q: float):
    lhs = ((zl - 2j) * (zl + 1j) / ((zl + 2j) * (zl - 1j))) ** (2 * n_sites)
    rhs = ((zl + 1.5j) / (zl - 1.5j)) * ((zl - 0.5j) / (zl + 0.5j))
    rhs *= ((zl - 1j * p) / (zl + 1j * p)) * ((zl + 1j * p + 1j) / (zl - 1j * p - 1j))
    rhs *= ((zl - 1j * q) / (zl + 1j * q)) * ((zl + 1j * q + 1j) / (zl - 1j * q - 1j))
    for zk in z1bar:
        rhs *= ((zl - zk - 0.5j) / (zl - zk + 0.5j)) * ((zl + zk - 0.5j) / (zl + zk + 0.5j))
    return lhs, rhs


def _pole_distance(zl: complex, z1bar: Sequence[complex], p: float, q: float) -> float:
    poles = [2j, -2j, 1j, -1j, 1.5j, -1.5j, 0.5j, -0.5j, -1j * p, 1j * p + 1j, -1j * q, 1j * q + 1j]
    distances = [abs(zl - pole) for pole in poles]
    for zk in z1bar:
        distances.extend([abs(zl - zk + 0.5j), abs(zl + zk + 0.5j)])
    return float(min(distances))


def bae_residual(roots: RootSet, params: ModelParams,
                 tolerances: Tolerances = DEFAULT_TOLERANCES) -> Dict:
    """
    |log(LHS/RHS)| of the homogeneous zero-root BAE for every zbar_l (eta = 1 units).

    Roots sitting on a pole of either side are reported with their pole distance
    and no residual.
    """
    if not params.homogeneous:
        logger.warning("BAE residual is defined for the homogeneous chain; ignoring inhomogeneities")
    eta = params.eta
    z1bar = [z / eta for z in roots.z1bar]
    per_root = []
    for zl in (z / eta for z in roots.zbar):
        distance = _pole_distance(zl, z1bar, params.p, params.q)
        entry = {'zbar': [zl.real, zl.imag], 'pole_distance': distance}
        if distance < tolerances.pole_distance:
            logger.warning(f"zbar = {zl:.6g} is within {distance:.2e} of a BAE pole; residual skipped")
            entry.update(residual=None, lhs_modulus=None)
        else:
            lhs, rhs = _bae_sides(zl, z1bar, params.n_sites, params.p, params.q)
            entry.update(residual=float(abs(np.log(lhs / rhs))), lhs_modulus=float(abs(lhs)))
        per_root.append(entry)
    values = [e['residual'] for e in per_root if e['residual'] is not None]
    worst = max(values) if values else 0.0
    return {'per_root': per_root, 'max_residual': worst, 'tolerance': tolerances.bae,
            'pass': bool(worst <= tolerances.bae)}


def bulk_string_members(roots: RootSet, eta: float = 1.0,
                        member_tol: float = DEFAULT_TOLERANCES.string_member) -> List[complex]:
    """
    zbar roots of the form x + 3i/2 whose four-string partners x + i and x + 2i
    are both among the zbar^(1) roots, each within member_tol.
    """
    z1bar = [canonical_zbar(z / eta) for z in roots.z1bar]
    if not z1bar:
        return []
    members = []
    for z in roots.zbar:
        zl = canonical_zbar(z / eta)
        if abs(zl.imag - 1.5) > 2 * member_tol:
            continue
        low = min(abs(zk - (zl - 0.5j)) for zk in z1bar)
        high = min(abs(zk - (zl + 0.5j)) for zk in z1bar)
        if max(low, high) <= member_tol:
            members.append(zl)
    return members


def pairing_check(roots: RootSet, tol: float = 1e-2, eta: float = 1.0,
                  member_tol: float = DEFAULT_TOLERANCES.string_member) -> List[Dict]:
    """
    Match each bulk two-string member zbar_l (taken with negative imaginary part)
    to the zbar^(1)_k minimizing |zbar_l -+ zbar^(1)_k + i/2|. Roots without both
    four-string partners (extra roots, unpaired boundary roots) are skipped.
    """
    z1bar = [z / eta for z in roots.z1bar]
    pairs = []
    for zl in bulk_string_members(roots, eta, member_tol):
        zl = -zl
        best_gap, best_partner = np.inf, None
        for zk in z1bar:
            for sign in (1.0, -1.0):
                gap = abs(zl - sign * zk + 0.5j)
                if gap < best_gap:
                    best_gap, best_partner = gap, sign * zk
        pairs.append({'zbar': [zl.real, zl.imag],
                      'partner': [best_partner.real, best_partner.imag],
                      'gap': float(best_gap), 'within_tol': bool(best_gap <= tol)})
    return pairs


# Regime probing

def regime_probe(p: float, q: float, n_sites: int, tolerances: Tolerances = DEFAULT_TOLERANCES,
                 **model_kwargs) -> str:
    """
    Label of the ground-state pattern at (p, q) from exact diagonalization.

    Raises:
        ClassificationError: no template fits within tolerances.match
    """
    report = probe_report(p, q, n_sites, tolerances, **model_kwargs)
    if not report.classified:
        raise ClassificationError(f"Ground state at p={p}, q={q}, N={n_sites} matches no regime "
                                  f"(best misfit {report.misfit:.3e})", scores=repr(report.scores))
    return report.label


def probe_report(p: float, q: float, n_sites: int, tolerances: Tolerances = DEFAULT_TOLERANCES,
                 **model_kwargs) -> PatternReport:
    params = ModelParams.from_reduced(n_sites, p, q, **model_kwargs)
    result = ground_state_pipeline(params, tolerances)
    return classify(result.roots, params, tolerances.match, tolerances.string_structure)


def _grid_row(task: Tuple[float, float, int, Tolerances, Dict]) -> Dict:
    p, q, n_sites, tolerances, model_kwargs = task
    row = {'p': p, 'q': q, 'N': n_sites}
    if p < 0:
        row['note'] = 'lower half-plane: follows from the symmetry of the Hamiltonian'
    try:
        report = probe_report(p, q, n_sites, tolerances, **model_kwargs)
        row.update(label=report.label, misfit=report.misfit)
    except Exception as e:
        logger.error(f"Regime probe failed at p={p}, q={q}: {e}")
        row.update(label='error', misfit=np.nan, error=str(e))
    return row


def regime_grid(ps: Sequence[float], qs: Sequence[float], n_sites: int, workers: int = 1,
                tolerances: Tolerances = DEFAULT_TOLERANCES, **model_kwargs) -> List[Dict]:
    """Label map over a (p, q) grid, sorted by (p, q)."""
    tasks = [(float(p), float(q), n_sites, tolerances, model_kwargs) for p in ps for q in qs]
    logger.info(f"Probing {len(tasks)} (p, q) points at N={n_sites} with {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_grid_row, tasks))
    else:
        rows = [_grid_row(task) for task in tasks]
    return sorted(rows, key=lambda row: (row['p'], row['q']))
