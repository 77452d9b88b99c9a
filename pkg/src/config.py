"""
Configuration loading and validation for the lab.

Configuration is a flat dictionary, merged from (lowest precedence first):
built-in defaults, a config file, LAB_* environment variables and explicit
overrides. Config files are either .env-style KEY=VALUE text (the section is
the key prefix: MODEL_, TOL_, SPECTRUM_, THERMO_, SWEEP_, RUN_) or JSON with
the same sections as nested objects.
"""

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional

from dotenv import dotenv_values, load_dotenv

from errors import ParameterError

logger = logging.getLogger(__name__)

ENV_PREFIX = 'LAB_'


@dataclass(frozen=True)
class Tolerances:
    """Single tuning point for every numeric threshold in the lab."""

    hermitian: float = 1e-10
    eig_residual: float = 1e-10
    fit_residual: float = 1e-8
    fit_condition: float = 1e12
    root_residual: float = 1e-6
    leading_coefficient: float = 1e-6
    degenerate_leading: float = 1e-12
    identity: float = 1e-10
    commutator: float = 1e-9
    transfer_residual: float = 1e-8
    degeneracy: float = 1e-6
    energy_gap: float = 1e-8
    fusion: float = 1e-7
    root_energy: float = 1e-6
    bae: float = 1e-5
    pole_distance: float = 1e-9
    match: float = 0.15
    string_structure: float = 0.5
    string_member: float = 0.25
    quadrature: float = 1e-10
    fourier: float = 1e-8
    thermo_energy: float = 1e-6
    hamiltonian: float = 1e-6
    extrapolation: float = 0.05

    def with_overrides(self, overrides: Optional[Mapping[str, float]]) -> 'Tolerances':
        """Return a copy with named entries replaced."""
        if not overrides:
            return self
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ParameterError(f"Unknown tolerance name(s): {', '.join(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()


def _parse_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    return str(raw).strip().lower() in ('1', 'true', 'yes', 'on')


def _parse_float_list(raw) -> List[float]:
    if isinstance(raw, (list, tuple)):
        return [float(x) for x in raw]
    return [float(x) for x in str(raw).split(',') if x.strip()]


def _parse_int_list(raw) -> List[int]:
    if isinstance(raw, (list, tuple)):
        return [int(x) for x in raw]
    return [int(x) for x in str(raw).split(',') if x.strip()]


def _parse_optional_float(raw) -> Optional[float]:
    if raw is None or str(raw).strip().lower() in ('', 'none', 'null'):
        return None
    return float(raw)


# file/env key -> (config key, parser)
CONFIG_KEYS: Dict[str, tuple] = {
    'MODEL_N': ('n_sites', int),
    'MODEL_ETA': ('eta', float),
    'MODEL_P_MINUS': ('p_minus', _parse_optional_float),
    'MODEL_P_PLUS': ('p_plus', _parse_optional_float),
    'MODEL_ALPHA_MINUS': ('alpha_minus', float),
    'MODEL_ALPHA_PLUS': ('alpha_plus', float),
    'MODEL_PHI_MINUS': ('phi_minus', float),
    'MODEL_PHI_PLUS': ('phi_plus', float),
    'MODEL_THETA_BAR': ('theta_bar', _parse_float_list),
    'MODEL_P': ('p', _parse_optional_float),
    'MODEL_Q': ('q', _parse_optional_float),
    'SPECTRUM_ALL_STATES': ('all_states', _parse_bool),
    'SPECTRUM_PROBE_POINTS': ('probe_points', _parse_float_list),
    'SPECTRUM_ROTATION_POINT': ('rotation_point', float),
    'THERMO_N_LIST': ('n_list', _parse_int_list),
    'THERMO_REGIME': ('regime', str),
    'THERMO_Z_X': ('z_x', _parse_optional_float),
    'THERMO_LAMBDA': ('lambda_', _parse_optional_float),
    'THERMO_FIT_ORDER': ('fit_order', int),
    'SWEEP_P_MIN': ('sweep_p_min', float),
    'SWEEP_P_MAX': ('sweep_p_max', float),
    'SWEEP_P_STEPS': ('sweep_p_steps', int),
    'SWEEP_Q_MIN': ('sweep_q_min', float),
    'SWEEP_Q_MAX': ('sweep_q_max', float),
    'SWEEP_Q_STEPS': ('sweep_q_steps', int),
    'SWEEP_PROBE_N': ('sweep_probe_n', int),
    'SWEEP_EXTRAPOLATE': ('sweep_extrapolate', _parse_bool),
    'RUN_SEED': ('seed', int),
    'RUN_POINTS': ('points', int),
    'RUN_OUT_DIR': ('out_dir', str),
    'RUN_WORKERS': ('workers', int),
    'RUN_MAX_DIMENSION': ('max_dimension', int),
    'RUN_N_MAX': ('n_max', int),
    'RUN_LEDGER_PATH': ('ledger_path', str),
    'RUN_ENABLE_LEDGER': ('enable_ledger', _parse_bool),
    'RUN_CORRUPT_R': ('corrupt_r', _parse_bool),
}

DEFAULT_CONFIG: Dict = {
    'n_sites': 4,
    'eta': 1.0,
    'p_minus': None,
    'p_plus': None,
    'alpha_minus': 0.5,
    'alpha_plus': 0.3,
    'phi_minus': 0.4,
    'phi_plus': 0.4,
    'theta_bar': [],
    'p': 0.6,
    'q': -0.2,
    'all_states': False,
    'probe_points': [0.37, 1.13],
    'rotation_point': 0.37,
    'n_list': [3, 4, 5, 6],
    'regime': 'B',
    'z_x': None,
    'lambda_': None,
    'fit_order': 1,
    'sweep_p_min': 0.2,
    'sweep_p_max': 3.0,
    'sweep_p_steps': 15,
    'sweep_q_min': 0.2,
    'sweep_q_max': 3.0,
    'sweep_q_steps': 15,
    'sweep_probe_n': 0,
    'sweep_extrapolate': False,
    'seed': 20240611,
    'points': 100,
    'out_dir': 'results',
    'workers': 1,
    'max_dimension': 3 ** 6 * 3,
    'n_max': 6,
    'ledger_path': 'lab_runs.db',
    'enable_ledger': True,
    'corrupt_r': False,
    'tolerances': {},
}


def _apply_flat(config: Dict, flat: Mapping[str, object], source: str) -> None:
    """Fold KEY=VALUE pairs (already stripped of any env prefix) into config."""
    for raw_key, raw_value in flat.items():
        key = raw_key.upper()
        if raw_value is None:
            continue
        if key.startswith('TOL_'):
            config['tolerances'][key[4:].lower()] = float(raw_value)
            continue
        if key not in CONFIG_KEYS:
            logger.warning(f"Ignoring unknown configuration key '{raw_key}' from {source}")
            continue
        name, parser = CONFIG_KEYS[key]
        try:
            config[name] = parser(raw_value)
        except (TypeError, ValueError) as e:
            raise ParameterError(f"Invalid value for {raw_key} in {source}: {raw_value!r} ({e})")


def _flatten_json(payload: Mapping) -> Dict[str, object]:
    flat = {}
    for section, body in payload.items():
        if isinstance(body, Mapping):
            for key, value in body.items():
                flat[f"{section}_{key}".upper()] = value
        else:
            flat[str(section).upper()] = body
    return flat


def read_config_file(path: str) -> Dict[str, object]:
    """Read a .env-style or JSON config file into flat upper-case keys."""
    file_path = Path(path)
    if not file_path.exists():
        raise ParameterError(f"Config file not found: {path}")
    text = file_path.read_text(encoding='utf-8')
    if file_path.suffix.lower() == '.json' or text.lstrip().startswith('{'):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParameterError(f"Config file {path} is not valid JSON: {e}")
        if not isinstance(payload, dict):
            raise ParameterError(f"Config file {path} must contain a JSON object")
        return _flatten_json(payload)
    return {k.upper(): v for k, v in dotenv_values(file_path).items()}


def load_config(path: Optional[str] = None, overrides: Optional[Mapping] = None,
                use_environment: bool = True) -> Dict:
    """
    Load configuration from defaults, file, environment and overrides.

    Args:
        path: Optional config file (.env-style or JSON)
        overrides: Flat mapping of config keys (not file keys) applied last
        use_environment: Read LAB_* environment variables (after load_dotenv)

    Returns:
        Configuration dict with derived p_plus/p_minus filled in
    """
    config = dict(DEFAULT_CONFIG)
    config['tolerances'] = {}
    config['theta_bar'] = list(DEFAULT_CONFIG['theta_bar'])

    if path:
        _apply_flat(config, read_config_file(path), path)

    if use_environment:
        load_dotenv()
        env = {k[len(ENV_PREFIX):]: v for k, v in os.environ.items() if k.startswith(ENV_PREFIX)}
        env.pop('LOG_LEVEL', None)
        env.pop('LOG_FILE', None)
        if 'LEDGER_PATH' in env:
            env.setdefault('RUN_LEDGER_PATH', env.pop('LEDGER_PATH'))
        _apply_flat(config, env, 'environment')

    if overrides:
        for key, value in overrides.items():
            if key == 'tolerances':
                config['tolerances'].update(value)
            elif value is not None:
                config[key] = value

    derive_boundary_strengths(config)
    return config


def derive_boundary_strengths(config: Dict) -> None:
    """
    Fill p_plus/p_minus from the reduced boundary parameters p, q.

    p = p+/sqrt(1+alpha+^2) - 1/2 and q = -p-/sqrt(1+alpha-^2) - 1/2 (eta = 1 units,
    scaled by eta otherwise). Explicit p_plus/p_minus win over p/q.
    """
    eta = config.get('eta', 1.0)
    if config.get('p_plus') is None and config.get('p') is not None:
        config['p_plus'] = (config['p'] + 0.5) * eta * math.sqrt(1.0 + config['alpha_plus'] ** 2)
    if config.get('p_minus') is None and config.get('q') is not None:
        config['p_minus'] = -(config['q'] + 0.5) * eta * math.sqrt(1.0 + config['alpha_minus'] ** 2)


def tolerances_from_config(config: Dict) -> Tolerances:
    return DEFAULT_TOLERANCES.with_overrides(config.get('tolerances'))


def validate_config(config: Dict) -> None:
    """
    Validate configuration before any command runs.

    Raises:
        ParameterError: listing every problem found
    """
    errors = []

    n_sites = config.get('n_sites')
    if not isinstance(n_sites, int) or n_sites < 1:
        errors.append(f"MODEL_N must be a positive integer, got {n_sites!r}")

    eta = config.get('eta')
    if eta is None or not eta > 0:
        errors.append(f"MODEL_ETA must be positive, got {eta!r}")

    for side in ('minus', 'plus'):
        strength = config.get(f'p_{side}')
        alpha = config.get(f'alpha_{side}')
        if strength is None:
            errors.append(f"Boundary strength p_{side} is missing (set MODEL_P_{side.upper()} or MODEL_P/MODEL_Q)")
            continue
        if eta:
            denominator = strength ** 2 - 0.25 * (1.0 + alpha ** 2) * eta ** 2
            if abs(denominator) < 1e-12:
                errors.append(f"Boundary denominator p_{side}^2 - (1+alpha_{side}^2) eta^2/4 vanishes")
        if not math.isfinite(strength):
            errors.append(f"Boundary parameters on the {side} side are not finite")

    theta_bar = config.get('theta_bar') or []
    if theta_bar and isinstance(n_sites, int) and len(theta_bar) != n_sites:
        errors.append(f"MODEL_THETA_BAR needs {n_sites} values, got {len(theta_bar)}")

    n_list = config.get('n_list') or []
    if not n_list or any(n < 1 for n in n_list):
        errors.append(f"THERMO_N_LIST must be a non-empty list of positive integers, got {n_list!r}")

    if config.get('fit_order') not in (1, 2):
        errors.append(f"THERMO_FIT_ORDER must be 1 or 2, got {config.get('fit_order')!r}")

    for axis in ('p', 'q'):
        steps = config.get(f'sweep_{axis}_steps')
        if not isinstance(steps, int) or steps < 1:
            errors.append(f"SWEEP_{axis.upper()}_STEPS must be a positive integer, got {steps!r}")
        if config.get(f'sweep_{axis}_min') > config.get(f'sweep_{axis}_max'):
            errors.append(f"SWEEP_{axis.upper()}_MIN exceeds SWEEP_{axis.upper()}_MAX")

    if config.get('points', 0) < 1:
        errors.append(f"RUN_POINTS must be at least 1, got {config.get('points')!r}")
    if config.get('workers', 0) < 1:
        errors.append(f"RUN_WORKERS must be at least 1, got {config.get('workers')!r}")
    if config.get('max_dimension', 0) < 9:
        errors.append(f"RUN_MAX_DIMENSION must be at least 9, got {config.get('max_dimension')!r}")

    try:
        tolerances = tolerances_from_config(config)
        bad = [name for name, value in tolerances.as_dict().items() if not value > 0]
        if bad:
            errors.append(f"Tolerances must be positive: {', '.join(bad)}")
    except ParameterError as e:
        errors.append(str(e))

    if errors:
        error_msg = "Configuration validation failed:\n" + "\n".join(f"  - {err}" for err in errors)
        raise ParameterError(error_msg)

    logger.info("Configuration validation passed")
