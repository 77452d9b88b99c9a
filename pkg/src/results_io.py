"""
Result files with provenance headers.

JSON reports carry a top-level "provenance" object; CSV tables start with
'#'-prefixed provenance lines followed by a pandas-written table at 17
significant digits.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from config import Tolerances

logger = logging.getLogger(__name__)

TOOL_VERSION = '1.0.0'
CSV_FLOAT_FORMAT = '%.17g'

# config keys that do not influence numeric results
_VOLATILE_KEYS = ('out_dir', 'ledger_path', 'enable_ledger', 'workers')


def config_hash(config: Dict) -> str:
    stable = {k: v for k, v in config.items() if k not in _VOLATILE_KEYS}
    payload = json.dumps(stable, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def provenance(config: Dict, tolerances: Tolerances, command: str) -> Dict:
    return {
        'command': command,
        'config_sha256': config_hash(config),
        'seed': config.get('seed'),
        'tool_version': TOOL_VERSION,
        'tolerances': tolerances.as_dict(),
    }


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: Path, payload: Dict, header: Dict) -> Path:
    """Write a JSON report with sorted keys; complex values become [re, im]."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {'provenance': header, **_jsonable(payload)}
    with open(path, 'w') as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info(f"Wrote {path}")
    return path


def write_csv(path: Path, rows: Iterable[Dict], header: Dict,
              columns: Optional[List[str]] = None) -> Path:
    """Write rows as CSV behind '#' provenance lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=columns)
    with open(path, 'w', newline='') as f:
        for key in sorted(header):
            value = header[key]
            if isinstance(value, dict):
                value = json.dumps(value, sort_keys=True)
            f.write(f'# {key}: {value}\n')
        frame.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info(f"Wrote {path} ({len(frame)} rows)")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment='#')


