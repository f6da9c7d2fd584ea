import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np


def _default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return str(value)


def canonical_json(payload: Any) -> str:
    """Sorted-key, indented JSON; the one serialization used for hashing and manifests."""
    return json.dumps(payload, indent=4, sort_keys=True, default=_default)


def sha256_payload(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def write_json(path: Path, payload: Any) -> None:
    Path(path).write_text(canonical_json(payload) + "\n")
