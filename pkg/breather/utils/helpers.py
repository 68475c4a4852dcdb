import json
import os
from datetime import datetime, timezone
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from breather.config import settings
from breather.utils.errors import OutputError
from breather.utils.logger import setup_logger

logger = setup_logger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def prepare_output_dir(path: Optional[str], *parts: str) -> str:
    """
    Create (if needed) and return the run directory `path/parts...`.

    Defaults to settings.OUTPUT_DIR.
    """
    run_dir = os.path.join(path or settings.OUTPUT_DIR, *parts)
    try:
        os.makedirs(run_dir, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {run_dir}: {e}")
    if not os.access(run_dir, os.W_OK):
        raise OutputError(f"output directory {run_dir} is not writable")
    return run_dir


def write_csv(frame: pd.DataFrame, path: str) -> str:
    """Comma-separated with a header row; floats round-trip exactly."""
    try:
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    except OSError as e:
        raise OutputError(f"failed to write {path}: {e}")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def json_safe(value):
    """Recursively replace NaN and infinities with None (strict JSON has no such literals)."""
    if isinstance(value, dict):
        return {key: json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(payload: dict, path: str) -> str:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(json_safe(payload), handle, indent=2, allow_nan=False)
            handle.write("\n")
    except (OSError, TypeError, ValueError) as e:
        raise OutputError(f"failed to write {path}: {e}")
    return path


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def normalize_seeds(seeds: Sequence[int]) -> List[int]:
    """Deduplicate seeds keeping the first occurrence."""
    ordered = []
    for seed in seeds:
        if int(seed) not in ordered:
            ordered.append(int(seed))
    return ordered
