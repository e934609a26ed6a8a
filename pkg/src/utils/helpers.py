import logging
import os
from typing import Any, Iterable, Tuple

import pandas as pd

logger = logging.getLogger(__name__)


def ensure_dir(path: str) -> str:
    """Create an output directory if it is missing"""
    os.makedirs(path, exist_ok=True)
    return path


def format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, 'value') and isinstance(value.value, str):
        return value.value
    return str(value)


def format_report(items: Iterable[Tuple[str, Any]]) -> str:
    """Format ``key = value`` lines in the given order"""
    return ''.join(f"{key} = {format_value(value)}\n" for key, value in items)


def write_report(path: str, items: Iterable[Tuple[str, Any]]) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(format_report(items))
    logger.info(f"Wrote report {path}")


def write_csv(frame: pd.DataFrame, path: str) -> None:
    """Write a frame with shortest round-trip floats and empty fields for NaN"""
    frame.to_csv(path, index=False, lineterminator='\n', na_rep='')
    logger.info(f"Wrote {len(frame)} rows to {path}")
