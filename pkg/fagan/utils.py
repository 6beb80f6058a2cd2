"""Utility functions for fagan"""
import csv
import io
import math
from typing import Any, Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .exceptions import NumericalError

PathOrFile = Union[str, TextIO]


def as_signal(values: Any, name: str = 'signal') -> np.ndarray:
    """Returns values as a contiguous 1-D float64 array.

    Raises NumericalError for NaN/Inf entries and ValueError for non 1-D input.
    """
    arr = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError('{} must be one-dimensional, got shape {}'.format(name, arr.shape))
    check_finite(arr, name)
    return arr


def check_finite(arr: np.ndarray, what: str) -> np.ndarray:
    """Raises NumericalError if arr holds NaN or Inf, returns arr otherwise."""
    if not np.all(np.isfinite(arr)):
        raise NumericalError('{} contains non-finite values'.format(what))
    return arr


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """Returns a numpy Generator for the given seed. All randomness in fagan goes through here."""
    return np.random.default_rng(seed)


def power_db(ratio: float) -> float:
    """10*log10 of a power ratio, -inf for zero."""
    if ratio <= 0.0:
        return -math.inf
    return 10.0 * math.log10(ratio)


def write_csv_grid(grid: np.ndarray, out: PathOrFile) -> None:
    """Writes a 2-D grid as CSV, one row per frame, 9 significant digits."""
    grid = np.atleast_2d(grid)
    lines = (','.join('{:.9g}'.format(v) for v in row) for row in grid)
    _write_text('\n'.join(lines) + '\n', out)


def write_csv_rows(header: Sequence[str], rows: Iterable[Sequence[Any]], out: PathOrFile) -> None:
    """Writes header plus rows. Floats are formatted with 9 significant digits."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    _write_text(buffer.getvalue(), out)


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return '{:.9g}'.format(float(value))
    return str(value)


def convert_string_type(value: str) -> Any:
    """Converts a config string into its (guessed) original type.

    int and float are tried first, then the boolean words true/false,
    everything else stays a string.
    """
    for type_ in int, float:
        try:
            return type_(value)
        except ValueError:
            pass

    lowered = value.lower()
    if lowered in ('true', 'yes', 'on'):
        return True
    if lowered in ('false', 'no', 'off'):
        return False

    # fall back to string
    return value


def _write_text(text: str, out: PathOrFile) -> None:
    if isinstance(out, str):
        with open(out, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
    else:
        out.write(text)
