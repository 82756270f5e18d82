"""
Utility functions for kac-roots.
"""

import logging
import math
from typing import Tuple

import numpy as np
from rich.logging import RichHandler


def setup_logging(level: int = logging.INFO) -> None:
    """
    Setup logging configuration with Rich handler.

    Args:
        level: Logging level
    """
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )

    # Reduce noise from third-party libraries
    logging.getLogger('matplotlib').setLevel(logging.WARNING)
    logging.getLogger('asyncio').setLevel(logging.WARNING)


def _parse_float(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"invalid number {text!r} in {what}")
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite, got {text!r}")
    return value


def parse_range(text: str) -> Tuple[float, float]:
    """
    Parse 'LO:HI' into a pair of floats with LO < HI.

    Args:
        text: Range specification, e.g. '-15:15'

    Returns:
        (lo, hi)
    """
    parts = text.split(':')
    if len(parts) != 2:
        raise ValueError(f"range must look like LO:HI, got {text!r}")
    lo, hi = (_parse_float(p, 'range') for p in parts)
    if not lo < hi:
        raise ValueError(f"range needs LO < HI, got {text!r}")
    return lo, hi


def parse_grid(text: str) -> np.ndarray:
    """
    Parse 'MIN:MAX:POINTS' into an evenly spaced grid.

    A single point requires MIN == MAX; e.g. '0:0:1' gives [0.0].
    """
    parts = text.split(':')
    if len(parts) != 3:
        raise ValueError(f"grid must look like MIN:MAX:POINTS, got {text!r}")
    lo, hi = (_parse_float(p, 'grid') for p in parts[:2])
    try:
        points = int(parts[2])
    except ValueError:
        raise ValueError(f"grid POINTS must be an integer, got {parts[2]!r}")
    if points < 1:
        raise ValueError(f"grid needs at least one point, got {points}")
    if points == 1:
        if lo != hi:
            raise ValueError(f"a one-point grid needs MIN == MAX, got {text!r}")
        return np.array([lo])
    if not lo < hi:
        raise ValueError(f"grid needs MIN < MAX, got {text!r}")
    return np.linspace(lo, hi, points)


def parse_scan(text: str) -> np.ndarray:
    """
    Parse 'MIN:MAX:STEP' into the values MIN, MIN+STEP, ..., up to MAX.

    Values are formed as MIN + i*STEP and rounded to 12 digits so that
    '0:8:0.1' yields 1.2 rather than 1.2000000000000002.
    """
    parts = text.split(':')
    if len(parts) != 3:
        raise ValueError(f"scan must look like MIN:MAX:STEP, got {text!r}")
    lo, hi, step = (_parse_float(p, 'scan') for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"scan needs MIN <= MAX and STEP > 0, got {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


def format_duration(seconds: float) -> str:
    """
    Format a wall time for the console summary.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted string (e.g. "2m 05.3s")
    """
    if seconds < 60:
        return f"{seconds:.2f}s"
    minutes, rest = divmod(seconds, 60)
    return f"{int(minutes)}m {rest:04.1f}s"
