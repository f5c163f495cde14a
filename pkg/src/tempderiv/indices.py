"""Degree-day indices and extreme-event counts over an accrual window.

Every function accepts a single path (1-D) or a matrix of paths (2-D, one
path per row) and returns a scalar or one value per row. Degree-day sums
are exactly rounded (``math.fsum``), so they do not depend on summation order.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dates import to_day, to_days, to_pydate
from .errors import WindowOutOfRange

DEFAULT_MIN_EVENT_LEN = 5


@dataclass(frozen=True)
class AccrualWindow:
    start: dt.date
    end: dt.date

    def __post_init__(self):
        object.__setattr__(self, "start", to_pydate(self.start))
        object.__setattr__(self, "end", to_pydate(self.end))
        if self.start > self.end:
            raise ValueError(f"window start {self.start} is after end {self.end}")

    @property
    def n_days(self) -> int:
        return (self.end - self.start).days + 1

    def slice_of(self, dates) -> slice:
        """Column slice of a contiguous daily axis covered by the window."""
        dates = to_days(dates)
        if len(dates) == 0 or to_day(self.start) < dates[0] or to_day(self.end) > dates[-1]:
            raise WindowOutOfRange(
                f"window {self.start}..{self.end} not inside {dates[0] if len(dates) else '-'}..{dates[-1] if len(dates) else '-'}"
            )
        i = int((to_day(self.start) - dates[0]).astype(np.int64))
        return slice(i, i + self.n_days)


def _windowed(temps, dates, window: AccrualWindow | None) -> np.ndarray:
    temps = np.asarray(temps, dtype=float)
    if window is None:
        return temps
    if dates is None:
        raise ValueError("dates are required when a window is given")
    return temps[..., window.slice_of(dates)]


def _row_fsum(terms: np.ndarray) -> np.ndarray | float:
    if terms.ndim == 1:
        return math.fsum(terms)
    return np.fromiter((math.fsum(r) for r in terms), dtype=float, count=terms.shape[0])


def compute_hdd(temps, t_ref: float, window: AccrualWindow | None = None, dates=None):
    """Sum of ``max(t_ref - T, 0)`` over the window."""
    x = _windowed(temps, dates, window)
    return _row_fsum(np.maximum(t_ref - x, 0.0))


def compute_cdd(temps, t_ref: float, window: AccrualWindow | None = None, dates=None):
    """Sum of ``max(T - t_ref, 0)`` over the window."""
    x = _windowed(temps, dates, window)
    return _row_fsum(np.maximum(x - t_ref, 0.0))


def detect_events(
    temps,
    threshold: float,
    direction: Literal["above", "below"],
    min_len: int = DEFAULT_MIN_EVENT_LEN,
    window: AccrualWindow | None = None,
    dates=None,
):
    """Count maximal runs of days strictly above/below ``threshold`` lasting ``min_len`` days or more."""
    if min_len < 1:
        raise ValueError("min_len must be at least 1")
    x = _windowed(temps, dates, window)
    if direction == "above":
        hit = x > threshold
    elif direction == "below":
        hit = x < threshold
    else:
        raise ValueError(f"direction must be 'above' or 'below', got {direction!r}")
    single = hit.ndim == 1
    hit = np.atleast_2d(hit)
    n = hit.shape[0]
    padded = np.zeros((n, hit.shape[1] + 2), dtype=np.int8)
    padded[:, 1:-1] = hit
    edges = np.diff(padded, axis=1)
    start_rows, start_cols = np.nonzero(edges == 1)
    _, end_cols = np.nonzero(edges == -1)
    long_enough = (end_cols - start_cols) >= min_len
    counts = np.bincount(start_rows[long_enough], minlength=n)
    return int(counts[0]) if single else counts
