"""Calendar helpers operating on numpy ``datetime64[D]`` arrays."""

from __future__ import annotations

import datetime as dt

import numpy as np

# cumulative days before each month in a 365-day year
_MONTH_OFFSET = np.array([0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334])


def to_day(value) -> np.datetime64:
    """Coerce a date, ISO string or datetime64 into ``datetime64[D]``."""
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]")
    if isinstance(value, dt.datetime):
        value = value.date()
    return np.datetime64(value, "D")


def to_days(values) -> np.ndarray:
    return np.asarray(values, dtype="datetime64[D]")


def to_pydate(value) -> dt.date:
    return to_day(value).astype(dt.date)


def month(dates) -> np.ndarray:
    d = to_days(dates)
    return (d.astype("datetime64[M]").astype(np.int64) % 12) + 1


def day_of_month(dates) -> np.ndarray:
    d = to_days(dates)
    return (d - d.astype("datetime64[M]")).astype(np.int64) + 1


def noleap_day_of_year(dates) -> np.ndarray:
    """Day of year in 1..365 on a 365-day calendar; Feb 29 maps to 59 (Feb 28)."""
    m = month(dates)
    dom = day_of_month(dates)
    doy = _MONTH_OFFSET[m - 1] + dom
    return np.where((m == 2) & (dom == 29), 59, doy)


def daily_range(start, end) -> np.ndarray:
    """Inclusive daily axis from ``start`` to ``end``."""
    return np.arange(to_day(start), to_day(end) + np.timedelta64(1, "D"), dtype="datetime64[D]")
