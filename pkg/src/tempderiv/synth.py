"""Synthetic station data drawn from known seasonal-mean and OU parameters.

Used for end-to-end runs without the proprietary station archive, and as the
ground truth in calibration recovery tests.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .calibration import SeasonalMeanParams, VolatilityCurve, evaluate_theta
from .dates import daily_range, to_day, to_pydate
from .ingest import CsvSchema, RawTemperatureRecord, records_to_csv

TRAIN_START = dt.date(1951, 1, 1)
TRAIN_END = dt.date(2020, 12, 31)
DATA_END = dt.date(2023, 12, 31)


def midpoint(start, end) -> dt.date:
    s, e = to_day(start), to_day(end)
    return to_pydate(s + (e - s) // 2)


@dataclass(frozen=True)
class SyntheticTruth:
    seasonal: SeasonalMeanParams
    kappa: float
    volatility: VolatilityCurve


def seasonal_sigma_curve(mean: float, amplitude: float, peak_day: int = 15) -> VolatilityCurve:
    days = np.arange(1.0, 366.0)
    return VolatilityCurve(days, mean + amplitude * np.cos(2 * math.pi * (days - peak_day) / 365.0))


def default_truths() -> dict[str, SyntheticTruth]:
    t0 = midpoint(TRAIN_START, TRAIN_END)
    return {
        "Gujarat": SyntheticTruth(
            SeasonalMeanParams(a=27.0, b=0.015, c=0.0002, d=0.0, alpha=-3.5, beta=-4.0, t0=t0),
            kappa=0.25,
            volatility=seasonal_sigma_curve(1.6, 0.4),
        ),
        "Punjab": SyntheticTruth(
            SeasonalMeanParams(a=24.0, b=0.02, c=0.0, d=0.0, alpha=-7.0, beta=-6.0, t0=t0),
            kappa=0.2,
            volatility=seasonal_sigma_curve(2.0, 0.6),
        ),
    }


def ou_residuals(dates, kappa: float, sigma, rng: np.random.Generator) -> np.ndarray:
    """Exact daily OU transition started from its stationary law.

    ``sigma`` is a constant or a volatility curve evaluated per date.
    """
    n = len(dates)
    sig = sigma.on_dates(dates) if isinstance(sigma, VolatilityCurve) else np.full(n, float(sigma))
    decay = math.exp(-kappa)
    step_sd = math.sqrt(-math.expm1(-2 * kappa) / (2 * kappa))
    z = rng.standard_normal(n)
    r = np.empty(n)
    r[0] = sig[0] / math.sqrt(2 * kappa) * z[0]
    for k in range(n - 1):
        r[k + 1] = decay * r[k] + sig[k] * step_sd * z[k + 1]
    return r


def synthetic_series(truth: SyntheticTruth, start, end, seed: int) -> tuple[np.ndarray, np.ndarray]:
    dates = daily_range(start, end)
    rng = np.random.default_rng(seed)
    return dates, evaluate_theta(truth.seasonal, dates) + ou_residuals(dates, truth.kappa, truth.volatility, rng)


def synthetic_records(
    seed: int,
    truths: dict[str, SyntheticTruth] | None = None,
    start=TRAIN_START,
    end=DATA_END,
    station_offset: float = 0.5,
    n_outliers: int = 3,
    gap_lengths: tuple[int, ...] = (1, 3, 12),
) -> list[RawTemperatureRecord]:
    """Two stations per state straddling the true series by ``+/- station_offset``.

    A few gross outliers and missing stretches are planted so the cleaning
    stage has work to do.
    """
    truths = truths or default_truths()
    rng = np.random.default_rng(seed)
    records = []
    for i, (state, truth) in enumerate(sorted(truths.items())):
        dates, temps = synthetic_series(truth, start, end, seed + 1000 * (i + 1))
        temps = np.round(temps, 2)
        missing = np.zeros(len(dates), bool)
        for length in gap_lengths:
            s = int(rng.integers(400, len(dates) - 400))
            missing[s : s + length] = True
        spikes = rng.choice(np.flatnonzero(~missing[1:-1]) + 1, size=n_outliers, replace=False)
        temps[spikes] = 58.0
        for d, t, miss in zip(dates.astype(dt.date), temps, missing):
            for name, offset in (("A", station_offset), ("B", -station_offset)):
                t_avg = None if miss else round(float(t) + offset, 2)
                records.append(RawTemperatureRecord(d, state, t_avg, None, None, f"{state[:3].upper()}-{name}"))
    return records


def synthetic_csv(seed: int, **kwargs) -> str:
    schema = CsvSchema(tmin=None, tmax=None)
    return records_to_csv(synthetic_records(seed, **kwargs), schema)
