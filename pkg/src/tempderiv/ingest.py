"""Loading, cleaning and splitting of daily temperature observations.

Raw station rows come in through :func:`parse_temperature_csv`, are averaged
to one value per state and day by :func:`aggregate_state`, cleaned with
:func:`remove_outliers` and :func:`impute_gaps`, and finally split into a
calibration and a hold-out window with :func:`split_train_test`.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .dates import daily_range, to_day, to_days, to_pydate
from .errors import BadDate, CutoffOutOfRange, EmptyInput, MissingColumn, TooFewPoints

logger = logging.getLogger(__name__)

PHYSICAL_BOUNDS = (-60.0, 60.0)
MISSING_MARKERS = frozenset({"", "na", "n/a", "nan", "null", "none", "-"})
DATE_FORMATS = ("%Y-%m-%d", "%Y/%m/%d", "%d-%m-%Y", "%d/%m/%Y")
DEFAULT_MAX_GAP = 7
DEFAULT_OUTLIER_K = 3.0


@dataclass(frozen=True)
class CsvSchema:
    """Maps logical fields onto CSV header names. ``None`` means absent."""

    date: str = "date"
    state: str = "state"
    tavg: str | None = "tavg"
    tmin: str | None = "tmin"
    tmax: str | None = "tmax"
    station: str | None = "station"

    @classmethod
    def from_mapping(cls, mapping: dict | None) -> "CsvSchema":
        if not mapping:
            return cls()
        unknown = set(mapping) - set(cls.__dataclass_fields__)
        if unknown:
            raise MissingColumn(f"unknown schema keys: {sorted(unknown)}")
        return cls(**mapping)


@dataclass(frozen=True)
class RawTemperatureRecord:
    date: dt.date
    state: str
    t_avg: float | None
    t_min: float | None = None
    t_max: float | None = None
    station: str | None = None

    @property
    def missing(self) -> bool:
        return self.t_avg is None


@dataclass
class ParseResult:
    records: list[RawTemperatureRecord]
    warnings: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def _parse_date(text: str, line: int) -> dt.date:
    text = text.strip()
    for fmt in DATE_FORMATS:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise BadDate(f"line {line}: unparseable date {text!r}", row=line)


def _parse_temp(text: str | None, name: str, line: int, warnings: list[str]) -> float | None:
    if text is None:
        return None
    text = text.strip()
    if text.lower() in MISSING_MARKERS:
        return None
    try:
        value = float(text)
    except ValueError:
        warnings.append(f"line {line}: {name}={text!r} is not a number; treated as missing")
        return None
    if not math.isfinite(value):
        return None
    return value


def parse_temperature_csv(source: bytes | str | IO, schema: CsvSchema | dict | None = None) -> ParseResult:
    """Parse a UTF-8 CSV of daily temperatures into records.

    ``source`` may be raw bytes, a text string, or an open (binary or text)
    file object. Rows whose temperature fields cannot be used are kept with
    ``t_avg=None`` and a warning naming the line. An unparseable date is fatal.
    When the schema has no average column, ``t_avg`` is the midpoint of the
    daily minimum and maximum.
    """
    if not isinstance(schema, CsvSchema):
        schema = CsvSchema.from_mapping(schema)
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8-sig")
    if not source.strip():
        raise EmptyInput("CSV input is empty")

    reader = csv.DictReader(io.StringIO(source))
    header = reader.fieldnames or []
    for required in (schema.date, schema.state):
        if required not in header:
            raise MissingColumn(f"column {required!r} not found in header {header}")
    temp_cols = {
        name: col
        for name, col in (("tavg", schema.tavg), ("tmin", schema.tmin), ("tmax", schema.tmax))
        if col is not None and col in header
    }
    if schema.tavg is not None and schema.tavg not in header and not {"tmin", "tmax"} <= set(temp_cols):
        raise MissingColumn(f"column {schema.tavg!r} not found and no tmin/tmax pair to derive it")
    if not temp_cols:
        raise MissingColumn(f"no temperature column found in header {header}")
    station_col = schema.station if schema.station in header else None

    records: list[RawTemperatureRecord] = []
    warnings: list[str] = []
    lo, hi = PHYSICAL_BOUNDS
    for line, row in enumerate(reader, start=2):
        date = _parse_date(row.get(schema.date) or "", line)
        state = (row.get(schema.state) or "").strip()
        if not state:
            warnings.append(f"line {line}: empty state; row skipped")
            continue
        values = {name: _parse_temp(row.get(col), name, line, warnings) for name, col in temp_cols.items()}
        t_min, t_max = values.get("tmin"), values.get("tmax")
        if "tavg" in values:
            t_avg = values["tavg"]
        elif t_min is not None and t_max is not None:
            t_avg = 0.5 * (t_min + t_max)
        else:
            t_avg = None
        if t_avg is not None and not lo <= t_avg <= hi:
            warnings.append(f"line {line}: tavg={t_avg} outside physical bounds; treated as missing")
            t_avg = None
        if t_avg is not None and t_min is not None and t_max is not None and not t_min <= t_avg <= t_max:
            warnings.append(f"line {line}: tavg={t_avg} outside [tmin, tmax]; treated as missing")
            t_avg = None
        if t_avg is None and "tavg" in values:
            warnings.append(f"line {line}: missing tavg")
        records.append(
            RawTemperatureRecord(
                date=date,
                state=state,
                t_avg=t_avg,
                t_min=t_min,
                t_max=t_max,
                station=(row.get(station_col) or "").strip() or None if station_col else None,
            )
        )
    if not records:
        raise EmptyInput("CSV has a header but no data rows")
    for w in warnings:
        logger.warning(w)
    return ParseResult(records, warnings)


def _fmt(value: float | None) -> str:
    return "NA" if value is None else repr(float(value))


def records_to_csv(records: Iterable[RawTemperatureRecord], schema: CsvSchema | None = None) -> str:
    """Serialize records so that :func:`parse_temperature_csv` reads them back unchanged."""
    schema = schema or CsvSchema()
    cols = [schema.date, schema.state, schema.tavg, schema.tmin, schema.tmax, schema.station]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([c for c in cols if c is not None])
    for r in records:
        row = [r.date.isoformat(), r.state, _fmt(r.t_avg), _fmt(r.t_min), _fmt(r.t_max), r.station or ""]
        writer.writerow([v for v, c in zip(row, cols) if c is not None])
    return out.getvalue()


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DailyTemperatureSeries:
    """Contiguous daily series for one state.

    ``temps`` holds NaN wherever ``missing_mask`` is set. ``imputed_mask``
    marks values filled by interpolation (those count as observed).
    """

    state: str
    dates: np.ndarray
    temps: np.ndarray
    missing_mask: np.ndarray
    imputed_mask: np.ndarray | None = None

    def __post_init__(self):
        dates = to_days(self.dates)
        temps = np.asarray(self.temps, dtype=float)
        missing = np.asarray(self.missing_mask, dtype=bool)
        imputed = np.zeros(len(dates), bool) if self.imputed_mask is None else np.asarray(self.imputed_mask, bool)
        if dates.ndim != 1 or not (len(dates) == len(temps) == len(missing) == len(imputed)):
            raise ValueError("dates, temps and masks must be 1-D and of equal length")
        if len(dates) > 1 and np.any(np.diff(dates) != np.timedelta64(1, "D")):
            raise ValueError("dates must be strictly increasing with daily spacing")
        missing = missing | ~np.isfinite(temps)
        temps = np.where(missing, np.nan, temps)
        object.__setattr__(self, "dates", _readonly(dates))
        object.__setattr__(self, "temps", _readonly(temps))
        object.__setattr__(self, "missing_mask", _readonly(missing))
        object.__setattr__(self, "imputed_mask", _readonly(imputed & ~missing))

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DailyTemperatureSeries):
            return NotImplemented
        return (
            self.state == other.state
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.temps, other.temps, equal_nan=True)
            and np.array_equal(self.missing_mask, other.missing_mask)
            and np.array_equal(self.imputed_mask, other.imputed_mask)
        )

    @property
    def observed(self) -> np.ndarray:
        return ~self.missing_mask

    @property
    def n_observed(self) -> int:
        return int(self.observed.sum())

    @property
    def start(self) -> dt.date:
        return to_pydate(self.dates[0])

    @property
    def end(self) -> dt.date:
        return to_pydate(self.dates[-1])

    def replace(self, **changes) -> "DailyTemperatureSeries":
        fields = dict(
            state=self.state,
            dates=self.dates,
            temps=self.temps,
            missing_mask=self.missing_mask,
            imputed_mask=self.imputed_mask,
        )
        fields.update(changes)
        return DailyTemperatureSeries(**fields)

    def select(self, mask: np.ndarray) -> "DailyTemperatureSeries":
        """Contiguous slice selected by a boolean mask over ``dates``."""
        idx = np.flatnonzero(mask)
        if len(idx) == 0:
            raise ValueError("selection is empty")
        sl = slice(idx[0], idx[-1] + 1)
        return DailyTemperatureSeries(
            self.state, self.dates[sl], self.temps[sl], self.missing_mask[sl], self.imputed_mask[sl]
        )

    def to_csv(self) -> str:
        """Cleaned-series CSV with columns ``date,tavg,imputed_flag``."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["date", "tavg", "imputed_flag"])
        for d, t, miss, imp in zip(self.dates, self.temps, self.missing_mask, self.imputed_mask):
            writer.writerow([str(d), "NA" if miss else repr(float(t)), int(imp)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str, state: str) -> "DailyTemperatureSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise EmptyInput(f"cleaned series for {state!r} is empty")
        dates = to_days([r["date"] for r in rows])
        temps = np.array([np.nan if r["tavg"] == "NA" else float(r["tavg"]) for r in rows])
        imputed = np.array([r["imputed_flag"] == "1" for r in rows])
        return cls(state, dates, temps, np.isnan(temps), imputed)


def aggregate_state(records: Iterable[RawTemperatureRecord]) -> dict[str, DailyTemperatureSeries]:
    """Average station readings into one daily series per state.

    Days inside a state's date range with no usable reading are missing.
    The mean uses exactly rounded summation, so the result does not depend
    on record order.
    """
    readings: dict[str, dict[dt.date, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        bucket = readings[r.state][r.date]
        if r.t_avg is not None:
            bucket.append(r.t_avg)
    if not readings:
        raise EmptyInput("no records to aggregate")

    out = {}
    for state in sorted(readings):
        by_day = readings[state]
        dates = daily_range(min(by_day), max(by_day))
        temps = np.full(len(dates), np.nan)
        for i, d in enumerate(dates.astype(dt.date)):
            values = by_day.get(d)
            if values:
                temps[i] = math.fsum(values) / len(values)
        out[state] = DailyTemperatureSeries(state, dates, temps, np.isnan(temps))
    return out


def remove_outliers(series: DailyTemperatureSeries, k: float = DEFAULT_OUTLIER_K) -> tuple[DailyTemperatureSeries, int]:
    """Mark observations further than ``k`` standard deviations from the mean as missing.

    Single pass: mean and (sample) standard deviation are computed once over
    all observed days. Returns the cleaned series and the number removed.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    obs = series.observed
    if obs.sum() < 30:
        raise TooFewPoints(f"need at least 30 observed points, got {int(obs.sum())}")
    x = series.temps[obs]
    mu = x.mean()
    sd = x.std(ddof=1)
    if sd == 0:
        return series, 0
    outlier = obs & (np.abs(series.temps - mu) > k * sd)
    n = int(outlier.sum())
    if n == 0:
        return series, 0
    return series.replace(missing_mask=series.missing_mask | outlier), n


@dataclass(frozen=True)
class Gap:
    start: dt.date
    length: int
    reason: str = ""


@dataclass
class GapReport:
    filled: list[Gap] = field(default_factory=list)
    left: list[Gap] = field(default_factory=list)

    @property
    def days_filled(self) -> int:
        return sum(g.length for g in self.filled)


def _missing_runs(missing: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[0], missing.astype(np.int8), [0]])
    edges = np.diff(padded)
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def impute_gaps(series: DailyTemperatureSeries, max_gap: int = DEFAULT_MAX_GAP) -> tuple[DailyTemperatureSeries, GapReport]:
    """Linearly interpolate interior gaps of at most ``max_gap`` days.

    Leading and trailing gaps and gaps longer than ``max_gap`` stay missing
    and are listed in the report. Observed values are never touched.
    """
    report = GapReport()
    temps = series.temps.copy()
    missing = series.missing_mask.copy()
    imputed = series.imputed_mask.copy()
    n = len(series)
    for start, stop in _missing_runs(series.missing_mask):
        gap = Gap(to_pydate(series.dates[start]), int(stop - start))
        if start == 0 or stop == n:
            report.left.append(Gap(gap.start, gap.length, "edge"))
            continue
        if gap.length > max_gap:
            report.left.append(Gap(gap.start, gap.length, "too_long"))
            continue
        left, right = temps[start - 1], temps[stop]
        frac = np.arange(1, gap.length + 1) / (gap.length + 1)
        temps[start:stop] = left + (right - left) * frac
        missing[start:stop] = False
        imputed[start:stop] = True
        report.filled.append(gap)
    if not report.filled:
        return series, report
    return series.replace(temps=temps, missing_mask=missing, imputed_mask=imputed), report


@dataclass
class CleaningReport:
    state: str
    outliers_removed: int
    gaps_filled: int
    days_imputed: int
    gaps_left: list[Gap]

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "outliers_removed": self.outliers_removed,
            "gaps_filled": self.gaps_filled,
            "days_imputed": self.days_imputed,
            "gaps_left": [
                {"start": g.start.isoformat(), "length": g.length, "reason": g.reason} for g in self.gaps_left
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def clean_series(
    series: DailyTemperatureSeries, k: float = DEFAULT_OUTLIER_K, max_gap: int = DEFAULT_MAX_GAP
) -> tuple[DailyTemperatureSeries, CleaningReport]:
    """Outlier removal followed by gap imputation, as applied after aggregation."""
    series, n_out = remove_outliers(series, k)
    series, gaps = impute_gaps(series, max_gap)
    report = CleaningReport(series.state, n_out, len(gaps.filled), gaps.days_filled, gaps.left)
    return series, report


def split_train_test(series: DailyTemperatureSeries, cutoff) -> tuple[DailyTemperatureSeries, DailyTemperatureSeries]:
    """Split at ``cutoff``: train holds dates before it, test the rest."""
    cut = to_day(cutoff)
    if not series.dates[0] < cut <= series.dates[-1]:
        raise CutoffOutOfRange(f"cutoff {cut} must lie in ({series.dates[0]}, {series.dates[-1]}]")
    before = series.dates < cut
    return series.select(before), series.select(~before)
