"""Estimation of the seasonal mean, mean reversion, volatility curve and
reference temperatures from a training series, plus the JSON form of the
calibrated model.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np
from scipy.interpolate import CubicSpline

from .dates import month, noleap_day_of_year, to_day, to_days, to_pydate
from .errors import (
    EmptyBucket,
    NegativeAutocorr,
    NonPositiveVolatility,
    NonStationary,
    SingularDesign,
    TooFewPoints,
    TooFewYears,
)
from .ingest import DailyTemperatureSeries

OMEGA = 2.0 * math.pi / 365.25
DAYS_PER_YEAR = 365.25
WINTER_MONTHS = (12, 1, 2)
MONSOON_MONTHS = (6, 7, 8, 9)
AR1_FLOOR = 1e-4


@dataclass(frozen=True)
class SeasonalMeanParams:
    """Cubic trend plus one annual harmonic.

    ``t0`` is the time origin; the trend runs in ``s = days_since_t0 / time_scale``
    while the harmonic uses raw days.
    """

    a: float
    b: float
    c: float
    d: float
    alpha: float
    beta: float
    t0: dt.date
    phi: float = 0.0
    omega: float = OMEGA
    time_scale: float = DAYS_PER_YEAR

    def __call__(self, dates) -> np.ndarray | float:
        return evaluate_theta(self, dates)


def evaluate_theta(params: SeasonalMeanParams, dates) -> np.ndarray | float:
    """Long-run mean temperature on the given date(s)."""
    scalar = np.ndim(dates) == 0 and not isinstance(dates, (list, tuple))
    days = (to_days(np.atleast_1d(dates)) - to_day(params.t0)).astype(np.int64).astype(float)
    s = days / params.time_scale
    arg = params.omega * days + params.phi
    theta = (
        params.a
        + s * (params.b + s * (params.c + s * params.d))
        + params.alpha * np.sin(arg)
        + params.beta * np.cos(arg)
    )
    return float(theta[0]) if scalar else theta


@dataclass(frozen=True)
class SeasonalFit:
    params: SeasonalMeanParams
    rss: float
    n_obs: int
    rank: int


def _seasonal_design(days: np.ndarray, time_scale: float) -> np.ndarray:
    s = days / time_scale
    wt = OMEGA * days
    return np.column_stack([np.ones_like(s), s, s**2, s**3, np.sin(wt), np.cos(wt)])


def fit_seasonal_mean(train: DailyTemperatureSeries, t0=None, time_scale: float = DAYS_PER_YEAR) -> SeasonalFit:
    """Least-squares fit of the seasonal mean over observed days.

    With the phase pinned at zero the model is linear in its six
    coefficients, so the fit is a single ``lstsq`` solve. ``t0`` defaults to
    the midpoint of the series.
    """
    obs = train.observed
    if not obs.any():
        raise TooFewYears("series has no observed days")
    obs_dates = train.dates[obs]
    span = int((obs_dates[-1] - obs_dates[0]).astype(np.int64)) + 1
    if span < 2 * 365 or obs.sum() < 2 * 365:
        raise TooFewYears(f"need at least two years of observations, got a span of {span} days")
    if t0 is None:
        t0 = train.dates[0] + (train.dates[-1] - train.dates[0]) // 2
    t0 = to_day(t0)
    days = (obs_dates - t0).astype(np.int64).astype(float)
    y = train.temps[obs]
    X = _seasonal_design(days, time_scale)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesign(f"seasonal design has rank {rank} < {X.shape[1]}")
    resid = y - X @ coef
    params = SeasonalMeanParams(*map(float, coef), t0=to_pydate(t0), time_scale=time_scale)
    return SeasonalFit(params, float(resid @ resid), int(len(y)), int(rank))


@dataclass(frozen=True, eq=False)
class Residuals:
    """Deviations from the seasonal mean on observed days only."""

    dates: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def consecutive_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """(r_t, r_{t+1}) for pairs exactly one day apart."""
        ok = np.diff(self.dates) == np.timedelta64(1, "D")
        return self.values[:-1][ok], self.values[1:][ok]


def compute_residuals(train: DailyTemperatureSeries, params: SeasonalMeanParams) -> Residuals:
    obs = train.observed
    dates = train.dates[obs]
    return Residuals(dates, train.temps[obs] - evaluate_theta(params, dates))


@dataclass(frozen=True)
class MeanReversion:
    kappa: float
    ar1_coeff: float

    @classmethod
    def from_kappa(cls, kappa: float) -> "MeanReversion":
        return cls(kappa=float(kappa), ar1_coeff=math.exp(-kappa))


def estimate_kappa(residuals: Residuals, floor: float = AR1_FLOOR) -> MeanReversion:
    """AR(1) slope of r_{t+1} on r_t (with intercept) mapped to kappa = -ln(slope).

    Only pairs of consecutive calendar days enter the regression.
    """
    x, y = residuals.consecutive_pairs()
    if len(x) < 100:
        raise TooFewPoints(f"need at least 100 consecutive residual pairs, got {len(x)}")
    xc = x - x.mean()
    sxx = xc @ xc
    if sxx == 0:
        raise TooFewPoints("residuals have zero variance")
    slope = float(xc @ (y - y.mean()) / sxx)
    if slope >= 1:
        raise NonStationary(f"AR(1) coefficient {slope:.6f} >= 1")
    if slope <= floor:
        raise NegativeAutocorr(f"AR(1) coefficient {slope:.6f} <= {floor}; mean reversion undefined")
    return MeanReversion(kappa=-math.log(slope), ar1_coeff=slope)


@dataclass(frozen=True, eq=False)
class VolatilityCurve:
    """Periodic cubic spline through per-day-of-year standard deviations.

    Knots sit on days 1..365; the spline is closed at day 366 == day 1, so
    any real day number is reduced into [1, 366) before evaluation.
    """

    knot_days: np.ndarray
    knot_sigmas: np.ndarray

    def __post_init__(self):
        days = np.asarray(self.knot_days, dtype=float)
        sig = np.asarray(self.knot_sigmas, dtype=float)
        if days.shape != sig.shape or days.ndim != 1 or len(days) < 1:
            raise ValueError("knot_days and knot_sigmas must be equal-length 1-D arrays")
        if np.any(sig < 0) or not np.all(np.isfinite(sig)):
            raise NonPositiveVolatility("knot sigmas must be finite and non-negative")
        for name, arr in (("knot_days", days), ("knot_sigmas", sig)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(days) == 1:
            spline = None
        else:
            x = np.append(days, days[0] + 365.0)
            spline = CubicSpline(x, np.append(sig, sig[0]), bc_type="periodic")
        object.__setattr__(self, "_spline", spline)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VolatilityCurve):
            return NotImplemented
        return np.array_equal(self.knot_days, other.knot_days) and np.array_equal(self.knot_sigmas, other.knot_sigmas)

    @classmethod
    def constant(cls, sigma: float) -> "VolatilityCurve":
        return cls(np.array([1.0]), np.array([float(sigma)]))

    @property
    def coefficients(self) -> np.ndarray | None:
        """Piecewise polynomial coefficients, shape (4, n_knots)."""
        return None if self._spline is None else self._spline.c

    def __call__(self, day_of_year) -> np.ndarray:
        d = np.asarray(day_of_year, dtype=float)
        if self._spline is None:
            return np.full(d.shape, self.knot_sigmas[0])
        start = self.knot_days[0]
        return self._spline(np.mod(d - start, 365.0) + start)

    def on_dates(self, dates) -> np.ndarray:
        return self(noleap_day_of_year(dates).astype(float))

    def min_on_grid(self, step: float = 0.1) -> float:
        return float(self(np.arange(1.0, 366.0, step)).min())


def fit_volatility_spline(
    train: DailyTemperatureSeries,
    params: SeasonalMeanParams,
    source: Literal["residual", "raw"] = "residual",
) -> VolatilityCurve:
    """Standard deviation per day of year across years, joined by a periodic spline.

    ``source="residual"`` buckets deviations from the fitted seasonal mean;
    ``"raw"`` buckets the observed temperatures themselves. Feb 29 shares
    day 59 with Feb 28.
    """
    obs = train.observed
    dates = train.dates[obs]
    if source == "residual":
        values = train.temps[obs] - evaluate_theta(params, dates)
    elif source == "raw":
        values = train.temps[obs]
    else:
        raise ValueError(f"unknown volatility source {source!r}")
    doy = noleap_day_of_year(dates)
    counts = np.bincount(doy, minlength=366)[1:]
    if counts.min() < 2:
        bad = int(np.argmin(counts)) + 1
        raise EmptyBucket(f"day-of-year {bad} has {counts.min()} observations; need at least 2")
    if counts.mean() < 10:
        raise TooFewPoints(f"need about 10 observations per day of year, got {counts.mean():.1f}")
    sums = np.bincount(doy, weights=values, minlength=366)[1:]
    means = sums / counts
    dev = values - means[doy - 1]
    sigmas = np.sqrt(np.bincount(doy, weights=dev * dev, minlength=366)[1:] / (counts - 1))
    if np.any(sigmas <= 0):
        raise NonPositiveVolatility("zero sample standard deviation on some day of year")
    curve = VolatilityCurve(np.arange(1.0, 366.0), sigmas)
    if curve.min_on_grid() <= 0:
        raise NonPositiveVolatility("spline dips to or below zero between knots")
    return curve


def compute_reference_temperature(
    train: DailyTemperatureSeries, months: Iterable[int], side: Literal["below", "above"]
) -> float:
    """Mean minus (``below``) or plus (``above``) one standard deviation over the given months."""
    months = set(months)
    mask = train.observed & np.isin(month(train.dates), list(months))
    if mask.sum() < 30:
        raise TooFewPoints(f"need at least 30 observations in months {sorted(months)}, got {int(mask.sum())}")
    x = train.temps[mask]
    mu, sd = float(x.mean()), float(x.std(ddof=1))
    if side == "below":
        return mu - sd
    if side == "above":
        return mu + sd
    raise ValueError(f"side must be 'below' or 'above', got {side!r}")


@dataclass(frozen=True)
class JumpParams:
    p_h: float
    p_c: float
    mu_h: float
    sigma_h: float
    mu_c: float
    sigma_c: float
    duration: int

    def __post_init__(self):
        if not (0 <= self.p_h <= 1 and 0 <= self.p_c <= 1):
            raise ValueError("shock probabilities must lie in [0, 1]")
        if self.duration < 1:
            raise ValueError("shock duration must be at least one day")

    @property
    def lambda_j(self) -> float:
        return self.p_h + self.p_c

    @classmethod
    def off(cls) -> "JumpParams":
        return cls(0.0, 0.0, 5.0, 1.0, -5.0, 1.0, 5)


def default_jump_params(sigma: float = 1.0) -> JumpParams:
    """0.5% daily chance each of a +5 degC heatwave or -5 degC coldwave lasting 5 days."""
    return JumpParams(p_h=0.005, p_c=0.005, mu_h=5.0, sigma_h=sigma, mu_c=-5.0, sigma_c=sigma, duration=5)


@dataclass(frozen=True)
class TemperatureModel:
    state: str
    seasonal: SeasonalMeanParams
    reversion: MeanReversion
    volatility: VolatilityCurve
    jumps: JumpParams
    risk_aversion_lambda: float
    t_ref_hdd: float
    t_ref_cdd: float
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.t_ref_hdd < self.t_ref_cdd:
            raise ValueError(f"t_ref_hdd ({self.t_ref_hdd}) must be below t_ref_cdd ({self.t_ref_cdd})")
        if self.reversion.kappa <= 0:
            raise ValueError("kappa must be positive")

    def replace(self, **changes) -> "TemperatureModel":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        s = self.seasonal
        j = self.jumps
        return {
            "state": self.state,
            "seasonal": {
                "a": s.a, "b": s.b, "c": s.c, "d": s.d, "alpha": s.alpha, "beta": s.beta,
                "phi": s.phi, "omega": s.omega, "t0": s.t0.isoformat(), "time_scale": s.time_scale,
            },
            "reversion": {"kappa": self.reversion.kappa, "ar1_coeff": self.reversion.ar1_coeff},
            "volatility": {
                "knot_days": self.volatility.knot_days.tolist(),
                "knot_sigmas": self.volatility.knot_sigmas.tolist(),
            },
            "jumps": {
                "p_h": j.p_h, "p_c": j.p_c, "mu_h": j.mu_h, "sigma_h": j.sigma_h,
                "mu_c": j.mu_c, "sigma_c": j.sigma_c, "duration": j.duration, "lambda_j": j.lambda_j,
            },
            "risk_aversion_lambda": self.risk_aversion_lambda,
            "t_ref_hdd": self.t_ref_hdd,
            "t_ref_cdd": self.t_ref_cdd,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "TemperatureModel":
        s = dict(doc["seasonal"])
        s["t0"] = dt.date.fromisoformat(s["t0"])
        j = {k: v for k, v in doc["jumps"].items() if k != "lambda_j"}
        return cls(
            state=doc["state"],
            seasonal=SeasonalMeanParams(**s),
            reversion=MeanReversion(**doc["reversion"]),
            volatility=VolatilityCurve(np.array(doc["volatility"]["knot_days"]), np.array(doc["volatility"]["knot_sigmas"])),
            jumps=JumpParams(**j),
            risk_aversion_lambda=doc["risk_aversion_lambda"],
            t_ref_hdd=doc["t_ref_hdd"],
            t_ref_cdd=doc["t_ref_cdd"],
            metadata=doc.get("metadata", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "TemperatureModel":
        return cls.from_dict(json.loads(text))


def calibrate(
    train: DailyTemperatureSeries,
    *,
    winter_months: Iterable[int] = WINTER_MONTHS,
    monsoon_months: Iterable[int] = MONSOON_MONTHS,
    volatility_source: Literal["residual", "raw"] = "residual",
    risk_aversion_lambda: float = 0.0,
    jumps: JumpParams | None = None,
) -> TemperatureModel:
    """Run every estimator on ``train`` and assemble a :class:`TemperatureModel`."""
    fit = fit_seasonal_mean(train)
    resid = compute_residuals(train, fit.params)
    reversion = estimate_kappa(resid)
    vol = fit_volatility_spline(train, fit.params, source=volatility_source)
    metadata = {
        "data_start": str(train.dates[0]),
        "data_end": str(train.dates[-1]),
        "n_observed": train.n_observed,
        "seasonal_rss": fit.rss,
        "seasonal_rank": fit.rank,
        "volatility_source": volatility_source,
        "winter_months": sorted(winter_months),
        "monsoon_months": sorted(monsoon_months),
    }
    return TemperatureModel(
        state=train.state,
        seasonal=fit.params,
        reversion=reversion,
        volatility=vol,
        jumps=jumps if jumps is not None else default_jump_params(),
        risk_aversion_lambda=float(risk_aversion_lambda),
        t_ref_hdd=compute_reference_temperature(train, winter_months, "below"),
        t_ref_cdd=compute_reference_temperature(train, monsoon_months, "above"),
        metadata=metadata,
    )
