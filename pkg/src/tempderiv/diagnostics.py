"""Forecast error metrics and residual white-noise tests."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaincc

from .calibration import TemperatureModel, compute_residuals, evaluate_theta
from .dates import noleap_day_of_year
from .errors import EmptyOverlap, SingularDesign, TooFewPoints
from .ingest import DailyTemperatureSeries


def chi2_sf(stat: float, dof: int) -> float:
    """Upper tail of the chi-square distribution (regularized upper incomplete gamma)."""
    return float(gammaincc(dof / 2.0, stat / 2.0))


@dataclass(frozen=True)
class ForecastErrors:
    rmse: float
    rmse_pct: float
    mae: float
    n: int


def error_metrics(errors, observed_mean: float) -> ForecastErrors:
    e = np.asarray(errors, dtype=float)
    if len(e) == 0:
        raise EmptyOverlap("no overlapping observations")
    rmse = math.sqrt(math.fsum(e * e) / len(e))
    mae = math.fsum(np.abs(e)) / len(e)
    return ForecastErrors(rmse, 100.0 * rmse / observed_mean, mae, len(e))


def forecast_errors(model: TemperatureModel, observed: DailyTemperatureSeries) -> ForecastErrors:
    """RMSE, RMSE as % of the observed mean, and MAE of the seasonal mean against observations."""
    obs = observed.observed
    if not obs.any():
        raise EmptyOverlap("observed series has no data")
    dates = observed.dates[obs]
    y = observed.temps[obs]
    return error_metrics(y - evaluate_theta(model.seasonal, dates), float(y.mean()))


def ljung_box(residuals, lags: int = 20) -> tuple[float, float]:
    """Q = n(n+2) * sum_k rho_k^2 / (n-k), referred to chi-square with ``lags`` dof."""
    x = np.asarray(residuals, dtype=float)
    n = len(x)
    if lags < 1 or n <= lags:
        raise TooFewPoints(f"need more than {lags} observations, got {n}")
    xc = x - x.mean()
    denom = xc @ xc
    if denom == 0:
        raise TooFewPoints("zero-variance series has no defined autocorrelation")
    q = 0.0
    for k in range(1, lags + 1):
        rho = (xc[:-k] @ xc[k:]) / denom
        q += rho * rho / (n - k)
    q *= n * (n + 2)
    return float(q), chi2_sf(q, lags)


def arch_lm(residuals, lags: int = 10) -> tuple[float, float]:
    """Engle's LM test: regress e_t^2 on a constant and ``lags`` of its own lags; stat = n * R^2."""
    x = np.asarray(residuals, dtype=float)
    if lags < 1 or len(x) <= 2 * lags:
        raise TooFewPoints(f"need more than {2 * lags} observations, got {len(x)}")
    e2 = x * x
    y = e2[lags:]
    X = np.column_stack([np.ones(len(y))] + [e2[lags - k : len(e2) - k] for k in range(1, lags + 1)])
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    yc = y - y.mean()
    tss = yc @ yc
    if rank < X.shape[1] or tss == 0:
        raise SingularDesign("ARCH-LM regression is singular (constant squared residuals?)")
    fitted = X @ coef
    r2 = 1.0 - ((y - fitted) @ (y - fitted)) / tss
    stat = len(y) * r2
    return float(stat), chi2_sf(stat, lags)


def standardized_innovations(model: TemperatureModel, series: DailyTemperatureSeries) -> np.ndarray:
    """One-step AR(1) innovations of the seasonal residuals, scaled by the volatility curve.

    Only consecutive-day pairs contribute.
    """
    resid = compute_residuals(series, model.seasonal)
    ok = np.diff(resid.dates) == np.timedelta64(1, "D")
    prev, nxt = resid.values[:-1][ok], resid.values[1:][ok]
    sigma = model.volatility(noleap_day_of_year(resid.dates[1:][ok]).astype(float))
    innov = nxt - model.reversion.ar1_coeff * prev
    return innov / np.where(sigma > 0, sigma, 1.0)


@dataclass(frozen=True)
class ValidationReport:
    rmse: float
    rmse_pct: float
    mae: float
    ljung_box_stat: float
    ljung_box_p: float
    arch_lm_stat: float
    arch_lm_p: float
    sample_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def validate(model: TemperatureModel, series: DailyTemperatureSeries, lb_lags: int = 20, arch_lags: int = 10) -> ValidationReport:
    err = forecast_errors(model, series)
    innov = standardized_innovations(model, series)
    lb = ljung_box(innov, lb_lags)
    arch = arch_lm(innov, arch_lags)
    return ValidationReport(err.rmse, err.rmse_pct, err.mae, *lb, *arch, err.n)


def validation_json(reports: dict[str, ValidationReport]) -> str:
    return json.dumps({k: v.to_dict() for k, v in reports.items()}, indent=2, sort_keys=True) + "\n"
