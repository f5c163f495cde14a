import datetime as dt

import numpy as np
import pytest

from tempderiv.calibration import (
    JumpParams,
    MeanReversion,
    SeasonalMeanParams,
    TemperatureModel,
    VolatilityCurve,
    calibrate,
)
from tempderiv.ingest import DailyTemperatureSeries, aggregate_state, clean_series, split_train_test
from tempderiv.synth import synthetic_records

ORIGIN = dt.date(2000, 1, 1)


def flat_model(
    theta=25.0,
    sigma=2.0,
    kappa=0.2,
    lam=0.0,
    jumps=None,
    t_ref_hdd=20.0,
    t_ref_cdd=30.0,
) -> TemperatureModel:
    """Constant mean, constant volatility; jumps off unless given."""
    return TemperatureModel(
        state="Flat",
        seasonal=SeasonalMeanParams(theta, 0.0, 0.0, 0.0, 0.0, 0.0, t0=ORIGIN),
        reversion=MeanReversion.from_kappa(kappa),
        volatility=VolatilityCurve.constant(sigma),
        jumps=jumps if jumps is not None else JumpParams.off(),
        risk_aversion_lambda=lam,
        t_ref_hdd=t_ref_hdd,
        t_ref_cdd=t_ref_cdd,
    )


def make_series(temps, start=ORIGIN, state="S") -> DailyTemperatureSeries:
    temps = np.asarray(temps, dtype=float)
    dates = np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + len(temps))
    return DailyTemperatureSeries(state, dates, temps, np.isnan(temps))


@pytest.fixture
def flat():
    return flat_model


@pytest.fixture(scope="session")
def synthetic_clean():
    """Cleaned synthetic state series (1951-2023) keyed by state."""
    series = aggregate_state(synthetic_records(seed=7))
    return {s: clean_series(x)[0] for s, x in series.items()}


@pytest.fixture(scope="session")
def gujarat_model(synthetic_clean):
    train, _ = split_train_test(synthetic_clean["Gujarat"], "2021-01-01")
    return calibrate(train)
