import math

import numpy as np
import pytest
from statsmodels.stats.diagnostic import acorr_ljungbox, het_arch

from tempderiv.calibration import evaluate_theta
from tempderiv.diagnostics import (
    arch_lm,
    chi2_sf,
    error_metrics,
    forecast_errors,
    ljung_box,
    standardized_innovations,
    validate,
    validation_json,
)
from tempderiv.errors import EmptyOverlap, SingularDesign, TooFewPoints
from tempderiv.ingest import split_train_test

from conftest import make_series


def test_chi2_sf_known_values():
    assert chi2_sf(3.841458820694124, 1) == pytest.approx(0.05, abs=1e-10)
    assert chi2_sf(31.410432844230918, 20) == pytest.approx(0.05, abs=1e-10)
    assert chi2_sf(0.0, 5) == 1.0


def test_error_metrics_hand():
    e = error_metrics([0, 3, -3, 0], observed_mean=10.0)
    assert e.mae == 1.5
    assert e.rmse == pytest.approx(math.sqrt(4.5))
    assert e.rmse_pct == pytest.approx(100 * math.sqrt(4.5) / 10)


def test_error_metrics_empty():
    with pytest.raises(EmptyOverlap):
        error_metrics([], 1.0)


def test_rmse_ge_mae():
    rng = np.random.default_rng(0)
    for _ in range(100):
        e = error_metrics(rng.standard_t(3, rng.integers(1, 50)), 1.0)
        assert e.rmse >= e.mae >= 0


def theta_series(model, start="2021-01-01", n=365, offset=0.0):
    dates = np.arange(np.datetime64(start), np.datetime64(start) + n)
    return make_series(evaluate_theta(model.seasonal, dates) + offset, start=dates[0].item())


def test_forecast_exact(gujarat_model):
    e = forecast_errors(gujarat_model, theta_series(gujarat_model))
    assert e.rmse < 1e-12 and e.mae < 1e-12


def test_forecast_offset(gujarat_model):
    e = forecast_errors(gujarat_model, theta_series(gujarat_model, offset=2.0))
    assert e.rmse == pytest.approx(2.0) and e.mae == pytest.approx(2.0)


def test_forecast_no_data(gujarat_model):
    s = make_series(np.full(10, np.nan))
    with pytest.raises(EmptyOverlap):
        forecast_errors(gujarat_model, s)


class TestLjungBox:
    def test_matches_statsmodels(self):
        x = np.random.default_rng(1).standard_normal(2000)
        q, p = ljung_box(x, 20)
        ref = acorr_ljungbox(x, lags=[20])
        assert q == pytest.approx(float(ref["lb_stat"].iloc[0]), rel=1e-10)
        assert p == pytest.approx(float(ref["lb_pvalue"].iloc[0]), abs=1e-10)

    def test_alternating(self):
        _, p = ljung_box(np.tile([1.0, -1.0], 100), 20)
        assert p < 0.001

    def test_constant(self):
        with pytest.raises(TooFewPoints):
            ljung_box(np.ones(100))

    def test_short(self):
        with pytest.raises(TooFewPoints):
            ljung_box(np.arange(20.0), 20)

    @pytest.mark.slow
    def test_uniform_p_values(self):
        rng = np.random.default_rng(7)
        p = np.sort([ljung_box(rng.standard_normal(5000))[1] for _ in range(1000)])
        grid = np.arange(1, 1001) / 1000
        ks = max(np.max(grid - p), np.max(p - (grid - 1 / 1000)))
        assert ks < 0.05


class TestArchLM:
    def test_matches_statsmodels(self):
        x = np.random.default_rng(2).standard_normal(2000)
        stat, p = arch_lm(x, 10)
        ref_stat, ref_p, _, _ = het_arch(x, nlags=10)
        assert stat == pytest.approx(ref_stat, rel=1e-8)
        assert p == pytest.approx(ref_p, abs=1e-10)

    def test_arch_series(self):
        rng = np.random.default_rng(3)
        n = 3000
        e = np.zeros(n)
        for t in range(1, n):
            e[t] = math.sqrt(0.2 + 0.7 * e[t - 1] ** 2) * rng.standard_normal()
        assert arch_lm(e)[1] < 0.01

    def test_constant(self):
        with pytest.raises(SingularDesign):
            arch_lm(np.ones(200))

    def test_short(self):
        with pytest.raises(TooFewPoints):
            arch_lm(np.arange(20.0), 10)


def test_innovations_white(gujarat_model, synthetic_clean):
    train, _ = split_train_test(synthetic_clean["Gujarat"], "2021-01-01")
    z = standardized_innovations(gujarat_model, train)
    # sigma(t) is the stationary residual sd, so one-step innovations have sd sqrt(1 - phi^2) in its units
    phi = gujarat_model.reversion.ar1_coeff
    assert abs(z.std() / math.sqrt(1 - phi**2) - 1) < 0.05
    assert abs(np.corrcoef(z[:-1], z[1:])[0, 1]) < 0.05


def test_validate_report(gujarat_model, synthetic_clean):
    _, test = split_train_test(synthetic_clean["Gujarat"], "2021-01-01")
    r = validate(gujarat_model, test)
    assert r.rmse >= r.mae > 0
    assert 0 <= r.ljung_box_p <= 1 and 0 <= r.arch_lm_p <= 1
    assert r.sample_count == test.n_observed
    assert '"rmse"' in validation_json({"Gujarat": r})
