import datetime as dt
import math

import numpy as np
import pytest

from tempderiv.calibration import JumpParams, default_jump_params
from tempderiv.errors import ProbOverflow
from tempderiv.simulation import (
    SimulationConfig,
    deterministic_path,
    event_increments,
    path_rng,
    sample_jump_schedule,
    simulate_paths,
)

from conftest import ORIGIN, flat_model


def cfg(**kw):
    base = dict(start_date=ORIGIN, horizon=60, n_paths=200, seed=3)
    base.update(kw)
    return SimulationConfig(**base)


def test_fixed_point():
    paths = simulate_paths(flat_model(theta=25.0, sigma=0.0), cfg())
    assert np.all(paths.temps == 25.0)


def test_same_seed_identical():
    m = flat_model(jumps=default_jump_params())
    a = simulate_paths(m, cfg())
    b = simulate_paths(m, cfg())
    assert np.array_equal(a.temps, b.temps)
    assert a.model_fingerprint == b.model_fingerprint


def test_different_seed_differs():
    m = flat_model()
    assert not np.array_equal(simulate_paths(m, cfg(seed=1)).temps, simulate_paths(m, cfg(seed=2)).temps)


def test_path_prefix_stable():
    # path p depends only on (seed, p), not on how many paths are drawn
    m = flat_model(jumps=default_jump_params())
    small = simulate_paths(m, cfg(n_paths=5))
    big = simulate_paths(m, cfg(n_paths=5000))
    assert np.array_equal(small.temps, big.temps[:5])


def test_serial_parallel_identical():
    m = flat_model(jumps=default_jump_params())
    c = cfg(n_paths=9000, horizon=30)
    assert np.array_equal(simulate_paths(m, c, workers=1).temps, simulate_paths(m, c, workers=3).temps)


@pytest.mark.slow
def test_ou_moments_day_200():
    m = flat_model(theta=25.0, sigma=2.0, kappa=0.2)
    paths = simulate_paths(m, cfg(horizon=201, n_paths=100_000, seed=11))
    x = paths.temps[:, 200]
    se = x.std(ddof=1) / math.sqrt(len(x))
    assert abs(x.mean() - 25.0) < 3 * se
    target = 4.0 * -math.expm1(-2 * 0.2 * 200) / (2 * 0.2)
    assert abs(x.var(ddof=1) / target - 1) < 0.05


def test_exact_scheme_matches_closed_form_moments():
    # started away from theta, the exact transition reproduces the OU mean and variance at every day
    m = flat_model(theta=25.0, sigma=2.0, kappa=0.2)
    paths = simulate_paths(m, cfg(horizon=11, n_paths=50_000, seed=5, initial_temp=35.0))
    for k in (1, 5, 10):
        x = paths.temps[:, k]
        mean = 25.0 + 10.0 * math.exp(-0.2 * k)
        var = 4.0 * -math.expm1(-0.4 * k) / 0.4
        assert abs(x.mean() - mean) < 4 * math.sqrt(var / len(x))
        assert abs(x.var(ddof=1) / var - 1) < 0.03


def test_euler_scheme_stationary_variance():
    # Euler's AR(1) coefficient 1-kappa gives variance sigma^2 / (2 kappa - kappa^2)
    m = flat_model(theta=25.0, sigma=2.0, kappa=0.2)
    x = simulate_paths(m, cfg(horizon=150, n_paths=40_000, seed=6, scheme="euler")).temps[:, -1]
    assert abs(x.var(ddof=1) / (4.0 / (0.4 - 0.04)) - 1) < 0.03


def test_path_independence():
    m = flat_model(jumps=default_jump_params())
    t = simulate_paths(m, cfg(n_paths=10_000, horizon=40, seed=21)).temps
    for day in (1, 20, 39):
        rho = np.corrcoef(t[:-1, day], t[1:, day])[0, 1]
        assert abs(rho) < 0.02


def test_lambda_monotone():
    c = cfg(n_paths=500, horizon=100)
    means = [simulate_paths(flat_model(lam=lam), c).temps[:, -1].mean() for lam in (0.0, 0.05, 0.1)]
    assert means[0] > means[1] > means[2]


def test_lambda_shift_is_deterministic():
    # with shared draws the lambda shift is path-independent: -lam*sigma^2/kappa * (1 - decay^k)
    c = cfg(n_paths=50, horizon=30)
    a = simulate_paths(flat_model(lam=0.0), c).temps
    b = simulate_paths(flat_model(lam=0.1), c).temps
    k = np.arange(30)
    shift = -0.1 * 4.0 / 0.2 * (1 - math.exp(-0.2) ** k)
    assert np.allclose(b - a, shift, atol=1e-10)


@pytest.mark.parametrize("scheme", ["exact", "euler"])
def test_zero_vol_equals_recursion(scheme):
    m = flat_model(sigma=0.0, lam=0.3)
    c = cfg(n_paths=4, initial_temp=31.0, scheme=scheme)
    det = deterministic_path(m, c)
    paths = simulate_paths(m, c)
    assert np.array_equal(paths.temps, np.tile(det, (4, 1)))


def test_zero_vol_euler_recursion_by_hand():
    m = flat_model(theta=25.0, sigma=0.0, kappa=0.2)
    out = simulate_paths(m, cfg(n_paths=1, horizon=4, initial_temp=30.0, scheme="euler")).temps[0]
    expected = [30.0]
    for _ in range(3):
        expected.append(expected[-1] + 0.2 * (25.0 - expected[-1]))
    assert np.allclose(out, expected, rtol=0, atol=1e-12)


def test_prob_overflow():
    m = flat_model(jumps=JumpParams(0.4, 0.4, 5, 1, -5, 1, 5))
    with pytest.raises(ProbOverflow):
        simulate_paths(m, cfg(jump_prob_scale=2.0))


class TestJumpSchedule:
    def test_no_jumps(self):
        inc = sample_jump_schedule(path_rng(0, 0), JumpParams.off(), 1000)
        assert np.all(inc == 0)

    def test_single_event(self):
        inc = event_increments([10], [5.0], duration=5, horizon=30)
        level = np.cumsum(inc)
        assert np.all(level[10:15] == 5.0)
        assert np.all(level[:10] == 0) and np.all(level[15:] == 0)

    def test_event_past_horizon(self):
        level = np.cumsum(event_increments([8], [2.0], duration=5, horizon=10))
        assert list(level) == [0] * 8 + [2.0, 2.0]

    def test_renewal_rate(self):
        # with a fixed +5 magnitude every active day sits at level 5, so days/5 counts events
        j = JumpParams(0.005, 0.0, 5.0, 0.0, -5.0, 0.0, 5)
        level = np.cumsum(sample_jump_schedule(path_rng(99, 0), j, 10_000))
        count = math.ceil(np.count_nonzero(level) / 5)
        expected = 10_000 * 0.005 / (1 + 0.005 * 5)
        assert abs(count - expected) < 3 * math.sqrt(expected)

    def test_renewal_rate_many_paths(self):
        j = JumpParams(0.005, 0.005, 5.0, 0.0, -5.0, 0.0, 5)
        active = sum(np.count_nonzero(np.cumsum(sample_jump_schedule(path_rng(1, p), j, 2000))) for p in range(200))
        expected = 200 * 2000 * 0.01 / (1 + 0.01 * 5)
        assert abs(active / 5 - expected) < 3 * math.sqrt(expected)

    def test_no_overlap(self):
        j = JumpParams(0.2, 0.2, 5.0, 0.0, -5.0, 0.0, 5)
        level = np.cumsum(sample_jump_schedule(path_rng(4, 0), j, 5000))
        assert set(np.round(np.unique(level), 12)) <= {-5.0, 0.0, 5.0}

    def test_fixed_draw_count(self):
        # scenario legs sharing a seed consume the same stream regardless of probabilities
        for scale in (0.0, 1.0, 2.0):
            rng = path_rng(5, 0)
            sample_jump_schedule(rng, default_jump_params(), 300, scale)
            assert rng.random() == pytest.approx(_after_draws(300))

    def test_overflow(self):
        with pytest.raises(ProbOverflow):
            sample_jump_schedule(path_rng(0, 0), JumpParams(0.6, 0.6, 5, 1, -5, 1, 5), 10)


def _after_draws(n):
    rng = path_rng(5, 0)
    rng.random(n)
    rng.standard_normal(n)
    return rng.random()


def test_path_csv(flat):
    paths = simulate_paths(flat(), cfg(n_paths=2, horizon=3))
    lines = paths.to_csv().splitlines()
    assert lines[0] == "path_id,date,temp"
    assert len(lines) == 7
    assert lines[1].startswith("0,2000-01-01,")
    assert float(lines[-1].split(",")[2]) == paths.temps[1, 2]


def test_fingerprint_tracks_config(flat):
    m = flat()
    assert simulate_paths(m, cfg(seed=1)).model_fingerprint != simulate_paths(m, cfg(seed=2)).model_fingerprint


def test_config_validation():
    for bad in (dict(n_paths=0), dict(horizon=0), dict(vol_scale=0), dict(jump_prob_scale=-1), dict(seed=-1), dict(scheme="rk4")):
        with pytest.raises(ValueError):
            cfg(**bad)


def test_paths_read_only(flat):
    paths = simulate_paths(flat(), cfg(n_paths=2))
    with pytest.raises(ValueError):
        paths.temps[0, 0] = 1.0


def test_seasonal_model_runs(gujarat_model):
    c = SimulationConfig(dt.date(2024, 4, 1), 153, n_paths=100, seed=1)
    paths = simulate_paths(gujarat_model, c)
    assert paths.temps.shape == (100, 153)
    assert np.all(np.isfinite(paths.temps))
