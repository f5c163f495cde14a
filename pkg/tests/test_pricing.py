import datetime as dt
import json
import math

import numpy as np
import pytest

from tempderiv.errors import EmptyPathSet, WindowOutOfRange
from tempderiv.indices import AccrualWindow
from tempderiv.pricing import (
    ContractKind,
    ContractSpec,
    contract_index,
    default_threshold,
    discount_factor,
    price_contract,
    price_from_index,
    put_call_decomposition,
    results_table_csv,
)
from tempderiv.simulation import PathSet, SimulationConfig, simulate_paths

from conftest import ORIGIN, flat_model

WINDOW = AccrualWindow(ORIGIN, ORIGIN + dt.timedelta(days=9))


def pathset(temps, start=ORIGIN):
    temps = np.atleast_2d(np.asarray(temps, dtype=float))
    dates = np.arange(np.datetime64(start), np.datetime64(start) + temps.shape[1])
    return PathSet(dates, temps, 0, "test")


def contract(kind, strike, t_ref=20.0, tick=1.0, rate=0.0, window=WINDOW, maturity=None, **kw):
    return ContractSpec(kind, strike, window, maturity or window.end, rate, t_ref, tick, **kw)


def test_deterministic_hdd():
    # 10 days at 10 degrees below the reference: HDD = 100 on every path
    ps = pathset(np.full((3, 10), 10.0))
    assert price_contract(ps, contract("hdd_call", 90)).price == 10.0
    assert price_contract(ps, contract("hdd_put", 90)).price == 0.0
    assert price_contract(ps, contract("hdd_call", 100)).price == 0.0
    assert price_contract(ps, contract("hdd_put", 100)).price == 0.0


def test_two_path_event_call():
    hot = np.array([1.0] * 5 + [0.0])
    row_a = np.concatenate([np.tile(hot, 2), np.zeros(24)])
    row_b = np.tile(hot, 6)
    ps = pathset([row_a, row_b])
    w = AccrualWindow(ORIGIN, ORIGIN + dt.timedelta(days=35))
    c = contract("heatwave_call", 3, t_ref=0.5, tick=1000.0, window=w)
    assert list(contract_index(ps, c)) == [2.0, 6.0]
    assert price_contract(ps, c).price == 1500.0


def test_coldwave_put():
    row = np.concatenate([np.full(5, -1.0), np.zeros(5)])
    ps = pathset([row, np.zeros(10)])
    res = price_contract(ps, contract("coldwave_put", 1, t_ref=-0.5, tick=10.0))
    assert res.price == 5.0
    assert res.mean_index == 0.5


def test_discounting():
    df = discount_factor(0.065, dt.date(2025, 1, 1), dt.date(2024, 1, 1))
    assert df == pytest.approx(math.exp(-0.065 * 366 / 365.25), rel=1e-15)
    ps = pathset(np.full((2, 10), 10.0))
    c = contract("hdd_call", 90, rate=0.05, maturity=ORIGIN + dt.timedelta(days=100))
    res = price_contract(ps, c)
    assert res.discount_factor == pytest.approx(math.exp(-0.05 * 100 / 365.25))
    assert res.price == pytest.approx(10.0 * res.discount_factor)


def test_zero_rate_is_mean_payoff():
    rng = np.random.default_rng(0)
    ps = pathset(rng.normal(20, 3, (500, 10)))
    res = price_contract(ps, contract("cdd_call", 5, t_ref=20))
    assert res.price == res.mean_payoff


def test_std_error():
    ps = pathset(np.vstack([np.full(10, 10.0), np.full(10, 20.0)]))
    res = price_contract(ps, contract("hdd_call", 0))
    # payoffs 100 and 0
    assert res.std_error == pytest.approx(np.std([100.0, 0.0], ddof=1) / math.sqrt(2))
    assert res.payoff_quantiles[1] == 50.0


def test_valuation_after_window():
    ps = pathset(np.zeros((1, 10)))
    with pytest.raises(WindowOutOfRange):
        price_contract(ps, contract("hdd_call", 0), valuation_date=ORIGIN + dt.timedelta(days=1))


def test_window_outside_paths():
    ps = pathset(np.zeros((1, 5)))
    with pytest.raises(WindowOutOfRange):
        price_contract(ps, contract("hdd_call", 0))


def test_empty():
    with pytest.raises(EmptyPathSet):
        price_from_index(np.array([]), contract("hdd_call", 0), ORIGIN)


def test_contract_validation():
    with pytest.raises(ValueError):
        contract("hdd_call", -1)
    with pytest.raises(ValueError):
        contract("hdd_call", 1, tick=0)
    with pytest.raises(ValueError):
        contract("hdd_call", 1, rate=-0.01)
    with pytest.raises(ValueError):
        contract("hdd_call", 1, maturity=ORIGIN)


def random_paths(n=1000, seed=0):
    m = flat_model(theta=20.0, sigma=3.0)
    return simulate_paths(m, SimulationConfig(ORIGIN, 10, n_paths=n, seed=seed))


def test_parity():
    ps = random_paths()
    for kind in ("hdd_call", "cdd_put"):
        for k in (0.0, 5.0, 15.0, 40.0):
            chk = put_call_decomposition(ps, contract(kind, k, tick=7.0, rate=0.04, maturity=ORIGIN + dt.timedelta(days=200)))
            assert abs(chk.residual) < 1e-9 * 7.0 * max(chk.call.mean_index, 1.0)


def test_parity_deterministic():
    ps = pathset(np.full((4, 10), 10.0))
    chk = put_call_decomposition(ps, contract("hdd_put", 90))
    assert chk.call.price - chk.put.price == 10.0


def test_parity_rejects_events():
    with pytest.raises(ValueError):
        put_call_decomposition(pathset(np.zeros((1, 10))), contract("heatwave_call", 1))


def test_reordered_sum():
    ps = random_paths()
    perm = np.random.default_rng(1).permutation(ps.n_paths)
    shuffled = PathSet(ps.dates, ps.temps[perm], 0, "x")
    c = contract("hdd_call", 10.0)
    a, b = price_contract(ps, c), price_contract(shuffled, c)
    assert a.price == b.price  # exactly rounded sums do not depend on order
    chk = put_call_decomposition(shuffled, c)
    assert abs(chk.residual) < 1e-9 * chk.call.mean_index


def test_strike_monotone():
    ps = random_paths()
    strikes = np.linspace(0, 40, 9)
    calls = [price_contract(ps, contract("hdd_call", k)).price for k in strikes]
    puts = [price_contract(ps, contract("hdd_put", k)).price for k in strikes]
    assert all(np.diff(calls) <= 0) and all(np.diff(puts) >= 0)
    assert calls[1] > calls[3] and puts[3] > puts[1]


def test_tick_linear():
    ps = random_paths()
    base = price_contract(ps, contract("cdd_call", 5.0, rate=0.05, maturity=ORIGIN + dt.timedelta(days=90)))
    scaled = price_contract(ps, contract("cdd_call", 5.0, tick=250.0, rate=0.05, maturity=ORIGIN + dt.timedelta(days=90)))
    assert scaled.price == pytest.approx(250.0 * base.price, rel=1e-12)


@pytest.mark.slow
def test_error_convergence():
    c = contract("hdd_call", 5.0)
    ses = [price_contract(random_paths(n, seed=4), c).std_error for n in (1000, 4000, 16000)]
    for a, b in zip(ses, ses[1:]):
        assert abs(a / b / 2.0 - 1) < 0.2


def test_default_threshold(gujarat_model):
    m = gujarat_model
    assert default_threshold("hdd_put", m) == m.t_ref_hdd
    assert default_threshold("coldwave_put", m) == m.t_ref_hdd
    assert default_threshold("cdd_call", m) == m.t_ref_cdd
    assert default_threshold("heatwave_call", m) == m.t_ref_cdd


def test_from_dict(gujarat_model):
    doc = dict(kind="cdd_call", strike=70, window_start="2024-04-01", window_end="2024-08-31", maturity="2024-08-31", rate=0.065)
    c = ContractSpec.from_dict(doc, gujarat_model)
    assert c.t_ref == gujarat_model.t_ref_cdd
    assert c.state == gujarat_model.state
    assert ContractSpec.from_dict({**doc, "threshold": 18.0}).t_ref == 18.0
    assert ContractSpec.from_dict(c.to_dict()) == c


def test_kind_helpers():
    assert ContractKind.HDD_CALL.counterpart is ContractKind.HDD_PUT
    assert not ContractKind.COLDWAVE_PUT.is_call
    with pytest.raises(ValueError):
        ContractKind.HEATWAVE_CALL.counterpart


def test_results_table():
    ps = pathset(np.full((2, 10), 10.0))
    rows = [("A", price_contract(ps, contract("hdd_call", 90))), ("B", price_contract(ps, contract("hdd_put", 110)))]
    lines = results_table_csv(rows).splitlines()
    assert lines == ["state,hdd_call,hdd_put", "A,10.0,", "B,,10.0"]


def test_result_json():
    ps = pathset(np.full((2, 10), 10.0))
    doc = json.loads(price_contract(ps, contract("hdd_call", 90)).to_json())
    assert doc["price"] == 10.0
    assert doc["contract"]["kind"] == "hdd_call"
    assert set(doc["payoff_quantiles"]) == {"p05", "p50", "p95"}
