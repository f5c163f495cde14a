"""Scenario sweeps, hedge sizing and portfolio reports built on the pricer.

Sweeps reuse one seed for every leg (common random numbers) unless
``common_random_numbers=False``, in which case leg ``i`` uses ``seed + i``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .calibration import TemperatureModel
from .dates import to_pydate
from .errors import ZeroPrice
from .pricing import ContractSpec, PricingResult, contract_index, payoff, price_contract, price_from_index
from .simulation import PathSet, SimulationConfig, simulate_paths

DEFAULT_N_PATHS = 1000


def simulation_for(contract: ContractSpec, valuation_date=None, **overrides) -> SimulationConfig:
    """Config covering the valuation date through the end of the contract window."""
    start = to_pydate(valuation_date) if valuation_date is not None else contract.window.start
    horizon = (contract.window.end - start).days + 1
    overrides.setdefault("n_paths", DEFAULT_N_PATHS)
    return SimulationConfig(start_date=start, horizon=horizon, **overrides)


def price_under_model(
    model: TemperatureModel,
    contract: ContractSpec,
    seed: int,
    n_paths: int = DEFAULT_N_PATHS,
    valuation_date=None,
    workers: int = 1,
    **sim_overrides,
) -> tuple[PricingResult, PathSet]:
    config = simulation_for(contract, valuation_date, n_paths=n_paths, seed=seed, **sim_overrides)
    paths = simulate_paths(model, config, workers=workers)
    return price_contract(paths, contract, config.start_date), paths


@dataclass(frozen=True)
class SensitivityRow:
    parameter: float
    price: float
    std_error: float
    pct_change: float | None


def _leg_seed(seed: int, i: int, common: bool) -> int:
    return seed if common else seed + i


def volatility_sensitivity(
    model: TemperatureModel,
    contract: ContractSpec,
    scales,
    seed: int,
    n_paths: int = DEFAULT_N_PATHS,
    common_random_numbers: bool = True,
    **kwargs,
) -> list[SensitivityRow]:
    """Reprice with the volatility curve multiplied by each scale.

    ``pct_change`` is relative to the scale-1.0 leg.
    """
    scales = [float(s) for s in scales]
    if 1.0 not in scales:
        raise ValueError("scales must include 1.0")
    prices = [
        price_under_model(model, contract, _leg_seed(seed, i, common_random_numbers), n_paths, vol_scale=s, **kwargs)[0]
        for i, s in enumerate(scales)
    ]
    base = prices[scales.index(1.0)].price
    return [
        SensitivityRow(s, p.price, p.std_error, 100.0 * (p.price - base) / base if base != 0 else (0.0 if p.price == base else None))
        for s, p in zip(scales, prices)
    ]


def risk_aversion_sensitivity(
    model: TemperatureModel,
    contract: ContractSpec,
    lambdas,
    seed: int,
    n_paths: int = DEFAULT_N_PATHS,
    common_random_numbers: bool = True,
    **kwargs,
) -> list[SensitivityRow]:
    lambdas = [float(x) for x in lambdas]
    if not lambdas:
        raise ValueError("lambdas must be non-empty")
    rows = []
    base = None
    for i, lam in enumerate(lambdas):
        res, _ = price_under_model(
            model.replace(risk_aversion_lambda=lam), contract, _leg_seed(seed, i, common_random_numbers), n_paths, **kwargs
        )
        base = res.price if base is None else base
        pct = 100.0 * (res.price - base) / base if base else None
        rows.append(SensitivityRow(lam, res.price, res.std_error, pct))
    return rows


@dataclass(frozen=True)
class ShockScenario:
    base: PricingResult
    scenario: PricingResult
    ratio: float
    ratio_std_error: float


def shock_probability_scenario(
    model: TemperatureModel,
    contract: ContractSpec,
    multiplier: float,
    seed: int,
    n_paths: int = DEFAULT_N_PATHS,
    **kwargs,
) -> ShockScenario:
    """Base price versus the price with shock probabilities scaled by ``multiplier``.

    Both legs share the seed. The ratio's standard error comes from the
    delta method on the paired per-path payoffs.
    """
    if multiplier < 0:
        raise ValueError("multiplier must be non-negative")
    base_res, base_paths = price_under_model(model, contract, seed, n_paths, **kwargs)
    scen_res, scen_paths = price_under_model(model, contract, seed, n_paths, jump_prob_scale=multiplier, **kwargs)
    a = payoff(contract_index(base_paths, contract), contract)
    b = payoff(contract_index(scen_paths, contract), contract)
    mean_a, mean_b = base_res.mean_payoff, scen_res.mean_payoff
    if mean_a == 0:
        ratio = math.nan if mean_b == 0 else math.inf
        return ShockScenario(base_res, scen_res, ratio, math.nan)
    ratio = mean_b / mean_a
    n = len(a)
    resid = (b - ratio * a) / mean_a
    se = math.sqrt(math.fsum((resid - resid.mean()) ** 2) / (n - 1) / n) if n > 1 else math.nan
    return ShockScenario(base_res, scen_res, ratio, se)


def sensitivity_csv(rows: list[SensitivityRow], parameter_name: str = "volatility_scale") -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([parameter_name, "price", "change_pct"])
    for r in rows:
        change = "" if r.pct_change is None else f"{r.pct_change:+.1f}%"
        writer.writerow([r.parameter, f"{r.price:.2f}", change])
    return out.getvalue()


def size_hedge(hedge_amount: float, unit_price: float) -> float:
    """Number of options a hedge budget buys, unrounded."""
    if unit_price == 0:
        raise ZeroPrice("cannot size a hedge against a zero option price")
    if unit_price < 0:
        raise ValueError("unit price must be positive")
    return hedge_amount / unit_price


@dataclass(frozen=True)
class PortfolioPosition:
    contract: ContractSpec
    hedge_amount: float
    unit_price: float
    n_options: float

    @classmethod
    def sized(cls, contract: ContractSpec, hedge_amount: float, unit_price: float) -> "PortfolioPosition":
        if not hedge_amount > 0:
            raise ValueError("hedge amount must be positive")
        return cls(contract, hedge_amount, unit_price, size_hedge(hedge_amount, unit_price))


@dataclass(frozen=True)
class PortfolioRow:
    state: str
    investment: float
    expected_payoff: float

    @property
    def profit(self) -> float:
        return self.expected_payoff - self.investment

    @property
    def roi_pct(self) -> float:
        return 100.0 * self.profit / self.investment


def evaluate_portfolio(positions: list[PortfolioPosition], paths: list[PathSet]) -> list[PortfolioRow]:
    """Expected maturity payoff of each position against its cost.

    The expected payoff is ``n_options`` times the undiscounted mean payoff
    per option, compared directly with the upfront investment.
    """
    if len(positions) != len(paths):
        raise ValueError("need one path set per position")
    rows = []
    for pos, ps in zip(positions, paths):
        res = price_contract(ps, pos.contract, to_pydate(ps.dates[0]))
        rows.append(PortfolioRow(pos.contract.state, pos.hedge_amount, pos.n_options * res.mean_payoff))
    return rows


def portfolio_csv(rows: list[PortfolioRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["state", "investment", "expected_payoff", "roi_pct", "total_profit"])
    for r in rows:
        writer.writerow([r.state, f"{r.investment:.0f}", f"{r.expected_payoff:.0f}", f"{r.roi_pct:.1f}%", f"{r.profit:.0f}"])
    return out.getvalue()


def hedge_csv(positions: list[PortfolioPosition]) -> str:
    """Hedge table: event, state, hedge amount, options purchased, strike, maturity."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["event", "state", "hedge", "options_purchased", "strike", "maturity"])
    for p in positions:
        c = p.contract
        event = c.kind.value.replace("_", " ").title().replace("Hdd", "HDD").replace("Cdd", "CDD")
        writer.writerow([event, c.state, f"{p.hedge_amount:.0f}", f"{p.n_options:.2f}", f"{c.strike:.2f}", c.maturity.isoformat()])
    return out.getvalue()
