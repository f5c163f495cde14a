"""Discounted Monte Carlo prices of degree-day and event options."""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import TemperatureModel
from .dates import to_pydate
from .errors import EmptyPathSet, WindowOutOfRange
from .indices import DEFAULT_MIN_EVENT_LEN, AccrualWindow, compute_cdd, compute_hdd, detect_events
from .simulation import PathSet

DAYS_PER_YEAR = 365.25


class ContractKind(str, enum.Enum):
    HDD_CALL = "hdd_call"
    HDD_PUT = "hdd_put"
    CDD_CALL = "cdd_call"
    CDD_PUT = "cdd_put"
    HEATWAVE_CALL = "heatwave_call"
    COLDWAVE_PUT = "coldwave_put"

    @property
    def is_call(self) -> bool:
        return self.value.endswith("_call")

    @property
    def is_degree_day(self) -> bool:
        return self.value[:3] in ("hdd", "cdd")

    @property
    def counterpart(self) -> "ContractKind":
        """Same underlying with the other payoff side (degree-day kinds only)."""
        if not self.is_degree_day:
            raise ValueError(f"{self.value} has no put/call counterpart")
        base = self.value[:3]
        return ContractKind(f"{base}_put" if self.is_call else f"{base}_call")


@dataclass(frozen=True)
class ContractSpec:
    """One option on a temperature index.

    ``t_ref`` is the degree-day reference for HDD/CDD kinds and the event
    threshold for heatwave/coldwave kinds.
    """

    kind: ContractKind
    strike: float
    window: AccrualWindow
    maturity: dt.date
    rate: float
    t_ref: float
    tick: float = 1.0
    state: str = ""
    min_event_len: int = DEFAULT_MIN_EVENT_LEN

    def __post_init__(self):
        object.__setattr__(self, "kind", ContractKind(self.kind))
        object.__setattr__(self, "maturity", to_pydate(self.maturity))
        if not self.tick > 0:
            raise ValueError("tick must be positive")
        if self.strike < 0:
            raise ValueError("strike must be non-negative")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        if self.maturity < self.window.end:
            raise ValueError("maturity precedes the end of the accrual window")

    def replace(self, **changes) -> "ContractSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "strike": self.strike,
            "tick": self.tick,
            "window_start": self.window.start.isoformat(),
            "window_end": self.window.end.isoformat(),
            "maturity": self.maturity.isoformat(),
            "rate": self.rate,
            "t_ref": self.t_ref,
            "state": self.state,
            "min_event_len": self.min_event_len,
        }

    @classmethod
    def from_dict(cls, doc: dict, model: TemperatureModel | None = None) -> "ContractSpec":
        """Build from a flat mapping; a missing ``t_ref`` is taken from ``model``."""
        kind = ContractKind(doc["kind"])
        t_ref = doc.get("t_ref", doc.get("threshold"))
        if t_ref is None:
            if model is None:
                raise ValueError(f"contract of kind {kind.value} needs t_ref or a calibrated model")
            t_ref = default_threshold(kind, model)
        return cls(
            kind=kind,
            strike=float(doc["strike"]),
            window=AccrualWindow(doc["window_start"], doc["window_end"]),
            maturity=doc["maturity"],
            rate=float(doc["rate"]),
            t_ref=float(t_ref),
            tick=float(doc.get("tick", 1.0)),
            state=doc.get("state", model.state if model else ""),
            min_event_len=int(doc.get("min_event_len", DEFAULT_MIN_EVENT_LEN)),
        )


def default_threshold(kind: ContractKind, model: TemperatureModel) -> float:
    """HDD and coldwave kinds use the heating reference, CDD and heatwave kinds the cooling one."""
    kind = ContractKind(kind)
    if kind in (ContractKind.HDD_CALL, ContractKind.HDD_PUT, ContractKind.COLDWAVE_PUT):
        return model.t_ref_hdd
    return model.t_ref_cdd


@dataclass(frozen=True)
class PricingResult:
    price: float
    std_error: float
    n_paths: int
    discount_factor: float
    mean_index: float
    mean_payoff: float
    payoff_quantiles: tuple[float, float, float]
    contract: ContractSpec | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        doc = {
            "price": self.price,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "discount_factor": self.discount_factor,
            "mean_index": self.mean_index,
            "mean_payoff": self.mean_payoff,
            "payoff_quantiles": {"p05": self.payoff_quantiles[0], "p50": self.payoff_quantiles[1], "p95": self.payoff_quantiles[2]},
        }
        if self.contract is not None:
            doc["contract"] = self.contract.to_dict()
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def discount_factor(rate: float, maturity, valuation_date) -> float:
    """``exp(-r * tau)`` with tau on an actual/365.25 basis."""
    tau = (to_pydate(maturity) - to_pydate(valuation_date)).days / DAYS_PER_YEAR
    return math.exp(-rate * tau)


def contract_index(paths: PathSet, contract: ContractSpec) -> np.ndarray:
    """Underlying index per path: degree days or number of events."""
    kind = contract.kind
    args = dict(window=contract.window, dates=paths.dates)
    if kind in (ContractKind.HDD_CALL, ContractKind.HDD_PUT):
        return compute_hdd(paths.temps, contract.t_ref, **args)
    if kind in (ContractKind.CDD_CALL, ContractKind.CDD_PUT):
        return compute_cdd(paths.temps, contract.t_ref, **args)
    direction = "above" if kind is ContractKind.HEATWAVE_CALL else "below"
    return detect_events(paths.temps, contract.t_ref, direction, contract.min_event_len, **args).astype(float)


def payoff(index: np.ndarray, contract: ContractSpec) -> np.ndarray:
    if contract.kind.is_call:
        return contract.tick * np.maximum(index - contract.strike, 0.0)
    return contract.tick * np.maximum(contract.strike - index, 0.0)


def _mean(x: np.ndarray) -> float:
    return math.fsum(x) / len(x)


def price_from_index(index: np.ndarray, contract: ContractSpec, valuation_date) -> PricingResult:
    """Price given the per-path index values; shared by :func:`price_contract` and the sweeps."""
    n = len(index)
    if n == 0:
        raise EmptyPathSet("no paths to price")
    pay = payoff(index, contract)
    df = discount_factor(contract.rate, contract.maturity, valuation_date)
    mean_pay = _mean(pay)
    sd = math.sqrt(math.fsum((pay - mean_pay) ** 2) / (n - 1)) if n > 1 else 0.0
    q = np.percentile(pay, [5, 50, 95])
    return PricingResult(
        price=df * mean_pay,
        std_error=df * sd / math.sqrt(n),
        n_paths=n,
        discount_factor=df,
        mean_index=_mean(index),
        mean_payoff=mean_pay,
        payoff_quantiles=(float(q[0]), float(q[1]), float(q[2])),
        contract=contract,
    )


def price_contract(paths: PathSet, contract: ContractSpec, valuation_date=None) -> PricingResult:
    """Discounted mean payoff over the paths.

    ``valuation_date`` defaults to the first simulated day and must not be
    later than the window start.
    """
    if paths.n_paths == 0:
        raise EmptyPathSet("path set is empty")
    valuation_date = to_pydate(paths.dates[0]) if valuation_date is None else to_pydate(valuation_date)
    if valuation_date > contract.window.start:
        raise WindowOutOfRange(f"valuation date {valuation_date} is after window start {contract.window.start}")
    return price_from_index(contract_index(paths, contract), contract, valuation_date)


@dataclass(frozen=True)
class ParityCheck:
    call: PricingResult
    put: PricingResult
    residual: float


def put_call_decomposition(paths: PathSet, base: ContractSpec, valuation_date=None) -> ParityCheck:
    """Price call and put at the same strike and report ``C - P - DF*tick*(E[I] - K)``."""
    if not base.kind.is_degree_day:
        raise ValueError("put/call decomposition needs a degree-day contract")
    call_spec = base if base.kind.is_call else base.replace(kind=base.kind.counterpart)
    put_spec = call_spec.replace(kind=call_spec.kind.counterpart)
    call = price_contract(paths, call_spec, valuation_date)
    put = price_contract(paths, put_spec, valuation_date)
    forward = call.discount_factor * base.tick * (call.mean_index - base.strike)
    return ParityCheck(call, put, call.price - put.price - forward)


def results_table_csv(rows: list[tuple[str, PricingResult]]) -> str:
    """State x kind price table, one row per state and one column per contract kind."""
    states: dict[str, dict[str, float]] = {}
    kinds: list[str] = []
    for state, res in rows:
        kind = res.contract.kind.value if res.contract else "price"
        if kind not in kinds:
            kinds.append(kind)
        states.setdefault(state, {})[kind] = res.price
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["state", *kinds])
    for state, prices in states.items():
        writer.writerow([state, *(repr(prices[k]) if k in prices else "" for k in kinds)])
    return out.getvalue()
