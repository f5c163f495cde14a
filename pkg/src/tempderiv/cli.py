"""Command-line pipeline: ingest -> calibrate -> simulate -> price -> analyse.

Every command reads one JSON config. Each stage reuses the artifacts of the
previous one from the output directory when present and recomputes them in
memory otherwise, so any command can be run on its own.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import analysis, diagnostics
from .calibration import TemperatureModel, calibrate, default_jump_params
from .config import RunConfig, load_config
from .errors import ConfigError, TempDerivError
from .ingest import DailyTemperatureSeries, aggregate_state, clean_series, parse_temperature_csv, split_train_test
from .pricing import ContractSpec, results_table_csv
from .simulation import SimulationConfig, simulate_paths
from .synth import synthetic_csv

logger = logging.getLogger("tempderiv")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


class Pipeline:
    """Lazily computed stage outputs for one :class:`RunConfig`."""

    def __init__(self, cfg: RunConfig, dump_paths: bool = False):
        self.cfg = cfg
        self.out = cfg.output_dir
        self.dump_paths = dump_paths
        self._clean: dict[str, DailyTemperatureSeries] | None = None
        self._reports: dict = {}
        self._models: dict[str, TemperatureModel] = {}

    # ingest
    def _ingest(self) -> dict[str, DailyTemperatureSeries]:
        records = []
        for p in self.cfg.data_paths:
            parsed = parse_temperature_csv(p.read_bytes(), self.cfg.schema)
            records.extend(parsed.records)
        series = aggregate_state(records)
        missing = [s for s in self.cfg.states if s not in series]
        if missing:
            raise ConfigError(f"config key states: no data for {missing}")
        cal = self.cfg.calibration
        out = {}
        for state in self.cfg.states:
            out[state], self._reports[state] = clean_series(series[state], cal["outlier_k"], cal["max_gap"])
        return out

    def clean(self) -> dict[str, DailyTemperatureSeries]:
        if self._clean is None:
            paths = {s: self.out / "clean" / f"{s}.csv" for s in self.cfg.states}
            if all(p.is_file() for p in paths.values()):
                self._clean = {s: DailyTemperatureSeries.from_csv(p.read_text(), s) for s, p in paths.items()}
            else:
                self._clean = self._ingest()
        return self._clean

    def split(self, state: str):
        return split_train_test(self.clean()[state], self.cfg.calibration["cutoff"])

    def model(self, state: str) -> TemperatureModel:
        if state not in self._models:
            path = self.out / "models" / f"{state}.json"
            if path.is_file():
                self._models[state] = TemperatureModel.from_json(path.read_text())
            else:
                self._models[state] = self._calibrate(state)
        return self._models[state]

    def _calibrate(self, state: str) -> TemperatureModel:
        cal = self.cfg.calibration
        train, _ = self.split(state)
        return calibrate(
            train,
            winter_months=cal["winter_months"],
            monsoon_months=cal["monsoon_months"],
            volatility_source=cal["volatility_source"],
            risk_aversion_lambda=cal["risk_aversion_lambda"],
            jumps=default_jump_params(cal["jump_sigma"]),
        )

    def contract(self, doc: dict) -> ContractSpec:
        return ContractSpec.from_dict(doc, self.model(doc["state"]))

    def sim_kwargs(self) -> dict:
        sim = self.cfg.simulation
        return {k: sim[k] for k in ("vol_scale", "jump_prob_scale", "initial_temp", "scheme")}

    # commands
    def cmd_ingest(self):
        series = self._ingest()
        for state, s in series.items():
            write_atomic(self.out / "clean" / f"{state}.csv", s.to_csv())
            write_atomic(self.out / "clean" / f"{state}_report.json", self._reports[state].to_json())
        self._clean = series

    def cmd_calibrate(self):
        for state in self.cfg.states:
            model = self._calibrate(state)
            self._models[state] = model
            write_atomic(self.out / "models" / f"{state}.json", model.to_json())

    def cmd_simulate(self):
        sim = self.cfg.simulation
        if "start_date" not in sim or "horizon" not in sim:
            raise ConfigError("config key simulation: start_date and horizon are required for simulate")
        lines = []
        for state in self.cfg.states:
            config = SimulationConfig(
                start_date=sim["start_date"], horizon=sim["horizon"], n_paths=sim["n_paths"], seed=self.cfg.seed, **self.sim_kwargs()
            )
            paths = simulate_paths(self.model(state), config, workers=sim["workers"])
            print(f"{state}: fingerprint {paths.model_fingerprint}")
            lines.append(f"{state},{paths.model_fingerprint}")
            if self.dump_paths:
                write_atomic(self.out / "paths" / f"{state}.csv", paths.to_csv())
        write_atomic(self.out / "paths" / "fingerprints.csv", "state,fingerprint\n" + "\n".join(lines) + "\n")

    def _price(self, doc: dict, **overrides):
        sim = self.cfg.simulation
        kwargs = {**self.sim_kwargs(), **overrides}
        return analysis.price_under_model(
            self.model(doc["state"]),
            self.contract(doc),
            seed=self.cfg.seed,
            n_paths=sim["n_paths"],
            valuation_date=doc.get("valuation_date"),
            workers=sim["workers"],
            **kwargs,
        )[0]

    def cmd_price(self):
        if not self.cfg.contracts:
            raise ConfigError("config key contracts: nothing to price")
        results = [(doc, self._price(doc)) for doc in self.cfg.contracts]
        report = [{"name": doc["name"], **res.to_dict()} for doc, res in results]
        write_atomic(self.out / "pricing" / "pricing.json", _dump(report))
        write_atomic(self.out / "pricing" / "prices.csv", results_table_csv([(doc["state"], r) for doc, r in results]))

    def cmd_sensitivity(self):
        a = self.cfg.analysis
        names = a.get("sensitivity_contracts") or [c["name"] for c in self.cfg.contracts]
        if not names:
            raise ConfigError("config key contracts: nothing to analyse")
        sim = self.cfg.simulation
        common = dict(
            seed=self.cfg.seed,
            n_paths=sim["n_paths"],
            common_random_numbers=a["common_random_numbers"],
            workers=sim["workers"],
        )
        base_kwargs = {k: v for k, v in self.sim_kwargs().items() if k != "vol_scale"}
        for name in names:
            doc = self.cfg.contract(name)
            model, contract = self.model(doc["state"]), self.contract(doc)
            vd = doc.get("valuation_date")
            rows = analysis.volatility_sensitivity(model, contract, a["scales"], valuation_date=vd, **common, **base_kwargs)
            write_atomic(self.out / "sensitivity" / f"{name}_volatility.csv", analysis.sensitivity_csv(rows, "volatility_scale"))
            rows = analysis.risk_aversion_sensitivity(model, contract, a["lambdas"], valuation_date=vd, **common, **self.sim_kwargs())
            write_atomic(self.out / "sensitivity" / f"{name}_risk_aversion.csv", analysis.sensitivity_csv(rows, "lambda"))
            shock_kwargs = {k: v for k, v in self.sim_kwargs().items() if k != "jump_prob_scale"}
            lines = ["multiplier,base_price,scenario_price,ratio,ratio_std_error"]
            for m in a["multipliers"]:
                sc = analysis.shock_probability_scenario(
                    model, contract, m, self.cfg.seed, sim["n_paths"], valuation_date=vd, workers=sim["workers"], **shock_kwargs
                )
                lines.append(f"{m},{sc.base.price:.6f},{sc.scenario.price:.6f},{sc.ratio:.6f},{sc.ratio_std_error:.6f}")
            write_atomic(self.out / "sensitivity" / f"{name}_shock.csv", "\n".join(lines) + "\n")

    def cmd_hedge(self):
        hedges = self.cfg.analysis["hedges"]
        if not hedges:
            raise ConfigError("config key analysis.hedges: nothing to size")
        sim = self.cfg.simulation
        positions, path_sets = [], []
        for h in hedges:
            doc = self.cfg.contract(h["contract"])
            res, paths = analysis.price_under_model(
                self.model(doc["state"]),
                self.contract(doc),
                seed=self.cfg.seed,
                n_paths=sim["n_paths"],
                valuation_date=doc.get("valuation_date"),
                workers=sim["workers"],
                **self.sim_kwargs(),
            )
            positions.append(analysis.PortfolioPosition.sized(res.contract, h["amount"], res.price))
            path_sets.append(paths)
        write_atomic(self.out / "hedge" / "hedges.csv", analysis.hedge_csv(positions))
        rows = analysis.evaluate_portfolio(positions, path_sets)
        write_atomic(self.out / "hedge" / "portfolio.csv", analysis.portfolio_csv(rows))

    def cmd_validate(self):
        reports = {}
        for state in self.cfg.states:
            train, test = self.split(state)
            model = self.model(state)
            reports[f"{state}/in_sample"] = diagnostics.validate(model, train)
            reports[f"{state}/out_of_sample"] = diagnostics.validate(model, test)
        write_atomic(self.out / "validation" / "validation.json", diagnostics.validation_json(reports))


COMMANDS = ("ingest", "calibrate", "simulate", "price", "sensitivity", "hedge", "validate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempderiv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path)
        p.add_argument("--states", type=lambda s: [x.strip() for x in s.split(",") if x.strip()])
        p.add_argument("--dump-paths", action="store_true")
    p = sub.add_parser("synth", help="write a synthetic 73-year station dataset and a matching config")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=7)
    return parser


def example_config(data_file: str) -> dict:
    return {
        "seed": 2024,
        "data": {"paths": [data_file], "schema": {"tmin": None, "tmax": None}},
        "states": ["Gujarat", "Punjab"],
        "output_dir": "out",
        "calibration": {"cutoff": "2021-01-01"},
        "simulation": {"start_date": "2024-12-01", "horizon": 90, "n_paths": 1000},
        "contracts": [
            {"name": "punjab_hdd_put", "state": "Punjab", "kind": "hdd_put", "strike": 90.89, "tick": 1000,
             "window_start": "2024-12-01", "window_end": "2025-02-28", "maturity": "2025-02-28", "rate": 0.065},
            {"name": "gujarat_cdd_call", "state": "Gujarat", "kind": "cdd_call", "strike": 70, "tick": 1000,
             "window_start": "2025-04-01", "window_end": "2025-08-31", "maturity": "2025-08-31", "rate": 0.065},
            {"name": "gujarat_heatwave_call", "state": "Gujarat", "kind": "heatwave_call", "strike": 1, "tick": 10000,
             "window_start": "2024-05-05", "window_end": "2024-07-20", "maturity": "2024-07-20", "rate": 0.065},
            {"name": "punjab_coldwave_put", "state": "Punjab", "kind": "coldwave_put", "strike": 3, "tick": 10000,
             "window_start": "2024-12-01", "window_end": "2025-02-28", "maturity": "2025-02-28", "rate": 0.065},
        ],
        "analysis": {
            "scales": [0.8, 1.0, 1.2],
            "lambdas": [0.0, 0.05, 0.1],
            "multipliers": [2.0],
            "sensitivity_contracts": ["gujarat_cdd_call", "gujarat_heatwave_call"],
            "hedges": [
                {"contract": "punjab_hdd_put", "amount": 120000},
                {"contract": "gujarat_cdd_call", "amount": 120000},
                {"contract": "gujarat_heatwave_call", "amount": 8333},
                {"contract": "punjab_coldwave_put", "amount": 115000},
            ],
        },
    }


def run(command: str, cfg: RunConfig, dump_paths: bool = False) -> None:
    getattr(Pipeline(cfg, dump_paths), f"cmd_{command}")()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            write_atomic(args.out / "synthetic_temperatures.csv", synthetic_csv(args.seed))
            write_atomic(args.out / "config.json", _dump(example_config("synthetic_temperatures.csv")))
            return EXIT_OK
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out, states=args.states)
        run(args.command, cfg, args.dump_paths)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TempDerivError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
