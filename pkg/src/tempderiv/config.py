"""Run configuration: JSON document, schema and validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigError

_DATE = {"type": "string", "pattern": r"^\d{4}-\d{2}-\d{2}$"}
_MONTHS = {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 12}, "minItems": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tempderiv run configuration",
    "type": "object",
    "required": ["data", "states", "output_dir"],
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "data": {
            "type": "object",
            "required": ["paths"],
            "additionalProperties": False,
            "properties": {
                "paths": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "schema": {"type": "object", "additionalProperties": {"type": ["string", "null"]}},
            },
        },
        "states": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "output_dir": {"type": "string"},
        "calibration": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cutoff": _DATE,
                "winter_months": _MONTHS,
                "monsoon_months": _MONTHS,
                "max_gap": {"type": "integer", "minimum": 0},
                "outlier_k": {"type": "number", "exclusiveMinimum": 0},
                "volatility_source": {"enum": ["residual", "raw"]},
                "risk_aversion_lambda": {"type": "number"},
                "jump_sigma": {"type": "number", "minimum": 0},
            },
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "start_date": _DATE,
                "horizon": {"type": "integer", "minimum": 1},
                "n_paths": {"type": "integer", "minimum": 1},
                "vol_scale": {"type": "number", "exclusiveMinimum": 0},
                "jump_prob_scale": {"type": "number", "minimum": 0},
                "initial_temp": {"oneOf": [{"type": "number"}, {"const": "theta"}]},
                "scheme": {"enum": ["exact", "euler"]},
                "workers": {"type": "integer", "minimum": 1},
            },
        },
        "contracts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "state", "kind", "strike", "window_start", "window_end", "maturity", "rate"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "state": {"type": "string"},
                    "kind": {"enum": ["hdd_call", "hdd_put", "cdd_call", "cdd_put", "heatwave_call", "coldwave_put"]},
                    "strike": {"type": "number", "minimum": 0},
                    "tick": {"type": "number", "exclusiveMinimum": 0},
                    "window_start": _DATE,
                    "window_end": _DATE,
                    "maturity": _DATE,
                    "valuation_date": _DATE,
                    "rate": {"type": "number", "minimum": 0},
                    "t_ref": {"type": "number"},
                    "min_event_len": {"type": "integer", "minimum": 1},
                },
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "lambdas": {"type": "array", "items": {"type": "number"}},
                "multipliers": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "sensitivity_contracts": {"type": "array", "items": {"type": "string"}},
                "common_random_numbers": {"type": "boolean"},
                "hedges": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["contract", "amount"],
                        "additionalProperties": False,
                        "properties": {"contract": {"type": "string"}, "amount": {"type": "number", "exclusiveMinimum": 0}},
                    },
                },
            },
        },
    },
}

CALIBRATION_DEFAULTS = {
    "cutoff": "2021-01-01",
    "winter_months": [12, 1, 2],
    "monsoon_months": [6, 7, 8, 9],
    "max_gap": 7,
    "outlier_k": 3.0,
    "volatility_source": "residual",
    "risk_aversion_lambda": 0.0,
    "jump_sigma": 1.0,
}
SIMULATION_DEFAULTS = {
    "n_paths": 1000,
    "vol_scale": 1.0,
    "jump_prob_scale": 1.0,
    "initial_temp": "theta",
    "scheme": "exact",
    "workers": 1,
}
ANALYSIS_DEFAULTS = {
    "scales": [0.8, 1.0, 1.2],
    "lambdas": [0.0, 0.05, 0.1],
    "multipliers": [2.0],
    "common_random_numbers": True,
    "hedges": [],
}


@dataclass
class RunConfig:
    data_paths: list[Path]
    schema: dict
    states: list[str]
    output_dir: Path
    seed: int = 0
    calibration: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    contracts: list[dict] = field(default_factory=list)
    analysis: dict = field(default_factory=dict)

    def contract(self, name: str) -> dict:
        for c in self.contracts:
            if c["name"] == name:
                return c
        raise ConfigError(f"analysis references unknown contract {name!r}")


def _key_path(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def load_config(
    path: str | Path,
    *,
    seed: int | None = None,
    output_dir: str | Path | None = None,
    states: list[str] | None = None,
) -> RunConfig:
    """Read, schema-check and resolve a config file; CLI overrides win over file values.

    Relative data and output paths resolve against the config file's directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        err = errors[0]
        raise ConfigError(f"config key {_key_path(err)}: {err.message}")

    base = path.parent
    data_paths = [(base / p).resolve() for p in doc["data"]["paths"]]
    for p in data_paths:
        if not p.is_file():
            raise ConfigError(f"config key data.paths: file {p} does not exist")
    if states:
        # restrict the run to the requested states and the contracts written on them
        doc["states"] = states
        kept = [c for c in doc.get("contracts", []) if c["state"] in states]
        kept_names = {c["name"] for c in kept}
        doc["contracts"] = kept
        analysis = doc.setdefault("analysis", {})
        analysis["hedges"] = [h for h in analysis.get("hedges", []) if h["contract"] in kept_names]
        if "sensitivity_contracts" in analysis:
            analysis["sensitivity_contracts"] = [n for n in analysis["sensitivity_contracts"] if n in kept_names]
    cfg = RunConfig(
        data_paths=data_paths,
        schema=doc["data"].get("schema", {}),
        states=list(doc["states"]),
        output_dir=Path(output_dir).resolve() if output_dir is not None else (base / doc["output_dir"]).resolve(),
        seed=int(seed if seed is not None else doc.get("seed", 0)),
        calibration={**CALIBRATION_DEFAULTS, **doc.get("calibration", {})},
        simulation={**SIMULATION_DEFAULTS, **doc.get("simulation", {})},
        contracts=doc.get("contracts", []),
        analysis={**ANALYSIS_DEFAULTS, **doc.get("analysis", {})},
    )
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("config key seed: must be an unsigned 64-bit integer")
    names = [c["name"] for c in cfg.contracts]
    if len(set(names)) != len(names):
        raise ConfigError("config key contracts: contract names must be unique")
    for i, c in enumerate(cfg.contracts):
        if c["state"] not in cfg.states:
            raise ConfigError(f"config key contracts.{i}.state: {c['state']!r} is not in the state list")
        if c["window_start"] > c["window_end"]:
            raise ConfigError(f"config key contracts.{i}.window_end: precedes window_start")
        if c["maturity"] < c["window_end"]:
            raise ConfigError(f"config key contracts.{i}.maturity: precedes window_end")
    for i, h in enumerate(cfg.analysis["hedges"]):
        if h["contract"] not in names:
            raise ConfigError(f"config key analysis.hedges.{i}.contract: unknown contract {h['contract']!r}")
    for i, name in enumerate(cfg.analysis.get("sensitivity_contracts", [])):
        if name not in names:
            raise ConfigError(f"config key analysis.sensitivity_contracts.{i}: unknown contract {name!r}")
    return cfg
