"""Seeded Monte Carlo paths of the mean-reverting temperature model with shocks.

Each path draws from its own PCG64 stream keyed by ``(seed, path_index)``,
so a path's values never depend on how many paths are simulated alongside
it, on block size, or on the number of worker threads.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from .calibration import JumpParams, TemperatureModel, evaluate_theta
from .dates import daily_range, to_day
from .errors import ProbOverflow

BLOCK_SIZE = 4096


@dataclass(frozen=True)
class SimulationConfig:
    """Settings for one batch of paths.

    ``horizon`` counts stored days including ``start_date`` itself, which
    holds the initial temperature. ``scheme="exact"`` advances the diffusive
    part with the exact one-day OU transition (coefficients frozen over the
    day); ``"euler"`` uses the first-order Euler step.
    """

    start_date: object
    horizon: int
    n_paths: int = 1000
    seed: int = 0
    vol_scale: float = 1.0
    jump_prob_scale: float = 1.0
    initial_temp: float | Literal["theta"] = "theta"
    scheme: Literal["exact", "euler"] = "exact"

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not self.vol_scale > 0:
            raise ValueError("vol_scale must be positive")
        if self.jump_prob_scale < 0:
            raise ValueError("jump_prob_scale must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.scheme not in ("exact", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start_date"] = str(to_day(self.start_date))
        return d


@dataclass(frozen=True, eq=False)
class PathSet:
    dates: np.ndarray
    temps: np.ndarray
    seed: int
    model_fingerprint: str

    def __post_init__(self):
        if self.temps.ndim != 2 or self.temps.shape[1] != len(self.dates):
            raise ValueError("temps must be n_paths x len(dates)")
        for name in ("dates", "temps"):
            getattr(self, name).setflags(write=False)

    @property
    def n_paths(self) -> int:
        return self.temps.shape[0]

    def to_csv(self) -> str:
        """Long-format dump with columns ``path_id,date,temp``."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["path_id", "date", "temp"])
        days = [str(d) for d in self.dates]
        for p, row in enumerate(self.temps):
            writer.writerows((p, d, repr(float(t))) for d, t in zip(days, row))
        return out.getvalue()


def fingerprint(model: TemperatureModel, config: SimulationConfig) -> str:
    doc = {"model": model.to_dict(), "config": config.to_dict()}
    doc["model"].pop("metadata", None)
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def path_rng(seed: int, path: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(path,))))


def event_increments(starts, magnitudes, duration: int, horizon: int) -> np.ndarray:
    """Daily increments for shocks that lift the level by ``Y`` for ``duration`` days.

    Each event adds ``+Y`` on its start day and ``-Y`` on the day after it
    ends (dropped if that falls past the horizon).
    """
    inc = np.zeros(horizon)
    for s, y in zip(starts, magnitudes):
        inc[s] += y
        if s + duration < horizon:
            inc[s + duration] -= y
    return inc


def _scaled_probs(jumps: JumpParams, scale: float) -> tuple[float, float]:
    p_h, p_c = scale * jumps.p_h, scale * jumps.p_c
    if p_h + p_c > 1:
        raise ProbOverflow(f"scaled shock probability {p_h + p_c} exceeds 1")
    return p_h, p_c


def sample_jump_schedule(
    rng: np.random.Generator, jumps: JumpParams, horizon: int, jump_prob_scale: float = 1.0
) -> np.ndarray:
    """Per-day shock increments for one path.

    Always consumes ``horizon`` uniforms and ``horizon`` normals from ``rng``,
    whatever the probabilities, so that scenario legs sharing a seed see the
    same underlying draws. On a day with no active event a heatwave starts if
    ``u < p_h``, a coldwave if ``p_h <= u < p_h + p_c``.
    """
    p_h, p_c = _scaled_probs(jumps, jump_prob_scale)
    u = rng.random(horizon)
    m = rng.standard_normal(horizon)
    if p_h + p_c == 0:
        return np.zeros(horizon)
    starts, mags = [], []
    free_from = 0
    for day in np.flatnonzero(u < p_h + p_c):
        if day < free_from:
            continue
        if u[day] < p_h:
            mags.append(jumps.mu_h + jumps.sigma_h * m[day])
        else:
            mags.append(jumps.mu_c + jumps.sigma_c * m[day])
        starts.append(day)
        free_from = day + jumps.duration
    return event_increments(starts, mags, jumps.duration, horizon)


def _simulate_block(model: TemperatureModel, config: SimulationConfig, paths: range, drift, vol, x0) -> np.ndarray:
    steps = config.horizon - 1
    n = len(paths)
    z = np.empty((n, steps))
    shocks = np.empty((n, steps))
    for i, p in enumerate(paths):
        rng = path_rng(config.seed, p)
        z[i] = rng.standard_normal(steps)
        shocks[i] = sample_jump_schedule(rng, model.jumps, steps, config.jump_prob_scale)

    kappa = model.reversion.kappa
    x = np.empty((n, config.horizon))
    x[:, 0] = x0
    if config.scheme == "exact":
        decay = math.exp(-kappa)
        for k in range(steps):
            x[:, k + 1] = drift[k] + decay * (x[:, k] - drift[k]) + vol[k] * z[:, k]
    else:
        for k in range(steps):
            x[:, k + 1] = x[:, k] + kappa * (drift[k] - x[:, k]) + vol[k] * z[:, k]
    x[:, 1:] += np.cumsum(shocks, axis=1)
    return x


def simulate_paths(model: TemperatureModel, config: SimulationConfig, workers: int = 1) -> PathSet:
    """Simulate ``config.n_paths`` daily temperature paths.

    The diffusive part ``X`` mean-reverts to ``theta - lambda * s^2 / kappa``
    with ``s = vol_scale * sigma(t)``; shocks are added on top as temporary
    level shifts, ``T = X + cumulative shocks``. Output is identical for any
    ``workers`` value.
    """
    _scaled_probs(model.jumps, config.jump_prob_scale)
    dates = daily_range(config.start_date, to_day(config.start_date) + np.timedelta64(config.horizon - 1, "D"))
    theta = np.asarray(evaluate_theta(model.seasonal, dates), dtype=float)
    s = config.vol_scale * model.volatility.on_dates(dates)
    kappa = model.reversion.kappa
    lam = model.risk_aversion_lambda
    # x + kappa*(drift - x) == x + kappa*(theta - x) - lam*s^2 for the Euler step
    drift = theta - lam * s**2 / kappa
    if config.scheme == "exact":
        vol = s * math.sqrt(-math.expm1(-2 * kappa) / (2 * kappa))
    else:
        vol = s
    x0 = theta[0] if config.initial_temp == "theta" else float(config.initial_temp)

    blocks = [range(i, min(i + BLOCK_SIZE, config.n_paths)) for i in range(0, config.n_paths, BLOCK_SIZE)]
    temps = np.empty((config.n_paths, config.horizon))
    run = lambda blk: _simulate_block(model, config, blk, drift, vol, x0)  # noqa: E731
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = map(run, blocks)
    for blk, block_temps in zip(blocks, results):
        temps[blk.start : blk.stop] = block_temps
    if not np.all(np.isfinite(temps)):
        raise FloatingPointError("non-finite temperature in simulated paths")
    return PathSet(dates, temps, config.seed, fingerprint(model, config))


def deterministic_path(model: TemperatureModel, config: SimulationConfig) -> np.ndarray:
    """The noise-free, shock-free recursion that :func:`simulate_paths` reduces to when sigma is zero."""
    dates = daily_range(config.start_date, to_day(config.start_date) + np.timedelta64(config.horizon - 1, "D"))
    theta = np.asarray(evaluate_theta(model.seasonal, dates), dtype=float)
    s = config.vol_scale * model.volatility.on_dates(dates)
    kappa, lam = model.reversion.kappa, model.risk_aversion_lambda
    out = np.empty(config.horizon)
    out[0] = theta[0] if config.initial_temp == "theta" else float(config.initial_temp)
    decay = math.exp(-kappa)
    for k in range(config.horizon - 1):
        target = theta[k] - lam * s[k] ** 2 / kappa
        if config.scheme == "exact":
            out[k + 1] = target + decay * (out[k] - target)
        else:
            out[k + 1] = out[k] + kappa * (target - out[k])
    return out
