"""Continuous-state Metropolis annealing on the basin landscapes.

Proposals are uniform on ``[-r, r]``; rejected proposals still cost a step.
Every trial draws from its own generator keyed by ``(seed, trial)``, so a
batch is reproducible regardless of how its trials are scheduled.
"""
from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .chain import TrialOutcome
from .landscape import SingleBasinGeometry, TwoBasinGeometry, energy_single, energy_two
from .rng import trial_rng

DEFAULT_MAX_STEPS = 10**7
DEFAULT_TRIALS = 2000
WORKERS_ENV = "ANNEAL_LAB_WORKERS"

Geometry = Union[SingleBasinGeometry, TwoBasinGeometry]
Runner = Callable[[int, int], TrialOutcome]

_NEVER = np.iinfo(np.int64).max


class AllTimeoutError(RuntimeError):
    """Every trial in a batch hit its step cap; no mean is defined."""


@dataclass(frozen=True)
class TemperatureSchedule:
    """Piecewise-constant temperature, indexed by step number.

    ``segments`` holds ``(duration, temperature)`` pairs; only the last one
    may (and must) have ``duration=None``, meaning "until the run ends".
    Steps ``1..d0`` use the first temperature, the next ``d1`` steps the
    second, and so on.  A zero duration is allowed and skips the segment.
    """

    segments: tuple

    def __post_init__(self):
        segs = tuple((None if d is None else int(d), float(t)) for d, t in self.segments)
        if not segs:
            raise ValueError("schedule needs at least one segment")
        if segs[-1][0] is not None or any(d is None for d, _ in segs[:-1]):
            raise ValueError("exactly one unbounded segment is allowed, and it must be last")
        for d, t in segs:
            if d is not None and d < 0:
                raise ValueError(f"segment duration must be non-negative, got {d}")
            if not (math.isfinite(t) and t > 0):
                raise ValueError(f"temperatures must be positive, got {t}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, temperature: float) -> "TemperatureSchedule":
        return cls(((None, temperature),))

    @classmethod
    def switch(cls, tau: int, t_high: float, t_low: float) -> "TemperatureSchedule":
        """``t_high`` for the first ``tau`` steps, ``t_low`` afterwards."""
        return cls(((tau, t_high), (None, t_low)))

    def temperature_at(self, step: int) -> float:
        end = 0
        for d, t in self.segments:
            if d is None:
                return t
            end += d
            if step <= end:
                return t
        raise AssertionError("unreachable")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative segment end steps and temperatures for the kernels."""
        ends, total = [], 0
        for d, _ in self.segments:
            if d is None:
                ends.append(_NEVER)
            else:
                total = min(total + d, _NEVER - 1)
                ends.append(total)
        temps = [t for _, t in self.segments]
        return np.array(ends, dtype=np.int64), np.array(temps, dtype=np.float64)


def _energy_fn(g: Geometry) -> Callable[[float], float]:
    if isinstance(g, SingleBasinGeometry):
        return lambda x: energy_single(x, g)
    return lambda x: energy_two(x, g)


def metropolis_step(x: float, g: Geometry, temperature: float, u_move: float, u_accept: float) -> float:
    """One Metropolis move driven by two uniform variates on ``[0, 1)``.

    The proposal is ``x + r (2 u_move - 1)``; it is accepted when
    ``u_accept < exp(-dE / T)`` (always, for ``dE <= 0``).
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    energy = _energy_fn(g)
    xp = x + g.radius * (2.0 * u_move - 1.0)
    de = energy(xp) - energy(x)
    if de <= 0.0 or u_accept < math.exp(-de / temperature):
        return xp
    return x


def _schedule_for(g: Geometry, schedule: Optional[TemperatureSchedule]) -> TemperatureSchedule:
    return schedule if schedule is not None else TemperatureSchedule.constant(g.temperature)


def run_single_escape(g: SingleBasinGeometry, schedule: Optional[TemperatureSchedule] = None, *,
                      x0: float = 0.0, seed: int = 0, trial: int = 0,
                      max_steps: int = DEFAULT_MAX_STEPS) -> TrialOutcome:
    """Steps until the walker first leaves ``(-w/2, w/2)``.

    Without a schedule the geometry's own temperature is used throughout.
    """
    if abs(x0) >= 0.5 * g.width:
        raise ValueError(f"x0 = {x0} must lie strictly inside the basin")
    ends, temps = _schedule_for(g, schedule).arrays()
    steps, absorbed = _kernels.single_escape(
        trial_rng(seed, trial), float(x0), g.width, g.depth, g.radius, ends, temps, int(max_steps))
    return TrialOutcome(int(steps), bool(absorbed))


def run_two_hit(g: TwoBasinGeometry, schedule: Optional[TemperatureSchedule] = None, *,
                x0: float = 0.0, seed: int = 0, trial: int = 0,
                max_steps: int = DEFAULT_MAX_STEPS) -> TrialOutcome:
    """Steps until ``|x|`` first reaches the global-minimum coordinate ``w1/2 + w2/2``."""
    bound = 0.5 * g.w1 + g.w2
    if abs(x0) > bound:
        raise ValueError(f"x0 = {x0} outside [-{bound}, {bound}]")
    ends, temps = _schedule_for(g, schedule).arrays()
    steps, absorbed = _kernels.two_hit(
        trial_rng(seed, trial), float(x0), g.w1, g.d1, g.w2, g.d2, g.radius, ends, temps,
        int(max_steps))
    return TrialOutcome(int(steps), bool(absorbed))


@dataclass(frozen=True, eq=False)
class TrialBatch:
    steps: np.ndarray
    absorbed: np.ndarray
    seed: int
    config_digest: Optional[str] = None
    mean: float = field(init=False)
    stderr: float = field(init=False)

    def __post_init__(self):
        hit = self.steps[self.absorbed]
        if hit.size == 0:
            raise AllTimeoutError(f"all {self.n_trials} trials timed out")
        mean = float(hit.mean())
        stderr = float(hit.std(ddof=1) / math.sqrt(hit.size)) if hit.size > 1 else 0.0
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "stderr", stderr)

    @property
    def n_trials(self) -> int:
        return int(self.steps.size)

    @property
    def n_absorbed(self) -> int:
        return int(self.absorbed.sum())

    @property
    def timeouts(self) -> int:
        return self.n_trials - self.n_absorbed

    def digest(self) -> str:
        """Hash of the raw per-trial outcomes; equal batches have equal digests."""
        h = hashlib.sha256()
        h.update(self.steps.astype("<i8").tobytes())
        h.update(self.absorbed.astype("u1").tobytes())
        return h.hexdigest()


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        n = int(raw)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {raw!r}")
        return n
    return os.cpu_count() or 1


def mc_mean(runner: Runner, n_trials: int = DEFAULT_TRIALS, base_seed: int = 0, *,
            workers: Optional[int] = None, config_digest: Optional[str] = None) -> TrialBatch:
    """Run ``runner(base_seed, i)`` for ``i = 0..n_trials-1`` and aggregate.

    Outcomes are collected in trial order, so the batch does not depend on
    the number of worker threads.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    workers = worker_count() if workers is None else workers

    def run(i):
        return runner(base_seed, i)

    if workers == 1:
        outcomes = [run(i) for i in range(n_trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, range(n_trials), chunksize=64))
    steps = np.fromiter((o.steps for o in outcomes), dtype=np.int64, count=n_trials)
    absorbed = np.fromiter((o.absorbed for o in outcomes), dtype=np.bool_, count=n_trials)
    return TrialBatch(steps, absorbed, base_seed, config_digest)


def continuous_runner(g: Geometry, schedule: Optional[TemperatureSchedule] = None, *,
                      x0: float = 0.0, max_steps: int = DEFAULT_MAX_STEPS) -> Runner:
    """A trial procedure for :func:`mc_mean` on either landscape."""
    run = run_single_escape if isinstance(g, SingleBasinGeometry) else run_two_hit

    def runner(seed: int, trial: int) -> TrialOutcome:
        return run(g, schedule, x0=x0, seed=seed, trial=trial, max_steps=max_steps)

    return runner


def continuous_mean(g: Geometry, n_trials: int = DEFAULT_TRIALS, base_seed: int = 0,
                    schedule: Optional[TemperatureSchedule] = None, *,
                    max_steps: int = DEFAULT_MAX_STEPS, workers: Optional[int] = None) -> TrialBatch:
    return mc_mean(continuous_runner(g, schedule, max_steps=max_steps), n_trials, base_seed,
                   workers=workers)


def displacement_samples(g: Geometry, n_steps: int, seed: int = 0, x0: float = 0.0) -> np.ndarray:
    """Accepted displacement of each of ``n_steps`` Metropolis moves (0 on rejection).

    The walker is not absorbed here; it is a probe of the move kernel.
    """
    rng = trial_rng(seed, 0)
    draws = rng.random((n_steps, 2))
    out = np.empty(n_steps)
    x = x0
    for k, (um, ua) in enumerate(draws):
        xp = metropolis_step(x, g, g.temperature, um, ua)
        out[k] = xp - x
        x = xp
    return out
