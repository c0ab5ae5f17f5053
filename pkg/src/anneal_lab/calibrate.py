"""Radius-scale calibration of the discrete prediction against continuous runs.

The continuous walker with proposal radius ``r`` diffuses like a discrete
walk with step ``r / k``; variance matching (uniform proposals have variance
``r^2 / 3``) puts ``k`` near ``sqrt(3)``.  ``predicted_with_scaled_radius``
evaluates the closed form on the chain built with step ``r / k``, which changes
both the number of states and the uphill probabilities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .analytic import SaturationError, exit_time_single, hit_time_two
from .landscape import (
    GeometryError,
    SingleBasinGeometry,
    TwoBasinGeometry,
    discretize_single,
    discretize_two,
)
from .metropolis import DEFAULT_MAX_STEPS, DEFAULT_TRIALS, continuous_mean
from .rng import derive_seed

Geometry = Union[SingleBasinGeometry, TwoBasinGeometry]

K_RANGE = (1.0, 3.0)
GRID_STEP = 0.01
REFINE_STEP = 1e-4


class DegenerateFitError(ValueError):
    """The prediction is saturated or undefined over the whole k range."""


def relative_error(predicted: float, observed: float) -> float:
    return abs(predicted - observed) / observed


def predicted_time(g: Geometry) -> float:
    """Closed-form expected steps from the centre (state 0)."""
    if isinstance(g, SingleBasinGeometry):
        c = discretize_single(g)
        return exit_time_single(0, c.N, c.p)
    return hit_time_two(0, discretize_two(g))


def predicted_with_scaled_radius(g: Geometry, k: float) -> float:
    """Closed-form prediction for the chain whose step is ``radius / k``."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return predicted_time(replace(g, radius=g.radius / k))


@dataclass(frozen=True)
class CalibrationPoint:
    ratio: float
    t_discrete: float
    t_continuous: float
    rel_error: float
    k_opt: float
    t_scaled: float
    scaled_error: float
    trials: int
    timeouts: int
    stderr: float
    depth: float

    @classmethod
    def from_measurement(cls, g: Geometry, t_continuous: float, *, trials: int = 0,
                         timeouts: int = 0, stderr: float = math.nan,
                         k_range: tuple = K_RANGE) -> "CalibrationPoint":
        t_discrete = predicted_time(g)
        k = fit_k(g, t_continuous, k_range)
        t_scaled = predicted_with_scaled_radius(g, k)
        depth = g.depth if isinstance(g, SingleBasinGeometry) else g.d1
        return cls(ratio=g.ratio, t_discrete=t_discrete, t_continuous=t_continuous,
                   rel_error=relative_error(t_discrete, t_continuous), k_opt=k,
                   t_scaled=t_scaled, scaled_error=relative_error(t_scaled, t_continuous),
                   trials=trials, timeouts=timeouts, stderr=stderr, depth=depth)


def _objective(g: Geometry, ks: Iterable[float], target: float) -> np.ndarray:
    out = []
    for k in ks:
        try:
            out.append(relative_error(predicted_with_scaled_radius(g, k), target))
        except (SaturationError, GeometryError, OverflowError):
            out.append(math.inf)
    return np.array(out)


def fit_k(g: Geometry, target: float, k_range: tuple = K_RANGE, *,
          step: float = GRID_STEP, refine_step: float = REFINE_STEP) -> float:
    """Radius scale in ``k_range`` whose prediction best matches ``target``.

    Coarse grid, then a fine grid over the neighbouring cells.  The
    objective jumps wherever the rounded state count changes, so no
    derivative information is used.  Ties go to the smaller ``k``.
    """
    if not target > 0:
        raise ValueError(f"target must be positive, got {target}")
    lo, hi = k_range
    if not 0 < lo <= hi:
        raise ValueError(f"invalid k range {k_range}")
    n = int(round((hi - lo) / step))
    ks = lo + step * np.arange(n + 1)
    ks[-1] = hi
    err = _objective(g, ks, target)
    if not np.isfinite(err).any():
        raise DegenerateFitError("prediction saturated across the whole k range")
    best = int(np.argmin(err))
    a, b = ks[max(best - 1, 0)], ks[min(best + 1, n)]
    m = int(round((b - a) / refine_step))
    fine = a + refine_step * np.arange(m + 1)
    fine_err = _objective(g, fine, target)
    j = int(np.argmin(fine_err))
    if fine_err[j] <= err[best]:
        return float(fine[j])
    return float(ks[best])


def depth_for_ratio(width: float, temperature: float, radius: float, ratio: float) -> float:
    """Depth giving ``w T / (2 r d) = ratio``."""
    return width * temperature / (2.0 * radius * ratio)


def geometric_ratios(lo: float, hi: float, n: int) -> list[float]:
    return [float(x) for x in np.geomspace(lo, hi, n)]


def _sweep(geoms: Sequence[Geometry], n_trials: int, base_seed: int, max_steps: int,
           k_range: tuple, workers: Optional[int]) -> list[CalibrationPoint]:
    points = []
    for idx, g in enumerate(geoms):
        batch = continuous_mean(g, n_trials, derive_seed(base_seed, idx),
                                max_steps=max_steps, workers=workers)
        points.append(CalibrationPoint.from_measurement(
            g, batch.mean, trials=batch.n_trials, timeouts=batch.timeouts,
            stderr=batch.stderr, k_range=k_range))
    return points


def sweep_ratio_single(base: SingleBasinGeometry, depths: Sequence[float],
                       n_trials: int = DEFAULT_TRIALS, base_seed: int = 0, *,
                       max_steps: int = DEFAULT_MAX_STEPS, k_range: tuple = K_RANGE,
                       workers: Optional[int] = None) -> list[CalibrationPoint]:
    """Calibrate at each depth, all other parameters taken from ``base``.

    Point ``i`` runs its trials under the seed ``derive_seed(base_seed, i)``.
    """
    geoms = [replace(base, depth=float(d)) for d in depths]
    return _sweep(geoms, n_trials, base_seed, max_steps, k_range, workers)


def sweep_ratio_two(base: TwoBasinGeometry, depths1: Sequence[float],
                    n_trials: int = DEFAULT_TRIALS, base_seed: int = 0, *,
                    max_steps: int = DEFAULT_MAX_STEPS, k_range: tuple = K_RANGE,
                    workers: Optional[int] = None) -> list[CalibrationPoint]:
    """Two-basin sweep over the suboptimal-basin depth ``d1``."""
    geoms = [replace(base, d1=float(d)) for d in depths1]
    return _sweep(geoms, n_trials, base_seed, max_steps, k_range, workers)
