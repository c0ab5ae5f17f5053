"""Piecewise-linear energy landscapes and their discrete chain parameters.

Coordinates follow one convention throughout the package:

* single basin: minimum at ``x = 0``, rims at ``x = +-w/2``;
* two basins: local minimum at ``x = 0``, peaks at ``x = +-w1/2``, global
  minima at ``x = +-(w1/2 + w2/2)``.

Energies are measured relative to the (local) minimum at the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class GeometryError(ValueError):
    """Raised for physically invalid or undiscretizable geometries."""


def _require_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise GeometryError(f"{name} must be a positive finite number, got {value!r}")


def _require_nonnegative(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise GeometryError(f"{name} must be a non-negative finite number, got {value!r}")


@dataclass(frozen=True)
class SingleBasinGeometry:
    width: float
    depth: float
    radius: float
    temperature: float

    def __post_init__(self):
        _require_positive("width", self.width)
        _require_nonnegative("depth", self.depth)
        _require_positive("radius", self.radius)
        _require_positive("temperature", self.temperature)

    @property
    def ratio(self) -> float:
        """Dimensionless ``wT / (2 r d)``; infinite for a flat basin."""
        if self.depth == 0:
            return math.inf
        return self.width * self.temperature / (2.0 * self.radius * self.depth)


@dataclass(frozen=True)
class TwoBasinGeometry:
    w1: float
    d1: float
    w2: float
    d2: float
    radius: float
    temperature: float

    def __post_init__(self):
        _require_positive("w1", self.w1)
        _require_nonnegative("d1", self.d1)
        _require_positive("w2", self.w2)
        _require_nonnegative("d2", self.d2)
        _require_positive("radius", self.radius)
        _require_positive("temperature", self.temperature)

    @property
    def ratio(self) -> float:
        """``w1 T / (2 r d1)`` of the suboptimal basin."""
        if self.d1 == 0:
            return math.inf
        return self.w1 * self.temperature / (2.0 * self.radius * self.d1)

    @property
    def target(self) -> float:
        """Coordinate of the global minimum (absorption threshold)."""
        return 0.5 * self.w1 + 0.5 * self.w2


@dataclass(frozen=True)
class ChainParamsSingle:
    N: int
    p: float
    effective_radius: float = math.nan  # w / (2N) after rounding N

    def __post_init__(self):
        if self.N < 1:
            raise GeometryError(f"N must be >= 1, got {self.N}")
        if not 0 < self.p <= 0.5:
            raise GeometryError(f"p must lie in (0, 1/2], got {self.p}")

    @property
    def alpha(self) -> float:
        return 1.0 / (2.0 * self.p)


@dataclass(frozen=True)
class ChainParamsTwo:
    M: int
    N: int
    p: float
    q: float
    effective_radius: float = math.nan

    def __post_init__(self):
        if self.M < 1:
            raise GeometryError(f"M must be >= 1, got {self.M}")
        if self.N <= self.M:
            raise GeometryError(f"N must exceed M, got M={self.M}, N={self.N}")
        if not 0 < self.p <= 0.5:
            raise GeometryError(f"p must lie in (0, 1/2], got {self.p}")
        # q = 0 is a legal limit of the chain (no backtracking in the right basin)
        if not 0 <= self.q <= 0.5:
            raise GeometryError(f"q must lie in [0, 1/2], got {self.q}")

    @property
    def R(self) -> int:
        return self.N - self.M

    @property
    def alpha(self) -> float:
        return 1.0 / (2.0 * self.p)

    @property
    def beta(self) -> float:
        return 2.0 * self.q


def uphill_probability(width: float, depth: float, radius: float, temperature: float) -> float:
    """Probability ``1/2 exp(-2 r d / (w T))`` of a one-state uphill move."""
    return 0.5 * math.exp(-2.0 * radius * depth / (width * temperature))


def state_count(width: float, radius: float) -> int:
    """Number of discrete states in a half basin, ``w / (2r)`` rounded half up."""
    n = width / (2.0 * radius)
    if n < 1:
        raise GeometryError(
            f"basin too narrow for the proposal radius: w/(2r) = {n:.6g} < 1"
        )
    return int(math.floor(n + 0.5))


def single_basin_energy(x: float, width: float, depth: float) -> float:
    half = 0.5 * width
    ax = abs(x)
    if ax >= half:
        return depth
    return depth * ax / half


def two_basin_energy(x: float, w1: float, d1: float, w2: float, d2: float) -> float:
    h1 = 0.5 * w1
    h2 = 0.5 * w2
    ax = abs(x)
    if ax <= h1:
        return d1 * ax / h1
    if ax <= h1 + h2:
        return d1 - d2 * (ax - h1) / h2
    return d1 - d2


def energy_single(x: float, g: SingleBasinGeometry) -> float:
    """Energy of the V-shaped basin; a plateau at height ``depth`` beyond the rim."""
    return single_basin_energy(x, g.width, g.depth)


def energy_two(x: float, g: TwoBasinGeometry) -> float:
    """Energy of the mirrored two-basin landscape (local minimum at 0 energy)."""
    return two_basin_energy(x, g.w1, g.d1, g.w2, g.d2)


def discretize_single(g: SingleBasinGeometry) -> ChainParamsSingle:
    N = state_count(g.width, g.radius)
    p = uphill_probability(g.width, g.depth, g.radius, g.temperature)
    return ChainParamsSingle(N=N, p=p, effective_radius=g.width / (2.0 * N))


def discretize_two(g: TwoBasinGeometry) -> ChainParamsTwo:
    M = state_count(g.w1, g.radius)
    R = state_count(g.w2, g.radius)
    p = uphill_probability(g.w1, g.d1, g.radius, g.temperature)
    q = uphill_probability(g.w2, g.d2, g.radius, g.temperature)
    return ChainParamsTwo(M=M, N=M + R, p=p, q=q,
                          effective_radius=(g.w1 + g.w2) / (2.0 * (M + R)))
