"""Closed-form expected exit and hitting times of the basin chains.

Canonical evaluation iterates the first-difference recurrences and sums them
(O(N), no cancellation).  The explicit power-series forms are kept as
cross-checks for moderate sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .landscape import ChainParamsSingle, ChainParamsTwo


class SaturationError(OverflowError):
    """An expected time exceeds the largest finite double."""


Method = Literal["closed-form", "exact-solve", "monte-carlo"]


@dataclass(frozen=True)
class DifferenceSequence:
    values: np.ndarray
    kind: Literal["left", "right"]

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class HittingTimeTable:
    """Expected steps to absorption, one entry per start state in ``states``."""

    states: np.ndarray
    times: np.ndarray
    method: Method
    params: object = field(default=None, compare=False)

    def at(self, state: int) -> float:
        idx = int(state) - int(self.states[0])
        if not 0 <= idx < len(self.states):
            raise IndexError(f"state {state} outside [{self.states[0]}, {self.states[-1]}]")
        return float(self.times[idx])


def _check_p(p: float) -> None:
    if not 0 < p <= 0.5:
        raise ValueError(f"p must lie in (0, 1/2], got {p}")


def _finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise SaturationError(f"{what} is beyond the representable range")
    return value


def left_differences(n: int, p: float) -> np.ndarray:
    """``b_0 .. b_{n-1}`` with ``b_0 = alpha`` and ``b_i = 1/p + alpha b_{i-1}``."""
    _check_p(p)
    alpha = 1.0 / (2.0 * p)
    out = np.empty(n)
    b = alpha
    for i in range(n):
        if i:
            b = 1.0 / p + alpha * b
        out[i] = b
    return out


def first_difference_single(i: int, p: float) -> float:
    if i < 0:
        raise ValueError(f"index must be non-negative, got {i}")
    return _finite(float(left_differences(i + 1, p)[-1]), f"b_{i}")


def exit_time_single(i: int, N: int, p: float) -> float:
    """Expected steps for the single-basin chain to reach ``+-N`` from ``i``."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not 0 <= i <= N:
        raise ValueError(f"start state {i} outside [0, {N}]")
    b = left_differences(N, p)
    return _finite(float(math.fsum(b[i:])), f"T_{i}")


def exit_times_single(params: ChainParamsSingle) -> HittingTimeTable:
    """All of ``T_0 .. T_N`` (the chain is symmetric, so ``T_{-i} = T_i``)."""
    b = left_differences(params.N, params.p)
    times = np.append(np.cumsum(b[::-1])[::-1], 0.0)
    _finite(float(times[0]), "T_0")
    return HittingTimeTable(np.arange(params.N + 1), times, "closed-form", params)


def exit_time_single_series(i: int, N: int, p: float, *, printed: bool = False) -> float:
    """Explicit power-series form of the single-basin exit time.

    With ``printed=True`` the inner coefficient is ``(N - m - i)`` instead of
    ``(N - m - 1)``.  That variant is only correct at ``i = 1`` and exists to
    quantify the discrepancy, see :func:`printed_form_discrepancy`.
    """
    _check_p(p)
    if not 0 <= i <= N:
        raise ValueError(f"start state {i} outside [0, {N}]")
    alpha = 1.0 / (2.0 * p)
    head = math.fsum(alpha ** k for k in range(i + 1, N + 1))
    inner = (N - i) * math.fsum(alpha ** m for m in range(i))
    shift = i if printed else 1
    inner += math.fsum((N - m - shift) * alpha ** m for m in range(i, N - 1))
    return _finite(head + inner / p, f"T_{i}")


@dataclass(frozen=True)
class FormulaDiscrepancy:
    i: int
    N: int
    p: float
    recurrence: float
    printed: float

    @property
    def deviation(self) -> float:
        return self.printed - self.recurrence

    @property
    def relative_deviation(self) -> float:
        return self.deviation / self.recurrence if self.recurrence else math.inf

    @property
    def deviates(self) -> bool:
        return not math.isclose(self.printed, self.recurrence, rel_tol=1e-12, abs_tol=0.0)


def printed_form_discrepancy(i: int, N: int, p: float) -> FormulaDiscrepancy:
    """Compare the recurrence-consistent exit time with the printed-coefficient variant."""
    return FormulaDiscrepancy(i, N, p,
                              recurrence=exit_time_single(i, N, p),
                              printed=exit_time_single_series(i, N, p, printed=True))


def peak_difference(M: int, p: float) -> float:
    """``D_M = 2 + D_{M-1}``, the first difference across the barrier state."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    return _finite(2.0 + float(left_differences(M, p)[-1]), "D_M")


def two_basin_differences(params: ChainParamsTwo) -> tuple[DifferenceSequence, DifferenceSequence]:
    """Left differences ``D_0..D_{M-1}`` and right differences ``B_M..B_{N-1}``."""
    D = left_differences(params.M, params.p)
    beta = params.beta
    B = np.empty(params.R)
    b = 2.0 + D[-1]  # B_M = D_M
    for s in range(params.R):
        if s:
            b = 2.0 + beta * b
        B[s] = b
    return DifferenceSequence(D, "left"), DifferenceSequence(B, "right")


def hit_times_two(params: ChainParamsTwo) -> HittingTimeTable:
    """``T_0 .. T_N``: expected steps to reach the global minimum state ``N``."""
    D, B = two_basin_differences(params)
    diffs = np.concatenate([D.values, B.values])
    times = np.append(np.cumsum(diffs[::-1])[::-1], 0.0)
    _finite(float(times[0]), "T_0")
    return HittingTimeTable(np.arange(params.N + 1), times, "closed-form", params)


def hit_time_two(i: int, params: ChainParamsTwo) -> float:
    if not 0 <= i <= params.N:
        raise ValueError(f"start state {i} outside [0, {params.N}]")
    D, B = two_basin_differences(params)
    diffs = np.concatenate([D.values, B.values])
    return _finite(float(math.fsum(diffs[i:])), f"T_{i}")


def hit_time_two_series(i: int, params: ChainParamsTwo) -> float:
    """Piecewise power-series form of the two-basin hitting time (cross-check)."""
    M, R, p = params.M, params.R, params.p
    alpha, beta = params.alpha, params.beta
    if not 0 <= i <= params.N:
        raise ValueError(f"start state {i} outside [0, {params.N}]")
    DM = 2.0 + math.fsum(alpha ** j for j in range(M - 1)) / p + alpha ** M

    def right(s):
        return 2.0 * math.fsum(beta ** u for u in range(s)) + beta ** s * DM

    if i <= M:
        left = math.fsum(math.fsum(alpha ** j for j in range(k)) / p + alpha ** (k + 1)
                         for k in range(i, M))
        return _finite(left + math.fsum(right(s) for s in range(R)), f"T_{i}")
    return _finite(math.fsum(right(s) for s in range(i - M, R)), f"T_{i}")
