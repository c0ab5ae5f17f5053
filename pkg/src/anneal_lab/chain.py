"""Explicit birth-death chains, an exact hitting-time solver, and a discrete simulator.

The solver is the independent oracle for the closed forms in
:mod:`anneal_lab.analytic`: it builds the full ``-N..N`` chain and solves the
first-step equations directly, without using any difference recurrence.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .analytic import HittingTimeTable
from .landscape import ChainParamsSingle, ChainParamsTwo
from .rng import trial_rng

DEFAULT_DISCRETE_MAX_STEPS = 10**8


class UnreachableAbsorptionError(ValueError):
    """Some transient state cannot reach the absorbing set."""


class TrialOutcome(NamedTuple):
    steps: int
    absorbed: bool


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Nearest-neighbour chain on the integer states ``lo..hi``.

    ``up[k]``, ``down[k]`` and ``stay[k]`` belong to state ``lo + k``.
    """

    lo: int
    hi: int
    up: np.ndarray
    down: np.ndarray
    stay: np.ndarray
    absorbing: frozenset

    def __post_init__(self):
        n = self.hi - self.lo + 1
        for name in ("up", "down", "stay"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (n,):
                raise ValueError(f"{name} must have length {n}, got {arr.shape}")
            if np.any(arr < 0) or np.any(arr > 1):
                raise ValueError(f"{name} probabilities must lie in [0, 1]")
            object.__setattr__(self, name, arr)
        if np.any(np.abs(self.up + self.down + self.stay - 1.0) > 1e-12):
            raise ValueError("transition probabilities must sum to 1 at every state")
        if self.up[-1] > 0 or self.down[0] > 0:
            raise ValueError("chain would leave the state range")
        for s in self.absorbing:
            if self.stay[s - self.lo] != 1.0:
                raise ValueError(f"absorbing state {s} must have stay = 1")

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def index(self, state: int) -> int:
        if not self.lo <= state <= self.hi:
            raise ValueError(f"state {state} outside [{self.lo}, {self.hi}]")
        return state - self.lo

    def absorbing_mask(self) -> np.ndarray:
        mask = np.zeros(self.hi - self.lo + 1, dtype=np.bool_)
        for s in self.absorbing:
            mask[s - self.lo] = True
        return mask


def _mirror(N: int, outward: np.ndarray, inward: np.ndarray, centre_out: float) -> ChainSpec:
    """Assemble a chain symmetric about 0 from its right half.

    ``outward[i]`` / ``inward[i]`` are the probabilities of moving away from /
    toward the centre at state ``i`` for ``1 <= i <= N-1``.
    """
    n = 2 * N + 1
    up = np.zeros(n)
    down = np.zeros(n)
    for i in range(1, N):
        up[N + i], down[N + i] = outward[i], inward[i]
        up[N - i], down[N - i] = inward[i], outward[i]
    up[N] = down[N] = centre_out
    stay = 1.0 - up - down
    stay[0] = stay[-1] = 1.0
    return ChainSpec(-N, N, up, down, stay, frozenset({-N, N}))


def build_single(params: ChainParamsSingle) -> ChainSpec:
    N, p = params.N, params.p
    outward = np.full(N, p)
    inward = np.full(N, 0.5)
    return _mirror(N, outward, inward, p)


def build_two(params: ChainParamsTwo) -> ChainSpec:
    M, N, p, q = params.M, params.N, params.p, params.q
    outward = np.empty(N)
    inward = np.empty(N)
    outward[:M], inward[:M] = p, 0.5
    outward[M], inward[M] = 0.5, 0.5
    outward[M + 1:], inward[M + 1:] = 0.5, q
    return _mirror(N, outward, inward, p)


def _can_absorb(chain: ChainSpec) -> np.ndarray:
    ok = chain.absorbing_mask()
    n = len(ok)
    changed = True
    while changed:
        changed = False
        for k in range(n):
            if ok[k]:
                continue
            if (k + 1 < n and chain.up[k] > 0 and ok[k + 1]) or (k > 0 and chain.down[k] > 0 and ok[k - 1]):
                ok[k] = changed = True
    return ok


def exact_hitting_times(chain: ChainSpec) -> HittingTimeTable:
    """Solve ``T_i = 1 + sum_j P_ij T_j`` (``T = 0`` on absorbing states) directly."""
    reach = _can_absorb(chain)
    if not reach.all():
        bad = chain.states[~reach].tolist()
        raise UnreachableAbsorptionError(
            f"states {bad} never reach an absorbing state (infinite expected time)"
        )
    times = _solve_first_step(chain.up.tolist(), chain.down.tolist(),
                              chain.absorbing_mask().tolist())
    return HittingTimeTable(chain.states, np.array(times), "exact-solve", chain)


def _solve_first_step(up, down, absorbing):
    # Thomas elimination written without subtractions.  Row k reads
    #   (up_k + down_k) T_k - up_k T_{k+1} - down_k T_{k-1} = 1.
    # Instead of the eliminated diagonal we carry its excess over the
    # remaining off-diagonal (the probability leaking to absorption), so every
    # operation combines positive numbers and each T_k keeps full relative
    # accuracy even when the system's condition number is ~alpha^N.
    n = len(up)
    piv = [0.0] * n     # eliminated diagonal
    excess = [0.0] * n  # piv minus the surviving superdiagonal
    rhs = [0.0] * n
    for k in range(n):
        if absorbing[k]:
            continue
        nxt_transient = k + 1 < n and not absorbing[k + 1]
        leak = 0.0 if nxt_transient else up[k]
        rhs[k] = 1.0
        if k > 0 and not absorbing[k - 1]:
            # eliminating T_{k-1} leaves down_k * excess_{k-1} / piv_{k-1} on the diagonal
            leak += down[k] * excess[k - 1] / piv[k - 1]
            rhs[k] += down[k] * rhs[k - 1] / piv[k - 1]
        else:
            leak += down[k]
        excess[k] = leak
        piv[k] = leak + (up[k] if nxt_transient else 0.0)
    times = [0.0] * n
    for k in range(n - 1, -1, -1):
        if absorbing[k]:
            continue
        nxt = times[k + 1] if k + 1 < n and not absorbing[k + 1] else 0.0
        up_t = up[k] if k + 1 < n and not absorbing[k + 1] else 0.0
        times[k] = (rhs[k] + up_t * nxt) / piv[k]
    return times


def first_step_residual(chain: ChainSpec, times: np.ndarray) -> np.ndarray:
    """Per-state residual of the first-step equations for a candidate solution."""
    t = np.asarray(times, dtype=float)
    nxt = np.append(t[1:], 0.0)
    prv = np.insert(t[:-1], 0, 0.0)
    res = t - (1.0 + chain.up * nxt + chain.down * prv + chain.stay * t)
    res[chain.absorbing_mask()] = t[chain.absorbing_mask()]
    return res


def simulate_discrete(chain: ChainSpec, start: int, seed: int, max_steps: int = DEFAULT_DISCRETE_MAX_STEPS,
                      trial: int = 0) -> TrialOutcome:
    """One trajectory from ``start``; the stream is keyed by ``(seed, trial)``."""
    steps, absorbed = _kernels.chain_walk(
        trial_rng(seed, trial), chain.index(start), chain.up, chain.down,
        chain.absorbing_mask(), int(max_steps),
    )
    return TrialOutcome(int(steps), bool(absorbed))
