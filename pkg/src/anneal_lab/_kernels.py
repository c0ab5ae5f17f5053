"""Compiled inner loops.  One call runs one trial on its own Generator."""
import math

import numba

from .landscape import single_basin_energy, two_basin_energy

_energy1 = numba.njit(inline="always")(single_basin_energy)
_energy2 = numba.njit(inline="always")(two_basin_energy)


@numba.njit(nogil=True, cache=True)
def chain_walk(rng, start, up, down, absorbing, max_steps):
    i = start
    if absorbing[i]:
        return 0, True
    for n in range(1, max_steps + 1):
        u = rng.random()
        if u < up[i]:
            i += 1
        elif u < up[i] + down[i]:
            i -= 1
        if absorbing[i]:
            return n, True
    return max_steps, False


@numba.njit(inline="always")
def _accept(de, temp, u):
    return de <= 0.0 or u < math.exp(-de / temp)


@numba.njit(nogil=True, cache=True)
def single_escape(rng, x0, width, depth, radius, seg_ends, seg_temps, max_steps):
    half = 0.5 * width
    x = x0
    if abs(x) >= half:
        return 0, True
    e = _energy1(x, width, depth)
    seg = 0
    for n in range(1, max_steps + 1):
        while n > seg_ends[seg]:
            seg += 1
        u_move = rng.random()
        u_acc = rng.random()
        xp = x + radius * (2.0 * u_move - 1.0)
        ep = _energy1(xp, width, depth)
        if _accept(ep - e, seg_temps[seg], u_acc):
            x = xp
            e = ep
            if abs(x) >= half:
                return n, True
    return max_steps, False


@numba.njit(nogil=True, cache=True)
def two_hit(rng, x0, w1, d1, w2, d2, radius, seg_ends, seg_temps, max_steps):
    target = 0.5 * w1 + 0.5 * w2
    x = x0
    if abs(x) >= target:
        return 0, True
    e = _energy2(x, w1, d1, w2, d2)
    seg = 0
    for n in range(1, max_steps + 1):
        while n > seg_ends[seg]:
            seg += 1
        u_move = rng.random()
        u_acc = rng.random()
        xp = x + radius * (2.0 * u_move - 1.0)
        ep = _energy2(xp, w1, d1, w2, d2)
        if _accept(ep - e, seg_temps[seg], u_acc):
            x = xp
            e = ep
            if abs(x) >= target:
                return n, True
    return max_steps, False
