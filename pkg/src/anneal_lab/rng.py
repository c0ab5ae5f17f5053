"""Seed plumbing: every trial gets its own stream keyed by (seed, trial index)."""
import numpy as np


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(trial),)))
    )


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit seed for a sub-experiment (sweep point, configuration, ...)."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])
