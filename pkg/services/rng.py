"""Counter-based random streams.

All randomness goes through NumPy's Philox4x64-10 bit generator. A stream is
keyed by the caller's 64-bit seed; the two high counter words hold the step
index and a purpose tag, so draws for (seed, purpose, step) never overlap with
any other stream and reproduce on every platform.
"""
from enum import IntEnum

import numpy as np

RNG_ID = "numpy.Philox4x64-10"
SEED_LIMIT = 2 ** 64


class Purpose(IntEnum):
    """Tags separating the streams used by different engines."""
    GENERATOR = 1
    WALK = 2
    LLL = 3
    GREEDY = 4
    INDEPENDENT = 5
    SIMULATION = 6
    SPARSIFY = 7


def check_seed(seed: int) -> int:
    """Validate a 64-bit unsigned seed."""
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) < SEED_LIMIT:
        raise ValueError(f"seed must be in [0, 2^64), got {seed}")
    return int(seed)


def stream(seed: int, purpose: Purpose, step: int = 0) -> np.random.Generator:
    """Return the generator for (seed, purpose, step)."""
    seed = check_seed(seed)
    counter = np.array([0, 0, step, int(purpose)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))
