"""Counter-based random streams addressed by integer keys.

A stream is a Philox generator whose key is derived from a tuple of
nonnegative integers (master seed, purpose, class, index, ...).  Because the
stream depends only on its key, draws are independent of the order in
which paths or samples are processed and of the number of workers.
"""

from __future__ import annotations

import numpy as np

# purpose tags keep unrelated draws on disjoint key spaces
SIMULATION = 0
SPLIT = 1
KERNELS = 2
OU_MONTECARLO = 3
BOOTSTRAP = 4
FOLDS = 5


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator addressed by ``(seed, *keys)``."""
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("stream keys must be nonnegative integers")
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit child seed addressed by ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
