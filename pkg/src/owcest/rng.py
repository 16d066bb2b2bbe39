"""Counter-based seed derivation for reproducible Monte Carlo runs.

Every random draw in the package is keyed by a master seed plus integer
indices (draw number, SNR point, trial, ...), so results are identical no
matter how work is batched or scheduled.
"""

import numpy as np


def child_seed(master_seed, *key):
    """A SeedSequence for (master_seed, *key); stable across runs."""
    entropy = (int(master_seed),) + tuple(int(k) for k in key)
    return np.random.SeedSequence(entropy)


def child_rng(master_seed, *key):
    """A Generator seeded from (master_seed, *key)."""
    return np.random.default_rng(child_seed(master_seed, *key))
