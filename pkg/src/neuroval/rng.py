"""Deterministic stream splitting for all randomness in the package.

Every consumer derives its generator from a root seed plus an integer key
path, so independent purposes (model construction, brain draws, task draws,
Monte Carlo trials, bootstrap resampling) never share a stream and results
are reproducible bit-for-bit regardless of execution order or worker count.

Purpose tags (first key element):
    0  model construction (latent map, off-subspace task direction)
    1  brain dataset draws
    2  task dataset draws
    3  Monte Carlo trials (remaining keys: replicate index, trial index)
    4  bootstrap resampling
"""

import numpy as np

MODEL_STREAM = 0
BRAIN_STREAM = 1
TASK_STREAM = 2
TRIAL_STREAM = 3
BOOTSTRAP_STREAM = 4


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for `seed` at the given key path."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key)))
