"""One root seed, many independent streams.

Every random draw in an experiment comes from a generator built here.
The (purpose, index...) tuple is a spawn key on numpy's SeedSequence, a
counter-based splitter: streams for different purposes or seeds never
collide and adding draws to one stream cannot shift any other.
"""

import numpy as np

__all__ = ["PURPOSES", "rng_for"]

PURPOSES = {
    "data": 0,
    "denoiser_init": 1,
    "classifier_init": 2,
    "denoiser_train": 3,
    "classifier_train": 4,
    "sampling": 5,
    "augment": 6,
    "degrade": 7,
}


def rng_for(root_seed, purpose, *indices):
    if purpose not in PURPOSES:
        raise KeyError(f"unknown purpose {purpose!r}; add it to PURPOSES")
    key = (PURPOSES[purpose],) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(root_seed), spawn_key=key))
