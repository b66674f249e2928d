"""Deterministic random-stream derivation.

All randomness in the package flows from a single 64-bit master seed.
Every consumer gets its own named stream derived as

    default_rng(SeedSequence((master_seed, domain, *key)))

where ``domain`` is one of the constants below and ``key`` typically
carries a trial index and a sampler index.  Keeping the random-walk and
acceptance-test streams separate from the mini-batch selection stream is
what makes the full-batch sampler and the centralized sampler consume
identical randomness, and what makes trial-level parallelism independent
of the worker count.
"""

import numpy as np

# stream domains
CHANNEL = 0       # channel matrix entries
SYMBOLS = 1       # transmitted symbol indices
NOISE = 2         # unit-variance noise draws (scaled by sigma afterwards)
INIT_SAMPLE = 10  # initial sample x_0
BATCH = 11        # mini-batch selection
WALK = 12         # random-walk perturbation
MH = 13           # Metropolis-Hastings uniform draws


def stream(master_seed: int, domain: int, *key: int) -> np.random.Generator:
    """Return the named generator for (master_seed, domain, key...)."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, domain, *key)))
