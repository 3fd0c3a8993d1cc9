"""Counter-based random-number streams.

Every stochastic routine in the package draws from a Philox generator keyed
by (seed, replicate_index, stream_tag).  Philox is counter-based, so streams
for distinct keys are independent and a replicate can be regenerated in
isolation, which is what makes the two-phase estimators in ``diagnostics``
(vectorized screening, then exact path reconstruction for survivors) and
parallel chunked accumulation reproducible.
"""

from __future__ import annotations

import numpy as np

# Stream tags. One tag per independent noise source of a replicate;
# the key layout reserves eight tags per replicate index.
JUMP_STREAM = 0
GAUSS_STREAM = 1
INTEGRAND_STREAM = 2
AUX_STREAM = 3

_MASK = (1 << 64) - 1


def substream(seed: int, replicate_index: int = 0, tag: int = 0) -> np.random.Generator:
    """Independent generator for one (replicate, noise source) pair."""
    key = np.array([seed & _MASK, ((replicate_index << 3) | tag) & _MASK],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
