"""Named, seeded random streams.

Each randomized step draws from its own stream keyed by (seed, step name), so
adding a draw to one step never shifts another step's sequence.
"""
import numpy as np

_MASK = (1 << 64) - 1
STREAMS = {"egos": 1, "arms": 2, "clusters": 3, "lpa": 4, "noise": 5}


def stream(seed, name):
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _MASK, STREAMS[name]]))


def replication_seed(master_seed, rep):
    """Seed for replication ``rep``; a pure function of (master_seed, rep)."""
    ss = np.random.SeedSequence([int(master_seed) & _MASK, 0, int(rep)])
    return int(ss.generate_state(1, np.uint64)[0])
