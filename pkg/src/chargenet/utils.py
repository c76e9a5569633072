"""Small shared helpers: seeded sub-streams and text formatting."""

import zlib

import numpy as np


def substream(seed, name):
    """Return a Generator derived from (seed, name).

    All randomness in the package flows from a single integer seed; each
    consumer asks for a named sub-stream so that adding a new consumer
    never perturbs the draws of existing ones.
    """
    tag = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


def fmt(value):
    """Shortest round-tripping text form of a number (ints stay ints)."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)
