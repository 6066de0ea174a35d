"""Seeded random streams.

All randomness goes through Philox4x64 (a counter-based generator) keyed by a
``numpy.random.SeedSequence``.  Each coordinate of a generated sample gets its
own spawned child stream, so adding a coordinate never shifts the draws of the
others.  Gaussian variates are produced with the Box-Muller transform on the
uniform stream instead of numpy's ziggurat sampler.
"""

import numpy as np


def streams(seed, n, tag=0):
    """Return ``n`` independent generators derived from ``(seed, tag)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(tag)])
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(n)]


def uniform(gen, size, low=0.0, high=1.0):
    return low + (high - low) * gen.random(size)


def box_muller(gen, size):
    """Standard normal draws from pairs of uniforms."""
    size = int(size)
    m = (size + 1) // 2
    u1 = 1.0 - gen.random(m)  # (0, 1], keeps log finite
    u2 = gen.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:size]


# tags keep the streams of different generators apart for the same user seed
TAG_SAMPLE = 1
TAG_NOISE = 2
TAG_BEND = 3
TAG_TARGET = 4
TAG_DATA = 5
