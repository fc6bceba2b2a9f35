"""Counter-based normal draws.

The draw for (seed, particle, step) is a pure function of that triple:
the Philox key is derived from the seed, the step index sits in the second
counter word, and every particle owns a fixed run of counter blocks.  Any
partition of the particles into chunks reproduces the same numbers.
"""

import numpy as np

_KEY_SALT = np.uint64(0x9E3779B97F4A7C15)
_TWO_PI = 2.0 * np.pi
_U53 = 2.0**-53


def _key(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.array([seed, _KEY_SALT], dtype=np.uint64)


def blocks_per_particle(dim):
    """Philox blocks (four 64-bit words each) reserved per particle and step."""
    pairs = -(-dim // 2)
    return -(-pairs // 2)


def normals(seed, step, first, count, dim):
    """Standard normals of shape ``(count, dim)`` for particles ``first .. first+count-1``."""
    if step < 0 or first < 0 or count < 0:
        raise ValueError("step, first and count must be nonnegative")
    bpp = blocks_per_particle(dim)
    words = 4 * bpp
    counter = np.array([first * bpp, step, 0, 0], dtype=np.uint64)
    bg = np.random.Philox(key=_key(seed), counter=counter)
    raw = bg.random_raw(count * words).reshape(count, words)
    u = ((raw >> np.uint64(11)).astype(float) + 0.5) * _U53
    pairs = -(-dim // 2)
    u1 = u[:, 0 : 2 * pairs : 2]
    u2 = u[:, 1 : 2 * pairs : 2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty((count, 2 * pairs))
    z[:, 0::2] = r * np.cos(_TWO_PI * u2)
    z[:, 1::2] = r * np.sin(_TWO_PI * u2)
    return z[:, :dim]


def generator(seed, stream=0):
    """A ``numpy.random.Generator`` for non-path draws, keyed like :func:`normals`.

    ``stream`` selects the top counter word, keeping these draws disjoint
    from the per-step normals.
    """
    counter = np.array([0, 0, 0, int(stream) + 1], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=_key(seed), counter=counter))


def derive_seed(master, index):
    """Deterministic child seed for the ``index``-th sub-run of a master seed."""
    ss = np.random.SeedSequence([int(master), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
