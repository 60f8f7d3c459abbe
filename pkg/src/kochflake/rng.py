"""Counter-based random numbers.

Every draw is a pure function of (seed, counter) built from a splitmix64-style
finalizer, so results never depend on evaluation order or batching.  This is
what makes Monte Carlo trials and random tree constructions bit-reproducible
under any parallel schedule: trial i, step k always sees the same numbers.
"""

from __future__ import annotations

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_INV53 = 1.0 / (1 << 53)


def _mix(z: np.ndarray) -> np.ndarray:
    # modular uint64 arithmetic throughout: wraparound is the point
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash64(*parts) -> np.ndarray:
    """Combine integer parts (scalars or uint64 arrays) into one hashed uint64.

    The chain mix(mix(a) ^ b + GOLDEN ...) avoids linear collisions between
    neighbouring counters.
    """
    h = np.uint64(0)
    for p in parts:
        p = np.asarray(p).astype(np.uint64, copy=False)
        with np.errstate(over="ignore"):
            h = _mix((h + _GOLDEN) ^ p)
    return h


def uniform(*parts) -> np.ndarray:
    """Uniform(0,1) doubles from hashed counters (53-bit mantissa)."""
    bits = hash64(*parts) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * _INV53


def normal_pair(*parts):
    """Two independent standard normals per counter via Box-Muller.

    Uses sub-counters 0 and 1 appended to the given parts.
    """
    u1 = uniform(*parts, 0)
    u2 = uniform(*parts, 1)
    r = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    return r * np.cos(ang), r * np.sin(ang)


def choice(cum_probs: np.ndarray, *parts) -> np.ndarray:
    """Index into a cumulative distribution, one draw per counter."""
    u = uniform(*parts)
    return np.searchsorted(cum_probs, u, side="right").astype(np.int64)
