"""Reproducible random streams.

Every random quantity is a pure function of a `RngSeed` plus an index, so
results never depend on how work is scheduled over threads. Two kinds of
stream are provided:

  - `RngSeed.generator(*path)` returns a numpy `Generator` seeded from a
    `SeedSequence` over (master_seed, stream_id, *path);
  - `pair_uniforms()` is a counter-based generator: the uniform for the
    unordered pair (u, v) is a splitmix64 hash of the pair, so the same edge
    is drawn whether the full graph or only one voter's incident edges are
    materialised.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TO_UNIT = 2.0**-53

# voter indices are packed as (lo << 32) | hi
MAX_VOTERS = 1 << 32


@dataclass(frozen=True)
class RngSeed:
    """Identify one random stream: (master_seed, stream_id)."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        """Validate that both parts fit in 64 bits."""
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= value <= _MASK64:
                raise InvalidInput(f"{name}={value} must be a 64-bit unsigned integer")

    def child(self, stream_id: int) -> "RngSeed":
        """Return a seed for another stream under the same master seed."""
        return RngSeed(self.master_seed, stream_id & _MASK64)

    def sequence(self, *path: int) -> np.random.SeedSequence:
        """Return the SeedSequence for this stream, optionally extended by a path."""
        return np.random.SeedSequence([self.master_seed, self.stream_id, *path])

    def generator(self, *path: int) -> np.random.Generator:
        """Return a fresh numpy Generator for this stream (and path)."""
        return np.random.default_rng(self.sequence(*path))

    def pair_key(self, *path: int) -> int:
        """Return the 64-bit key of the counter-based pair stream."""
        return int(self.sequence(0x5A17, *path).generate_state(1, dtype=np.uint64)[0])


def _splitmix64(counter: np.ndarray, key: int) -> np.ndarray:
    """Hash uint64 counters with a 64-bit key (wrapping arithmetic)."""
    z = np.asarray(counter, dtype=np.uint64) + np.uint64(key)
    z = z * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def pair_uniforms(key: int, u: np.ndarray | int, v: np.ndarray | int) -> np.ndarray:
    """
    Return uniforms in [0, 1) for the unordered pairs (u, v).

    The value depends only on `key` and on {u, v}: swapping u and v gives the
    same number.
    """
    u_arr = np.asarray(u, dtype=np.uint64)
    v_arr = np.asarray(v, dtype=np.uint64)
    lo = np.minimum(u_arr, v_arr)
    hi = np.maximum(u_arr, v_arr)
    counter = (lo << np.uint64(32)) | hi
    with np.errstate(over="ignore"):
        bits = _splitmix64(np.atleast_1d(counter), key)
    return (bits >> np.uint64(11)).astype(np.float64) * _TO_UNIT
