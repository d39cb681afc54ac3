"""Seeded random streams.

Every random draw in a run comes from a named substream derived from one
64-bit seed through :class:`numpy.random.SeedSequence` spawn keys, using
the PCG64 bit generator.  Substreams are keyed by name rather than by
draw order, so building ``W`` before or after ``W_in`` gives the same
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Fixed ids; changing these changes every generated network.
STREAMS = {
    "W": 0,
    "W_in": 1,
    "W_fb": 2,
    "samples": 3,
    "default": 4,
}

_SEED_MASK = (1 << 64) - 1


class InvalidRangeError(ValueError):
    pass


@dataclass(frozen=True)
class SeededRng:
    seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _SEED_MASK:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    def substream(self, name: str) -> np.random.Generator:
        """Fresh generator for ``name``; calling twice replays the stream."""
        try:
            key = STREAMS[name]
        except KeyError:
            raise KeyError(f"unknown substream {name!r}") from None
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(key,))
        return np.random.Generator(np.random.PCG64(ss))


def rng_uniform(rng: SeededRng | np.random.Generator, lo: float, hi: float,
                count: int, stream: str = "default") -> np.ndarray:
    """``count`` draws from Uniform[lo, hi)."""
    if not lo < hi:
        raise InvalidRangeError(f"need lo < hi, got lo={lo}, hi={hi}")
    if count < 0:
        raise InvalidRangeError(f"count must be >= 0, got {count}")
    gen = rng.substream(stream) if isinstance(rng, SeededRng) else rng
    # generator.uniform can round up to hi for tiny spans
    out = lo + (hi - lo) * gen.random(count)
    return np.minimum(out, np.nextafter(hi, lo))
