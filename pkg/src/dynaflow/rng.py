"""Seeded, splittable random streams.

Every randomized component takes an RngStream rather than a bare seed so
that the streams of independent data structures never overlap: distinct
stream paths under the same root seed are statistically independent, and
the same (seed, path) always reproduces the same draws.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random stream.

    `path` is a tuple of small integers; `child(i)` extends it.  Two streams
    with different paths (under any common root) are independent, which is
    how the separation of Checker / Locator / sketch randomness is enforced
    structurally.
    """

    seed: int
    path: tuple[int, ...] = field(default=())

    def child(self, *idx: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(idx))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))


def state_seeded_generator(*parts) -> np.random.Generator:
    """Generator keyed by a hash of logical state (not by a stream position).

    Used where output must be a pure function of the current data-structure
    state: identical state implies identical draws, and producing the draws
    consumes nothing, so queries stay side-effect free.
    """
    import hashlib

    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p).tobytes())
        else:
            h.update(repr(p).encode())
        h.update(b"\x00")
    key = int.from_bytes(h.digest(), "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))
