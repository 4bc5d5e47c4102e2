"""Counter-based deterministic random substreams.

Every stochastic operation in the engine draws from an explicitly passed
stream, never from global state. A stream is addressed, not seeded: its
identity is ``(master_seed, path)`` where ``path`` is a tuple of
``(label, counter)`` pairs. The underlying generator is keyed by a SHA-256
digest of that address, so recreating the same address anywhere (another
thread, another process, another run) replays the identical draw sequence,
and distinct addresses give statistically independent streams.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF

PathEntry = tuple[str, int]


class SeedStream:
    """A named, counter-addressed random substream.

    Instances are cheap handles; the generator is materialized lazily on the
    first draw. Draws advance internal state, so one instance must not be
    shared between concurrent workers: derive a child per work item instead
    (children never share state with their parent or siblings).
    """

    __slots__ = ("master_seed", "path", "_gen")

    def __init__(self, master_seed: int, path: tuple[PathEntry, ...] = ()):
        self.master_seed = int(master_seed) & _MASK64
        self.path: tuple[PathEntry, ...] = tuple(
            (str(label), int(counter)) for label, counter in path
        )
        self._gen = None

    def child(self, label: str, counter: int = 0) -> "SeedStream":
        """Derive an independent substream under ``(label, counter)``."""
        return SeedStream(self.master_seed, self.path + ((str(label), int(counter)),))

    def _key(self) -> np.ndarray:
        h = hashlib.sha256()
        h.update(struct.pack("<Q", self.master_seed))
        for label, counter in self.path:
            raw = label.encode("utf-8")
            h.update(struct.pack("<I", len(raw)))
            h.update(raw)
            h.update(struct.pack("<q", counter))
        # Philox-4x64 takes a 2-word key; use the first 16 digest bytes
        return np.frombuffer(h.digest()[:16], dtype=np.uint64)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.Generator(np.random.Philox(key=self._key()))
        return self._gen

    def normal(self, n: int) -> np.ndarray:
        """n i.i.d. standard-normal draws (float64)."""
        return self.generator.standard_normal(int(n))

    def uniform(self, n: int) -> np.ndarray:
        """n i.i.d. U(0,1) draws (float64)."""
        return self.generator.random(int(n))

    def integers(self, low: int, high: int, n: int = 1) -> np.ndarray:
        """n i.i.d. integers in [low, high)."""
        return self.generator.integers(int(low), int(high), size=int(n))

    def __repr__(self) -> str:  # pragma: no cover
        return f"SeedStream(seed={self.master_seed}, path={self.path})"


def draw_gaussian(stream: SeedStream, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. standard-normal values from ``stream``."""
    return stream.normal(n)
