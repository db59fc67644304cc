"""Shared plumbing: reproducible RNG streams and error-carrying estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Named, splittable source of randomness.

    Same (seed, stream_id) always yields the same draws; distinct stream_ids
    yield independent streams.  stream_id may be an int or a tuple of ints,
    the tuple form addressing substreams (see split).
    """

    seed: int
    stream_id: int | tuple[int, ...] = 0

    def _key(self) -> tuple[int, ...]:
        sid = self.stream_id
        return (sid,) if isinstance(sid, int) else tuple(sid)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed & _SEED_MASK, spawn_key=self._key())
        return np.random.Generator(np.random.PCG64(ss))

    def split(self, index: int) -> "RngStream":
        """Child stream, independent of the parent and of other indices."""
        if index < 0:
            raise ValueError("substream index must be nonnegative")
        return RngStream(self.seed, self._key() + (index,))


@dataclass(frozen=True)
class Estimate:
    """Point value with a one-sigma error bound (statistical or numerical)."""

    value: float
    error: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("estimate value must be finite")
        if self.error < 0 or not np.isfinite(self.error):
            raise ValueError("estimate error must be finite and nonnegative")
