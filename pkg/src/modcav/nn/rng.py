"""Deterministic, splittable random streams.

Every source of randomness in the package flows through :class:`SeedStream`,
a thin wrapper over numpy's counter-based Philox generator. Identical seeds
produce identical streams on every platform, and streams can be split into
independent named children so that pipeline stages (and frames within a
stage) draw from non-overlapping, order-independent sources.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _derive_key(seed: int, label: str) -> int:
    h = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(h[:8], "little")


class SeedStream:
    """Counter-based random stream identified by (seed, path of labels)."""

    def __init__(self, seed: int, _label: str = ""):
        self.seed = int(seed) & _MASK64
        self.label = _label
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def split(self, label) -> "SeedStream":
        """Derive an independent child stream. Same (seed, label) => same child."""
        label = str(label)
        child = SeedStream.__new__(SeedStream)
        child.seed = _derive_key(self.seed, label)
        child.label = f"{self.label}/{label}" if self.label else label
        child._gen = np.random.Generator(np.random.Philox(key=child.seed))
        return child

    # Draw helpers; all return float64 / int64.
    def normal(self, size=None, loc=0.0, scale=1.0):
        return self._gen.normal(loc=loc, scale=scale, size=size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low=low, high=high, size=size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high=high, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, n, size=None, replace=True):
        return self._gen.choice(n, size=size, replace=replace)

    def __repr__(self):
        return f"SeedStream(seed={self.seed}, label={self.label!r})"
