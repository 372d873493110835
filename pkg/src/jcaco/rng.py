"""Labelled, counter-based random streams.

Every random draw in the library comes from a generator addressed by a root
seed plus a tuple of labels (entity kind, index, purpose, ...).  Two calls
with the same root seed and labels always produce the same sequence, no
matter which other streams were opened before or in which order.
"""
from __future__ import annotations

import zlib

import numpy as np

__all__ = ["RngStream", "label_code"]


def label_code(label) -> int:
    """Map a stream label (int or str) to a stable non-negative integer."""
    if isinstance(label, (bool, np.bool_)):
        return int(label)
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"stream labels must be non-negative, got {label}")
        return int(label)
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    raise TypeError(f"unsupported stream label {label!r}")


class RngStream:
    """Factory of independent Philox generators keyed by labels."""

    def __init__(self, root_seed: int):
        root_seed = int(root_seed)
        if root_seed < 0 or root_seed >= 2**64:
            raise ValueError("root_seed must fit in an unsigned 64-bit integer")
        self.root_seed = root_seed

    def generator(self, *labels) -> np.random.Generator:
        key = tuple(label_code(label) for label in labels)
        seq = np.random.SeedSequence(self.root_seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(seq))

    def child(self, *labels) -> "RngStream":
        """Derive a new root seed from this one, for nesting (e.g. per sweep run)."""
        seed = int(self.generator("child", *labels).integers(0, 2**63))
        return RngStream(seed)

    def __repr__(self) -> str:
        return f"RngStream(root_seed={self.root_seed})"
