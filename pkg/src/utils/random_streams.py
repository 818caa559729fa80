"""Seeded random streams.

All randomness goes through numpy's counter-based Philox generator keyed by
``(seed, stream)``. Each trial or perturbation draws from its own stream, so
results do not depend on evaluation order.
"""
import numpy as np

_MASK64 = (1 << 64) - 1


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator whose 128-bit key is ``seed`` (high) and ``stream`` (low)."""
    key = ((int(seed) & _MASK64) << 64) | (int(stream) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))
