"""Keyed random streams.

Every consumer of randomness (one graph node, one simulated user, one
policy) gets its own Philox stream addressed by ``(seed, domain, index)``.
Streams never overlap, so results do not depend on the order in which
streams are consumed.
"""
from functools import lru_cache

import numpy as np

DOMAINS = {
    "graph": 1,
    "user": 2,
    "policy": 3,
    "permutation": 4,
    "sampling": 5,
}


@lru_cache(maxsize=256)
def _key(seed, domain):
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, DOMAINS[domain]]
    return tuple(int(k) for k in np.random.SeedSequence(entropy).generate_state(2, np.uint64))


def keyed_generator(seed, domain, index=0):
    """Return a generator for stream ``index`` of ``domain`` under ``seed``."""
    key = np.array(_key(seed, domain), dtype=np.uint64)
    counter = np.array([0, 0, int(index), 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


class UniformBuffer:
    """Hands out uniforms from a generator one at a time, drawn in blocks."""

    def __init__(self, gen, block=1024):
        self._gen = gen
        self._block = block
        self._buf = []
        self._pos = 0

    def __call__(self):
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(self._block).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x
