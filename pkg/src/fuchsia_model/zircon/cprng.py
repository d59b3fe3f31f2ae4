from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable

from .chacha20 import keystream

DEFAULT_RESEED_INTERVAL = 1024


@dataclass
class CprngState:
    """Kernel random-number state.

    The periodic reseed is counted in draws rather than wall time:
    after ``reseed_interval`` draws the key is replaced from ``entropy``.
    """

    key: bytes = field(default_factory=lambda: os.urandom(32))
    nonce: int = 0
    draws_since_reseed: int = 0
    reseed_interval: int = DEFAULT_RESEED_INTERVAL
    entropy: Callable[[int], bytes] = field(default=os.urandom, repr=False)
    reseeds: int = 0

    def __post_init__(self):
        if len(self.key) != 32:
            raise ValueError("key must be 32 bytes")
        if self.reseed_interval < 1:
            raise ValueError("reseed_interval must be positive")


def cprng_draw(state: CprngState, n: int) -> bytes:
    """``n`` keystream bytes at the current (key, nonce); then advance the nonce."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = keystream(state.key, state.nonce.to_bytes(12, "little"), n)
    state.nonce += 1
    state.draws_since_reseed += 1
    if state.draws_since_reseed >= state.reseed_interval:
        key = state.entropy(32)
        if len(key) != 32:
            raise ValueError("entropy source returned the wrong length")
        state.key = bytes(key)
        state.draws_since_reseed = 0
        state.reseeds += 1
    return out
