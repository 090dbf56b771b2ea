"""Challenger sampling, shared by the protocol and the simulator."""

from __future__ import annotations

import random
from typing import Sequence

from .errors import ConfigurationError
from .nodes import NodeId


def sample_challengers(pool: Sequence[NodeId], k: int, rng: random.Random) -> frozenset[NodeId]:
    """Uniform sample of k distinct nodes; deterministic given the rng state."""
    if k < 0:
        raise ConfigurationError(f"sample size must be >= 0, got {k}")
    if k > len(pool):
        raise ConfigurationError(f"sample size {k} exceeds pool size {len(pool)}")
    if k == 0:
        return frozenset()
    return frozenset(rng.sample(list(pool), k))
