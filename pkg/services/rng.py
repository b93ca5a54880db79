"""
Counter-based random streams for the Monte Carlo partitions.

Each partition owns one Philox stream keyed by (seed, partition id). Within a
stream the Philox counter advances with every draw, so a given
(seed, partition, trial, draw) position always yields the same value no
matter how many partitions run at once or in which order.
"""

from __future__ import annotations

import numpy as np

from utils.errors import ContractError

SEED_MASK = (1 << 64) - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0:
        raise ContractError(f"seed must be a non-negative 64-bit integer, got {seed}")
    return seed & SEED_MASK


def stream_key(seed: int, partition_id: int, *extra: int) -> np.random.SeedSequence:
    if int(partition_id) < 0:
        raise ContractError(f"partition id must be >= 0, got {partition_id}")
    return np.random.SeedSequence([_check_seed(seed), int(partition_id), *(int(e) for e in extra)])


def make_stream(seed: int, partition_id: int = 0, *extra: int) -> np.random.Generator:
    """Independent generator for one partition (optionally one sweep point)."""
    return np.random.Generator(np.random.Philox(stream_key(seed, partition_id, *extra)))


def derive_seed(seed: int, index: int) -> int:
    """Child seed for the ``index``-th sweep point of a run."""
    child = np.random.SeedSequence([_check_seed(seed), int(index)])
    return int(child.generate_state(1, dtype=np.uint64)[0])
