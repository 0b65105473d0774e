"""Seedable, splittable random streams.

A stream is fully determined by ``(base_seed, stream_id)``. Streams are backed
by numpy's counter-based Philox generator keyed through ``SeedSequence`` so
that distinct stream ids give independent sequences and chains can run in any
order or on any number of threads without changing their output.
"""
from __future__ import annotations

import numpy as np

__all__ = ["RngStream", "chain_stream_id", "DATA_STREAM_ID"]

_MASK64 = (1 << 64) - 1

#: stream id reserved for synthetic data generation
DATA_STREAM_ID = 0


def chain_stream_id(prior_code: int, chain: int, purpose: int = 1) -> int:
    """Stream id for one MCMC chain.

    Independent of which other priors or chains are run, so a subset run
    reproduces the corresponding part of a full run.
    """
    if prior_code < 0 or chain < 0:
        raise ValueError("prior_code and chain must be non-negative")
    return ((purpose & 0xFFFF) << 48) | ((prior_code & 0xFFFF) << 32) | (chain & 0xFFFFFFFF)


class RngStream:
    """One independent random stream.

    Parameters
    ----------
    base_seed : int
        Experiment-level 64-bit seed.
    stream_id : int
        64-bit identifier of the stream within the experiment.

    Notes
    -----
    A stream owns mutable generator state and must not be shared between
    threads. Build a fresh ``RngStream`` with the same ids to replay it.
    """

    __slots__ = ("base_seed", "stream_id", "bit_generator", "generator")

    def __init__(self, base_seed: int, stream_id: int = 0):
        base_seed = int(base_seed)
        stream_id = int(stream_id)
        if not (0 <= base_seed <= _MASK64) or not (0 <= stream_id <= _MASK64):
            raise ValueError("base_seed and stream_id must be unsigned 64-bit integers")
        self.base_seed = base_seed
        self.stream_id = stream_id
        seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(stream_id,))
        self.bit_generator = np.random.Philox(seq)
        self.generator = np.random.Generator(self.bit_generator)

    def spawn(self, stream_id: int) -> "RngStream":
        """A sibling stream sharing this stream's base seed."""
        return RngStream(self.base_seed, stream_id)

    # thin conveniences used throughout the package
    def random(self, size=None):
        return self.generator.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def __repr__(self) -> str:
        return f"RngStream(base_seed={self.base_seed}, stream_id={self.stream_id})"
