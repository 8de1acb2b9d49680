"""Seed derivation and random streams.

Every random draw in warpbench comes from numpy's PCG64 bit generator seeded
through a SeedSequence, so streams are identical across platforms and numpy
versions that keep the PCG64/SeedSequence contract.
"""
import numpy as np


def derive_seed(seed: int, *stream: int) -> int:
    """Deterministic 64-bit child seed for (seed, *stream)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent PCG64 generator for the stream (seed, *stream)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(sequence))
