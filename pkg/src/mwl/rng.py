"""Seeded random streams.

Every generator is numpy's PCG64 seeded through ``SeedSequence``. Named
substreams use entropy ``[seed, label_code]`` where ``label_code`` is the first
four bytes of the SHA-256 of the label; indexed substreams (one per Monte Carlo
trial or batch) are the spawn children ``SeedSequence(seed, spawn_key=(i,))``.
Neither depends on execution order, so batched or threaded runs reproduce a
sequential run exactly.
"""
import hashlib

import numpy as np


def label_code(label):
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:4], "little")


def substream(seed, label):
    """Generator for the named substream ``label`` of master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), label_code(label)])))


def indexed_stream(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))
