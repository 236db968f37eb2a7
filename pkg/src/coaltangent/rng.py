"""Reproducible random streams.

Every stream is a Philox (counter-based) generator keyed by
``(seed, tag, replica)``.  The tag is hashed with BLAKE2 so that stream
identity does not depend on Python's randomised ``hash``.  Replica ``i`` of a
given tag therefore draws the same numbers no matter which worker runs it or
in which order replicas complete.
"""

import hashlib

import numpy as np


def _tag_words(tag):
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed, tag="", replica=0):
    """Return the generator for ``(seed, tag, replica)``."""
    if seed is None:
        raise ValueError("a seed is required; there is no nondeterministic default")
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), _tag_words(tag), int(replica)])
    return np.random.Generator(np.random.Philox(ss))


def streams(seed, tag, count):
    return [stream(seed, tag, i) for i in range(count)]


def kernel_seed(rng):
    """Draw a seed for a compiled kernel that owns its own RNG state."""
    return int(rng.integers(0, 2**62))
