"""Reproducible random streams for Monte-Carlo replications.

Each stream is a Philox counter-based generator keyed by
``(seed, purpose, index)`` through :class:`numpy.random.SeedSequence`, so a
replicate draws the same numbers whether the study runs serially, in
parallel, or only partially. Gaussian variates are produced from uniforms by
the inverse normal CDF rather than by a sampler-specific algorithm.
"""

import numpy as np
from scipy.special import ndtri

PURPOSES = {"design": 0, "noise": 1, "fixture": 2}


def stream(seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    key = (PURPOSES[purpose], int(index))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))


def open_uniforms(gen: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1) with 53-bit resolution."""
    k = gen.integers(0, 2**53, size=size, dtype=np.int64)
    return (k.astype(float) + 0.5) * 2.0**-53


def normals(gen: np.random.Generator, size, sd: float = 1.0) -> np.ndarray:
    return sd * ndtri(open_uniforms(gen, size))
