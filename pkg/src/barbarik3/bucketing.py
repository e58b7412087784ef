"""Dyadic bucketing of the cube by target probability.

Bucket ``i`` in ``1..k`` holds the points with ``2^-i < P(x) <= 2^-(i-1)``;
bucket 0 collects everything else (``P(x) <= 2^-k``, including zero mass).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Assignment
from .oracles import DualOracle, SamplerOracle


def compute_k(n: int, eta: float) -> int:
    """Number of nonzero buckets, ``n + ceil(log2(100/eta))``.

    Guarantees ``2^(n-k) <= eta/100``, which bounds the target mass of bucket 0.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    return n + math.ceil(math.log2(100 / eta))


def bucket_of_prob(probs, k: int) -> np.ndarray:
    """Bucket index for each probability.

    ``frexp`` splits ``p = mant * 2**e`` exactly (subnormals included), so
    no logarithm is rounded: ``p`` in ``(2^(e-1), 2^e)`` lands in bucket
    ``1-e`` and an exact power ``2^(e-1)`` lands in bucket ``2-e``, the one
    whose closed upper edge it is.
    """
    probs = np.asarray(probs, dtype=float)
    mant, exp = np.frexp(probs)
    idx = 1 - exp.astype(np.int64)
    idx = np.where(mant == 0.5, idx + 1, idx)
    return np.where((probs > 0) & (idx >= 1) & (idx <= k), idx, 0)


@dataclass(frozen=True)
class BucketingContext:
    k: int
    dual: DualOracle

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")

    @classmethod
    def for_target(cls, dual: DualOracle, eta: float) -> "BucketingContext":
        return cls(compute_k(dual.n, eta), dual)

    def classify(self, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Query P on each row via DUAL; return ``(bucket indices, probabilities)``."""
        probs = self.dual.prob(bits)
        return bucket_of_prob(probs, self.k), probs


def bucket_index(ctx: BucketingContext, sigma: Assignment) -> int:
    return int(bucket_of_prob([ctx.dual.query(sigma)], ctx.k)[0])


class BucketSampler:
    """Draws from B_D: sample ``x ~ D`` and report the bucket of ``P(x)``.

    ``source`` is the target's DUAL oracle (for B_P) or the sampler oracle
    (for B_Q). Each draw costs one SAMP query on the source and one DUAL
    probability query on the target.
    """

    def __init__(self, ctx: BucketingContext, source: DualOracle | SamplerOracle, chunk: int = 1 << 15):
        if source.n != ctx.dual.n:
            raise ValueError(f"dimension mismatch: source n={source.n}, target n={ctx.dual.n}")
        self.ctx = ctx
        self.source = source
        self.chunk = chunk

    @property
    def k(self) -> int:
        return self.ctx.k

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty(size, dtype=np.int64)
        for start in range(0, size, self.chunk):
            m = min(self.chunk, size - start)
            bits = self.source.sample(rng, m)
            out[start : start + m], _ = self.ctx.classify(bits)
        return out


def sample_bucket(ctx: BucketingContext, source, rng: np.random.Generator) -> int:
    return int(BucketSampler(ctx, source).draw(rng, 1)[0])
