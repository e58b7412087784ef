"""Distributions over the Boolean cube with exact probability evaluation.

Every family here offers DUAL-style access: draw samples and evaluate the
exact probability of any point. Batches of assignments are passed around as
boolean matrices of shape ``(m, n)``; column ``j`` holds variable ``j+1``.

Explicit tables are indexed by the integer ``sum(bit_j << j)``, so the
binary string ``"b1 b2 ... bn"`` printed for an assignment reads its
variables in order, least significant bit first.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

MAX_EXPLICIT_N = 24
MAX_ENUMERATION = 1 << 24
SUM_TOLERANCE = 1e-9
_CHUNK = 1 << 16


@dataclass(frozen=True)
class Assignment:
    """A point of {0,1}^n. Equality and hashing are bitwise."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"assignment bits must be 0/1, got {self.bits!r}")

    @classmethod
    def from_string(cls, s: str) -> "Assignment":
        return cls(tuple(int(c) for c in s))

    @classmethod
    def from_array(cls, row) -> "Assignment":
        return cls(tuple(int(b) for b in np.asarray(row, dtype=bool)))

    @classmethod
    def from_index(cls, index: int, n: int) -> "Assignment":
        return cls(tuple((index >> j) & 1 for j in range(n)))

    @property
    def n(self) -> int:
        return len(self.bits)

    def index(self) -> int:
        return sum(b << j for j, b in enumerate(self.bits))

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=bool)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


def bits_to_index(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=bool)
    n = bits.shape[1]
    if n > 62:
        raise ValueError("integer indexing supports n <= 62")
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    return bits.astype(np.int64) @ weights


def index_to_bits(index: np.ndarray, n: int) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64)
    return ((index[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def iter_cube(n: int, chunk: int = _CHUNK):
    """Yield ``(start, bits)`` blocks covering {0,1}^n in index order."""
    if (1 << n) > MAX_ENUMERATION:
        raise ValueError(f"cannot enumerate {{0,1}}^{n}")
    total = 1 << n
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield start, index_to_bits(idx, n)


def row_keys(bits: np.ndarray) -> np.ndarray:
    """Hashable, sortable per-row keys (packed bytes viewed as void)."""
    packed = np.packbits(np.ascontiguousarray(bits, dtype=bool), axis=1)
    packed = np.ascontiguousarray(packed)
    return packed.view(np.dtype((np.void, packed.shape[1]))).ravel()


class Distribution(ABC):
    """Base class: exact probabilities plus sampling from a caller's Generator."""

    n: int

    @abstractmethod
    def prob_batch(self, bits: np.ndarray) -> np.ndarray:
        """Exact probabilities for each row of an ``(m, n)`` boolean matrix."""

    @abstractmethod
    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` i.i.d. points as an ``(size, n)`` boolean matrix."""

    def _check_dim(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[1] != self.n:
            raise ValueError(
                f"dimension mismatch: expected rows of length {self.n}, got shape {bits.shape}"
            )
        return bits

    def prob(self, sigma: Assignment) -> float:
        if sigma.n != self.n:
            raise ValueError(f"dimension mismatch: assignment has {sigma.n} bits, distribution has {self.n}")
        return float(self.prob_batch(sigma.to_array()[None, :])[0])

    def sample(self, rng: np.random.Generator) -> Assignment:
        return Assignment.from_array(self.sample_batch(rng, 1)[0])

    def dense(self) -> np.ndarray:
        """Probability of every point of the cube, by integer index."""
        if self.n > MAX_EXPLICIT_N:
            raise ValueError(f"n={self.n} is too large for a dense table")
        out = np.empty(1 << self.n)
        for start, bits in iter_cube(self.n):
            out[start : start + len(bits)] = self.prob_batch(bits)
        return out

    def support_table(self) -> tuple[np.ndarray, np.ndarray]:
        """``(bits, probs)`` over the points of positive probability."""
        probs = self.dense()
        idx = np.flatnonzero(probs > 0)
        return index_to_bits(idx, self.n), probs[idx]

    def to_explicit(self) -> "ExplicitDistribution":
        return ExplicitDistribution(self.n, self.dense())


class ExplicitDistribution(Distribution):
    """A full probability table over {0,1}^n for n <= 24."""

    def __init__(self, n: int, probs):
        if not 1 <= n <= MAX_EXPLICIT_N:
            raise ValueError(f"explicit tables need 1 <= n <= {MAX_EXPLICIT_N}, got {n}")
        probs = np.array(probs, dtype=float)
        if probs.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} probabilities, got {probs.shape}")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and nonnegative")
        total = probs.sum()
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        probs.setflags(write=False)
        self.n = n
        self.probs = probs
        cdf = np.cumsum(probs)
        cdf.setflags(write=False)
        self._cdf = cdf

    @classmethod
    def from_mapping(cls, n: int, table: Mapping) -> "ExplicitDistribution":
        """Build from ``{Assignment | "0110": prob}``; missing points get 0."""
        probs = np.zeros(1 << n)
        for key, p in table.items():
            sigma = Assignment.from_string(key) if isinstance(key, str) else key
            if sigma.n != n:
                raise ValueError(f"assignment {sigma} does not have {n} bits")
            probs[sigma.index()] += p
        return cls(n, probs)

    @classmethod
    def uniform(cls, n: int) -> "ExplicitDistribution":
        return cls(n, np.full(1 << n, 1.0 / (1 << n)))

    def prob_batch(self, bits):
        bits = self._check_dim(bits)
        return self.probs[bits_to_index(bits)]

    def sample_batch(self, rng, size):
        u = rng.random(size) * self._cdf[-1]
        idx = np.searchsorted(self._cdf, u, side="right")
        np.minimum(idx, len(self._cdf) - 1, out=idx)
        return index_to_bits(idx, self.n)

    def dense(self):
        return self.probs

    def to_mapping(self) -> dict[str, float]:
        return {
            str(Assignment.from_index(int(i), self.n)): float(self.probs[i])
            for i in np.flatnonzero(self.probs)
        }


class ProductDistribution(Distribution):
    """Independent bits; ``marginals[j]`` is the probability that bit j is 1."""

    def __init__(self, marginals: Sequence[float]):
        m = np.array(marginals, dtype=float)
        if m.ndim != 1 or len(m) == 0:
            raise ValueError("need at least one marginal")
        if np.any((m < 0) | (m > 1)):
            raise ValueError("marginals must lie in [0, 1]")
        m.setflags(write=False)
        self.n = len(m)
        self.marginals = m
        with np.errstate(divide="ignore"):
            self._log_on = np.log(m)
            self._log_off = np.log1p(-m)

    def log_prob_batch(self, bits):
        bits = self._check_dim(bits)
        terms = np.where(bits, self._log_on, self._log_off)
        return terms.sum(axis=1)

    def prob_batch(self, bits):
        return np.exp(self.log_prob_batch(bits))

    def sample_batch(self, rng, size):
        return rng.random((size, self.n)) < self.marginals

    def support_table(self):
        if self.n > MAX_EXPLICIT_N:
            free = np.flatnonzero((self.marginals > 0) & (self.marginals < 1))
            if len(free) > MAX_EXPLICIT_N:
                raise ValueError("support too large to enumerate")
            base = self.marginals == 1
            rows = np.tile(base, (1 << len(free), 1))
            rows[:, free] = index_to_bits(np.arange(1 << len(free)), len(free))
            probs = self.prob_batch(rows)
            return rows, probs
        return super().support_table()


class UnionOfProducts(Distribution):
    """Weighted union of two product distributions on n = 3k+1 variables.

    Storage (0-based columns):
      * ``[0, 2k)``   block forced to 1 when the selector is 0
      * ``[2k, 3k)``  weighted block, each set bit multiplies the weight by 3;
                      forced to 1 when the selector is 1
      * ``3k``        branch selector

    The support is the satisfying set of
    ``AND_{i<=2k} (s or x_i)  AND  AND_{2k<i<=3k} (not s or x_i)``
    and ``P(x) = 3^{#ones in weighted block} / Z`` with ``Z = 4^k (1 + 3^k)``.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.n = 3 * k + 1
        # log Z = k log 4 + log(1 + 3^k)
        self.log_z = k * math.log(4.0) + k * math.log(3.0) + math.log1p(3.0 ** -k)
        self.p_branch1 = 1.0 / (1.0 + 3.0 ** -k)

    @property
    def normalizer(self) -> float:
        return 4.0 ** self.k * (1.0 + 3.0 ** self.k)

    @property
    def support_size(self) -> int:
        return 2 ** self.k + 4 ** self.k

    def satisfies(self, bits: np.ndarray) -> np.ndarray:
        bits = self._check_dim(bits)
        k = self.k
        sel = bits[:, 3 * k]
        forced0 = bits[:, : 2 * k].all(axis=1)
        forced1 = bits[:, 2 * k : 3 * k].all(axis=1)
        return np.where(sel, forced1, forced0)

    def log_prob_batch(self, bits):
        bits = self._check_dim(bits)
        k = self.k
        ones = bits[:, 2 * k : 3 * k].sum(axis=1)
        logp = ones * math.log(3.0) - self.log_z
        return np.where(self.satisfies(bits), logp, -np.inf)

    def prob_batch(self, bits):
        return np.exp(self.log_prob_batch(bits))

    def sample_batch(self, rng, size):
        k = self.k
        branch = rng.random(size) < self.p_branch1
        out = np.empty((size, self.n), dtype=bool)
        free_first = rng.random((size, 2 * k)) < 0.5
        free_weighted = rng.random((size, k)) < 0.75
        out[:, : 2 * k] = np.where(branch[:, None], free_first, True)
        out[:, 2 * k : 3 * k] = np.where(branch[:, None], True, free_weighted)
        out[:, 3 * k] = branch
        return out

    def support_table(self):
        k = self.k
        if self.support_size > MAX_ENUMERATION:
            raise ValueError(f"support of size {self.support_size} is too large to enumerate")
        b0 = np.zeros((2 ** k, self.n), dtype=bool)
        b0[:, : 2 * k] = True
        b0[:, 2 * k : 3 * k] = index_to_bits(np.arange(2 ** k), k)
        b1 = np.zeros((4 ** k, self.n), dtype=bool)
        b1[:, : 2 * k] = index_to_bits(np.arange(4 ** k), 2 * k)
        b1[:, 2 * k : 3 * k] = True
        b1[:, 3 * k] = True
        rows = np.concatenate([b0, b1])
        return rows, self.prob_batch(rows)


class LogLinearDistribution(Distribution):
    """``P(x) ∝ exp(sum_j x_j theta_j)`` on a support set.

    ``support`` is a vectorised predicate mapping an ``(m, n)`` boolean matrix
    to a length-``m`` boolean mask. Without it the support is the whole cube
    and the family is a product distribution with logistic marginals. With it
    the normaliser is computed by enumeration, so n must be at most 24.
    """

    def __init__(self, theta: Sequence[float], support: Callable[[np.ndarray], np.ndarray] | None = None):
        theta = np.array(theta, dtype=float)
        if theta.ndim != 1 or len(theta) == 0:
            raise ValueError("theta must be a nonempty vector")
        if np.any(theta <= 0):
            raise ValueError("theta entries must be positive")
        theta.setflags(write=False)
        self.n = len(theta)
        self.theta = theta
        self.support = support
        if support is None:
            self._inner: Distribution = ProductDistribution(1.0 / (1.0 + np.exp(-theta)))
        else:
            if self.n > MAX_EXPLICIT_N:
                raise ValueError(
                    f"constrained log-linear distributions need n <= {MAX_EXPLICIT_N}, got {self.n}"
                )
            logw = np.full(1 << self.n, -np.inf)
            for start, bits in iter_cube(self.n):
                mask = np.asarray(support(bits), dtype=bool)
                logw[start : start + len(bits)] = np.where(mask, bits @ theta, -np.inf)
            top = logw.max()
            if not np.isfinite(top):
                raise ValueError("support is empty")
            w = np.exp(logw - top)
            self._inner = ExplicitDistribution(self.n, w / w.sum())

    def prob_batch(self, bits):
        return self._inner.prob_batch(self._check_dim(bits))

    def sample_batch(self, rng, size):
        return self._inner.sample_batch(rng, size)

    def dense(self):
        return self._inner.dense()

    def support_table(self):
        return self._inner.support_table()


def support_from_strings(strings: Iterable[str], n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Membership predicate for an explicit list of binary strings."""
    keys = np.unique(row_keys(np.array([[c == "1" for c in s] for s in strings], dtype=bool).reshape(-1, n)))

    def member(bits: np.ndarray) -> np.ndarray:
        return np.isin(row_keys(bits), keys)

    return member


# -- distances ---------------------------------------------------------------


def _aligned(d1: Distribution, d2: Distribution, extra: np.ndarray | None = None):
    if d1.n != d2.n:
        raise ValueError(f"dimension mismatch: {d1.n} vs {d2.n}")
    try:
        rows1, _ = d1.support_table()
        rows2, _ = d2.support_table()
    except ValueError as exc:
        raise ValueError(f"distributions are not enumerable: {exc}") from exc
    parts = [rows1, rows2] + ([extra] if extra is not None else [])
    rows = np.concatenate(parts)
    _, first = np.unique(row_keys(rows), return_index=True)
    rows = rows[np.sort(first)]
    return rows, d1.prob_batch(rows), d2.prob_batch(rows)


def _subset_bits(subset, n: int) -> np.ndarray:
    rows = [s.to_array() if isinstance(s, Assignment) else np.asarray(s, dtype=bool) for s in subset]
    if not rows:
        return np.zeros((0, n), dtype=bool)
    bits = np.array(rows, dtype=bool)
    _, first = np.unique(row_keys(bits), return_index=True)
    return bits[np.sort(first)]


def tv_distance(d1: Distribution, d2: Distribution, subset=None) -> float:
    """Exact total variation distance, optionally restricted to ``subset``."""
    if subset is not None:
        bits = _subset_bits(subset, d1.n)
        if d1.n != d2.n:
            raise ValueError(f"dimension mismatch: {d1.n} vs {d2.n}")
        return 0.5 * float(np.abs(d1.prob_batch(bits) - d2.prob_batch(bits)).sum()) if len(bits) else 0.0
    _, p1, p2 = _aligned(d1, d2)
    return min(1.0, 0.5 * float(np.abs(p1 - p2).sum()))


def mult_distance(d1: Distribution, d2: Distribution) -> float:
    """``max |d2(x)/d1(x) - 1|``; infinite when d2 has mass outside d1's support."""
    _, p1, p2 = _aligned(d1, d2)
    if np.any((p1 == 0) & (p2 > 0)):
        return math.inf
    pos = p1 > 0
    return float(np.max(np.abs(p2[pos] / p1[pos] - 1.0)))


# -- benchmark descriptors ---------------------------------------------------

FAMILIES = ("union_of_products", "explicit", "product", "loglinear")


def from_descriptor(desc: Mapping) -> Distribution:
    """Instantiate a distribution from a benchmark descriptor mapping."""
    family = desc.get("family")
    params = desc.get("params", {})
    if family == "union_of_products":
        return UnionOfProducts(int(params["k"]))
    if family == "explicit":
        n = int(params["n"])
        return ExplicitDistribution.from_mapping(n, params["probs"])
    if family == "product":
        return ProductDistribution(params["marginals"])
    if family == "loglinear":
        theta = params["theta"]
        support = params.get("support")
        pred = support_from_strings(support, len(theta)) if support is not None else None
        return LogLinearDistribution(theta, pred)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def to_descriptor(dist: Distribution, seed: int = 0, name: str | None = None) -> dict:
    if isinstance(dist, UnionOfProducts):
        out = {"family": "union_of_products", "params": {"k": dist.k}}
    elif isinstance(dist, ExplicitDistribution):
        out = {"family": "explicit", "params": {"n": dist.n, "probs": dist.to_mapping()}}
    elif isinstance(dist, ProductDistribution):
        out = {"family": "product", "params": {"marginals": dist.marginals.tolist()}}
    elif isinstance(dist, LogLinearDistribution):
        params: dict = {"theta": dist.theta.tolist()}
        if dist.support is not None:
            rows, _ = dist.support_table()
            params["support"] = [str(Assignment.from_array(r)) for r in rows]
        out = {"family": "loglinear", "params": params}
    else:
        raise TypeError(f"no descriptor form for {type(dist).__name__}")
    if name is not None:
        out["name"] = name
    out["seed"] = int(seed)
    return out


def random_explicit(n: int, rng: np.random.Generator, support_fraction: float = 1.0) -> ExplicitDistribution:
    """Symmetric Dirichlet table: normalised i.i.d. exponential weights."""
    w = rng.exponential(size=1 << n)
    if support_fraction < 1.0:
        keep = rng.random(1 << n) < support_fraction
        keep[rng.integers(1 << n)] = True
        w = np.where(keep, w, 0.0)
    return ExplicitDistribution(n, w / w.sum())
