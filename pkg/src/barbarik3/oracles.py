"""Oracle access (SAMP, PCOND, DUAL), the query ledger, and fault injection."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    Assignment,
    Distribution,
    ExplicitDistribution,
    mult_distance,
    tv_distance,
)

SAMP_P = "samp_p"
SAMP_Q = "samp_q"
PCOND = "pcond"
DUAL = "dual"
QUERY_KINDS = (SAMP_P, SAMP_Q, PCOND, DUAL)
SAMPLER_KINDS = (SAMP_Q, PCOND)
TARGET_KINDS = (SAMP_P, DUAL)

REJECTION_CAP = 10**6
MAX_FAULT_RETRIES = 10


class BudgetExceeded(Exception):
    """A sampler query would push the ledger past its budget."""


class ZeroMassPair(ValueError):
    pass


@dataclass
class Ledger:
    """Exact per-phase query counters with an optional sampler-query budget.

    Sampler queries are SAMP draws from the sampler under test plus PCOND
    draws; the budget caps their sum. A charge that would exceed the budget
    raises before anything is recorded.
    """

    budget: int | None = None
    phase: str = "setup"
    counts: dict[str, Counter] = field(default_factory=dict)
    pcond_attempts: int = 0

    def charge(self, kind: str, amount: int = 1) -> None:
        if kind not in QUERY_KINDS:
            raise ValueError(f"unknown query kind {kind!r}")
        if amount < 0:
            raise ValueError("cannot charge a negative amount")
        if kind in SAMPLER_KINDS and self.budget is not None:
            if self.sampler_queries + amount > self.budget:
                raise BudgetExceeded(
                    f"{kind} x{amount} in phase {self.phase!r} would exceed the budget of "
                    f"{self.budget} sampler queries ({self.sampler_queries} used)"
                )
        self.counts.setdefault(self.phase, Counter())[kind] += amount

    def total(self, kind: str) -> int:
        return sum(c[kind] for c in self.counts.values())

    @property
    def sampler_queries(self) -> int:
        return sum(self.total(k) for k in SAMPLER_KINDS)

    @property
    def target_queries(self) -> int:
        return sum(self.total(k) for k in TARGET_KINDS)

    def as_dict(self) -> dict:
        return {
            "totals": {k: self.total(k) for k in QUERY_KINDS},
            "by_phase": {ph: {k: c[k] for k in QUERY_KINDS} for ph, c in self.counts.items()},
            "sampler_queries": self.sampler_queries,
            "target_queries": self.target_queries,
            "pcond_attempts": self.pcond_attempts,
            "budget": self.budget,
        }


class DualOracle:
    """Sampling plus exact probability queries on the target."""

    def __init__(self, dist: Distribution, ledger: Ledger | None = None):
        self.dist = dist
        self.ledger = ledger if ledger is not None else Ledger()

    @property
    def n(self) -> int:
        return self.dist.n

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        self.ledger.charge(SAMP_P, size)
        return self.dist.sample_batch(rng, size)

    def prob(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=bool)
        self.ledger.charge(DUAL, len(bits))
        return self.dist.prob_batch(bits)

    def query(self, sigma: Assignment) -> float:
        self.ledger.charge(DUAL, 1)
        return self.dist.prob(sigma)


class SamplerOracle:
    """SAMP and PCOND access to the sampler under test.

    ``mode="exact"`` draws PCOND answers from Bernoulli(Q(p)/(Q(p)+Q(q)))
    using Q's known probabilities. ``mode="rejection"`` only uses SAMP: it
    draws from Q until a draw lands in {p, q}, giving up after
    ``REJECTION_CAP`` consecutive misses. Either way each PCOND answer is one
    ledger query; rejection attempts are tallied in ``ledger.pcond_attempts``.
    """

    def __init__(self, dist: Distribution, ledger: Ledger | None = None, mode: str = "exact"):
        if mode not in ("exact", "rejection"):
            raise ValueError(f"unknown PCOND mode {mode!r}")
        self.dist = dist
        self.ledger = ledger if ledger is not None else Ledger()
        self.mode = mode

    @property
    def n(self) -> int:
        return self.dist.n

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        self.ledger.charge(SAMP_Q, size)
        return self.dist.sample_batch(rng, size)

    def _pair_bias(self, p: Assignment, q: Assignment) -> float:
        qp, qq = self.dist.prob(p), self.dist.prob(q)
        if qp + qq <= 0:
            raise ZeroMassPair(f"conditioning on zero-mass pair {p}, {q}")
        return qp / (qp + qq)

    def pcond(self, p: Assignment, q: Assignment, rng: np.random.Generator) -> Assignment:
        """One draw from Q conditioned on {p, q}."""
        if p == q:
            self.ledger.charge(PCOND, 1)
            return p
        return p if self.pcond_count(p, q, 1, rng) == 1 else q

    def pcond_count(self, p: Assignment, q: Assignment, r: int, rng: np.random.Generator) -> int:
        """Number of times p is returned in ``r`` independent PCOND draws."""
        if r < 0:
            raise ValueError("r must be nonnegative")
        if p == q:
            self.ledger.charge(PCOND, r)
            return r
        if self.mode == "exact":
            c = self._pair_bias(p, q)
            self.ledger.charge(PCOND, r)
            return int(rng.binomial(r, c))
        self._pair_bias(p, q)
        self.ledger.charge(PCOND, r)
        return self._rejection_count(p, q, r, rng)

    def _rejection_count(self, p, q, r, rng) -> int:
        pa, qa = p.to_array(), q.to_array()
        hits = hits_p = 0
        misses = 0
        batch = 4096
        while hits < r:
            draws = self.dist.sample_batch(rng, batch)
            is_p = (draws == pa).all(axis=1)
            landed = np.flatnonzero(is_p | (draws == qa).all(axis=1))
            if len(landed) == 0 or misses + landed[0] >= REJECTION_CAP:
                misses += batch if len(landed) == 0 else int(landed[0])
                if misses >= REJECTION_CAP:
                    self.ledger.pcond_attempts += batch
                    raise RuntimeError(
                        f"rejection PCOND found neither {p} nor {q} in {REJECTION_CAP} attempts"
                    )
                self.ledger.pcond_attempts += batch
                continue
            used = landed[: r - hits]
            self.ledger.pcond_attempts += int(used[-1]) + 1
            hits_p += int(is_p[used].sum())
            hits += len(used)
            misses = batch - 1 - int(landed[-1])
        return hits_p


# -- fault injection ---------------------------------------------------------


FAULT_KINDS = ("ideal", "mult_noise", "tv_far", "mass_swap")
TV_FAR_MODES = ("complement", "point")


@dataclass(frozen=True)
class FaultModel:
    kind: str = "ideal"
    level: float | None = None
    mode: str | None = None

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if self.kind in ("mult_noise", "mass_swap"):
            if self.level is None or not 0 < self.level < 1:
                raise ValueError(f"{self.kind} needs a level in (0, 1), got {self.level!r}")
        if self.kind == "tv_far" and self.mode not in TV_FAR_MODES:
            raise ValueError(f"tv_far mode must be one of {TV_FAR_MODES}, got {self.mode!r}")

    @classmethod
    def parse(cls, text: str) -> "FaultModel":
        """Parse ``ideal``, ``mult-noise:0.04``, ``mass-swap:0.95`` or ``tv-far:complement``."""
        name, _, arg = text.strip().partition(":")
        kind = name.replace("-", "_")
        if kind == "ideal":
            if arg:
                raise ValueError("ideal takes no argument")
            return cls("ideal")
        if kind == "tv_far":
            return cls("tv_far", mode=arg or None)
        if kind in ("mult_noise", "mass_swap"):
            try:
                return cls(kind, level=float(arg))
            except ValueError as exc:
                raise ValueError(f"bad sampler {text!r}: {exc}") from None
        raise ValueError(f"bad sampler {text!r}")

    def __str__(self) -> str:
        name = self.kind.replace("_", "-")
        if self.kind == "ideal":
            return name
        if self.kind == "tv_far":
            return f"{name}:{self.mode}"
        return f"{name}:{self.level:g}"


class FaultConstructionError(RuntimeError):
    pass


def make_faulty_sampler(P: Distribution, fault: FaultModel, rng: np.random.Generator) -> Distribution:
    """Return a sampler distribution Q realising ``fault`` relative to P.

    Non-ideal faults need an explicit table for P (n <= 24) and the achieved
    distance is checked exactly before returning.
    """
    if fault.kind == "ideal":
        return P
    probs = np.array(P.dense(), dtype=float)
    if fault.kind == "mult_noise":
        return _mult_noise(P, probs, fault.level, rng)
    if fault.kind == "mass_swap":
        return _mass_swap(P, probs, fault.level)
    return _tv_far(P, probs, fault.mode)


def _mult_noise(P, probs, level, rng):
    width = level / 2
    for _ in range(MAX_FAULT_RETRIES):
        factors = 1.0 + width * rng.uniform(-1.0, 1.0, size=probs.shape)
        w = probs * factors
        Q = ExplicitDistribution(P.n, w / w.sum())
        if mult_distance(P, Q) <= level:
            return Q
        width /= 2
    raise FaultConstructionError(f"could not keep multiplicative distance within {level}")


def _mass_swap(P, probs, fraction):
    # heaviest first; ties broken by index so the construction is deterministic
    order = np.lexsort((np.arange(len(probs)), -probs))
    cum = np.cumsum(probs[order])
    cut = int(np.searchsorted(cum, fraction - 1e-12)) + 1
    donors = order[:cut]
    moved = float(probs[donors].sum())
    q = probs.copy()
    q[donors] = 0.0
    receivers = np.flatnonzero(probs == 0)
    if len(receivers) == 0:
        receivers = order[cut:]
    if len(receivers) == 0:
        raise FaultConstructionError(f"cannot move {fraction} of the mass without emptying the support")
    q[receivers] += moved / len(receivers)
    Q = ExplicitDistribution(P.n, q / q.sum())
    if tv_distance(P, Q) < fraction - 1e-9:
        raise FaultConstructionError(f"mass swap only reached TV {tv_distance(P, Q)} < {fraction}")
    return Q


def _tv_far(P, probs, mode):
    q = np.zeros_like(probs)
    if mode == "complement":
        zero = np.flatnonzero(probs == 0)
        if len(zero) == 0:
            raise FaultConstructionError("target has full support; no complement to move onto")
        q[zero] = 1.0 / len(zero)
    else:
        pos = np.flatnonzero(probs > 0)
        q[pos[np.argmin(probs[pos])]] = 1.0
    return ExplicitDistribution(P.n, q)


def declared_distance(P: Distribution, fault: FaultModel) -> float | None:
    """The distance a fault model promises; None for the ideal sampler."""
    if fault.kind in ("mult_noise", "mass_swap"):
        return fault.level
    if fault.kind == "tv_far":
        if fault.mode == "complement":
            return 1.0
        probs = P.dense()
        return 1.0 - float(probs[probs > 0].min())
    return None
