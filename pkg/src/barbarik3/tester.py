"""Barbarik3: decide whether a sampler is close to (or far from) a target.

The test has two phases. The outside phase estimates the TV distance
between the bucket distributions of target and sampler; too large a gap
rejects straight away. The inside phase then repeatedly draws points from
both, pairs up points that share a bucket and uses PCOND on the sampler to
check that the pair's relative weight is close to what the target predicts.
"""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .bucketing import BucketingContext, BucketSampler, compute_k
from .distributions import Assignment, Distribution
from .oracles import BudgetExceeded, DualOracle, Ledger, SamplerOracle

DEFAULT_BUDGET = 10**8
CLOSENESS_RATIO = 11.6


class Verdict(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"
    BUDGET_EXCEEDED = "BudgetExceeded"

    def __str__(self) -> str:
        return self.value


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class TestParams:
    """Closeness ``epsilon``, farness ``eta`` and confidence ``delta``."""

    __test__ = False

    epsilon: float = 0.05
    eta: float = 0.9
    delta: float = 0.2

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ParameterError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0 <= self.epsilon < self.eta / CLOSENESS_RATIO:
            raise ParameterError(
                f"epsilon must lie in [0, eta/{CLOSENESS_RATIO}) = [0, {self.eta / CLOSENESS_RATIO:.5g}), "
                f"got {self.epsilon}"
            )
        if not 0 < self.delta <= 0.5:
            raise ParameterError(f"delta must lie in (0, 0.5], got {self.delta}")


@dataclass(frozen=True)
class InsideBucketParams:
    k: int
    epsilon: float
    eps2: float
    eta: float
    delta: float
    eps1: float
    alpha: float
    m: int
    t: int

    @property
    def close_slack(self) -> float:
        """``2 eps / (1 - eps)``, the ratio slack allowed for a close sampler."""
        return 2 * self.epsilon / (1 - self.epsilon)

    @classmethod
    def derive(cls, k: int, epsilon: float, eps2: float, eta: float, delta: float) -> "InsideBucketParams":
        slack = 2 * epsilon / (1 - epsilon)
        eps1 = (0.99 * eta - 3.25 * eps2 - slack) / 1.05 + slack
        denom = 0.99 * eta - 3.25 * eps2 - eps1
        if denom <= 0:
            raise ParameterError(
                f"0.99*eta - 3.25*eps2 - eps1 = {denom:.6g} is not positive "
                f"(eta={eta}, eps2={eps2}, epsilon={epsilon})"
            )
        m = math.ceil(math.sqrt(k) / denom)
        alpha = (eps1 + slack) / 2
        base = 10 - eps1 + alpha
        assert 0 < base < 10, "round count is undefined for these parameters"
        t = math.ceil(math.log(4 / delta) / math.log(10 / base))
        return cls(k, epsilon, eps2, eta, delta, eps1, alpha, m, t)

    def thresholds(self, p_prob: float, q_prob: float) -> tuple[float, float, int]:
        """``(h, l, r)`` for a pair with target probabilities ``p_prob``, ``q_prob``."""
        h = p_prob / (p_prob + q_prob * (1 + self.close_slack))
        low = p_prob / (p_prob + q_prob * (1 + self.alpha))
        gap = h - low
        if not gap > 0:
            raise ParameterError(f"h={h} does not exceed l={low}")
        r = math.ceil(2 * math.log(4 * self.m * self.t / self.delta) / gap**2)
        return h, low, r


def outside_sample_count(k: int, theta: float, delta: float) -> int:
    if not 0 < theta < 1 or not 0 < delta < 1:
        raise ParameterError("theta and delta must lie in (0, 1)")
    return math.ceil(max(4 * (k + 1) / theta**2, 8 * math.log(4 / delta) / theta**2))


def empirical_distribution(samples, k: int) -> np.ndarray:
    """Frequencies of bucket indices ``0..k``."""
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size == 0:
        raise ValueError("empirical distribution of an empty sample")
    if samples.min() < 0 or samples.max() > k:
        raise ValueError(f"bucket indices must lie in [0, {k}]")
    counts = np.bincount(samples, minlength=k + 1)
    return counts / samples.size


def outside_bucket(bp: BucketSampler, bq: BucketSampler, k: int, theta: float, delta: float,
                   rng: np.random.Generator) -> float:
    """Empirical TV distance between B_P and B_Q, accurate to ``theta`` w.p. ``1 - delta``."""
    n_samples = outside_sample_count(k, theta, delta)
    emp_p = empirical_distribution(bp.draw(rng, n_samples), k)
    emp_q = empirical_distribution(bq.draw(rng, n_samples), k)
    return 0.5 * float(np.abs(emp_p - emp_q).sum())


def bias(Q: SamplerOracle, p: Assignment, q: Assignment, r: int, rng: np.random.Generator) -> float:
    """Fraction of ``r`` PCOND draws on ``{p, q}`` that return ``p``.

    Identical points return 0.5 without querying.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    if p == q:
        return 0.5
    return Q.pcond_count(p, q, r, rng) / r


@dataclass
class InsideBucketOutcome:
    verdict: Verdict
    params: InsideBucketParams
    iterations: int
    pairs_tested: int
    trigger: dict | None = None


def inside_bucket(P: DualOracle, Q: SamplerOracle, k: int, epsilon: float, eps2: float, eta: float,
                  delta: float, rng: np.random.Generator) -> InsideBucketOutcome:
    params = InsideBucketParams.derive(k, epsilon, eps2, eta, delta)
    ctx = BucketingContext(k, P)
    m = params.m
    pairs = 0
    for it in range(1, params.t + 1):
        bits_p = P.sample(rng, m)
        idx_p, prob_p = ctx.classify(bits_p)
        bits_q = Q.sample(rng, m)
        idx_q, prob_q = ctx.classify(bits_q)
        shared = np.intersect1d(idx_p[idx_p > 0], idx_q[idx_q > 0])
        for j in shared:
            cand_p = np.flatnonzero(idx_p == j)
            cand_q = np.flatnonzero(idx_q == j)
            a = cand_p[rng.integers(len(cand_p))]
            b = cand_q[rng.integers(len(cand_q))]
            p, q = Assignment.from_array(bits_p[a]), Assignment.from_array(bits_q[b])
            h, low, r = params.thresholds(float(prob_p[a]), float(prob_q[b]))
            c_hat = bias(Q, p, q, r, rng)
            pairs += 1
            if c_hat <= (h + low) / 2:
                trigger = {"iteration": it, "bucket": int(j), "p": str(p), "q": str(q),
                           "c_hat": c_hat, "h": h, "l": low, "r": r}
                return InsideBucketOutcome(Verdict.REJECT, params, it, pairs, trigger)
    return InsideBucketOutcome(Verdict.ACCEPT, params, params.t, pairs)


@dataclass
class TestReport:
    __test__ = False

    verdict: Verdict
    reject_phase: str
    d_hat: float | None
    ledger: dict
    seed: int | None
    params: dict
    derived: dict = field(default_factory=dict)
    eps2: float | None = None
    iterations: int = 0
    pairs_tested: int = 0
    trigger: dict | None = None
    budget_phase: str | None = None
    wall_clock: float = 0.0

    def __post_init__(self):
        if self.verdict == Verdict.REJECT and self.reject_phase == "none":
            raise ValueError("a Reject verdict needs a phase")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = str(self.verdict)
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def barbarik3(target: Distribution, sampler: Distribution, params: TestParams, *,
              budget: int | None = DEFAULT_BUDGET, rng=None, seed: int | None = None,
              pcond_mode: str = "exact") -> TestReport:
    """Run the tester once.

    ``rng`` may be a ``numpy.random.Generator``; otherwise one is built from
    ``seed``. The run is strictly sequential, so the same seed and inputs
    give the same report.
    """
    if target.n != sampler.n:
        raise ValueError(f"dimension mismatch: target n={target.n}, sampler n={sampler.n}")
    if rng is None:
        rng = np.random.default_rng(seed)
    started = time.perf_counter()
    ledger = Ledger(budget=budget)
    P = DualOracle(target, ledger)
    Q = SamplerOracle(sampler, ledger, mode=pcond_mode)

    k = compute_k(target.n, params.eta)
    theta = params.eta / 20
    derived: dict = {"k": k, "theta": theta,
                     "outside_samples": outside_sample_count(k, theta, params.delta / 2)}
    report = TestReport(Verdict.BUDGET_EXCEEDED, "none", None, {}, seed, asdict(params), derived)
    ctx = BucketingContext(k, P)
    try:
        ledger.phase = "outside"
        d_hat = outside_bucket(BucketSampler(ctx, P), BucketSampler(ctx, Q), k, theta, params.delta / 2, rng)
        report.d_hat = d_hat
        if d_hat > params.epsilon / 2 + theta:
            report.verdict, report.reject_phase = Verdict.REJECT, "outside"
        else:
            report.eps2 = d_hat + theta
            ledger.phase = "inside"
            ib = InsideBucketParams.derive(k, params.epsilon, report.eps2, params.eta, params.delta / 2)
            derived.update(eps1=ib.eps1, alpha=ib.alpha, m=ib.m, t=ib.t)
            outcome = inside_bucket(P, Q, k, params.epsilon, report.eps2, params.eta, params.delta / 2, rng)
            report.verdict = outcome.verdict
            report.reject_phase = "inside" if outcome.verdict == Verdict.REJECT else "none"
            report.iterations = outcome.iterations
            report.pairs_tested = outcome.pairs_tested
            report.trigger = outcome.trigger
    except BudgetExceeded:
        report.verdict, report.reject_phase = Verdict.BUDGET_EXCEEDED, "none"
        report.budget_phase = ledger.phase
    report.ledger = ledger.as_dict()
    report.wall_clock = time.perf_counter() - started
    return report
