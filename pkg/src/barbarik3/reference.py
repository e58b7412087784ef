"""Brute-force oracles and numeric checks of the inequalities the tester relies on.

Everything here works by full enumeration on small instances and is kept
independent of the sampling code paths it is used to validate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    Assignment,
    Distribution,
    _aligned,
    _subset_bits,
    mult_distance,
    random_explicit,
    tv_distance,
)
from .oracles import FaultModel, make_faulty_sampler

TOLERANCE = 1e-12


@dataclass
class PropertyCheckResult:
    name: str
    instances: int = 0
    violations: int = 0
    worst_slack: float = math.inf
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def merge(self, other: "PropertyCheckResult") -> "PropertyCheckResult":
        return PropertyCheckResult(
            self.name,
            self.instances + other.instances,
            self.violations + other.violations,
            min(self.worst_slack, other.worst_slack),
        )


def bruteforce_bucket_distribution(P: Distribution, k: int) -> np.ndarray:
    """Exact ``B_P`` over ``0..k`` by exhaustive interval search on every point."""
    if P.n > 20:
        raise ValueError(f"n={P.n} is too large to enumerate")
    probs = P.dense()
    out = np.zeros(k + 1)
    edges = [2.0**-i for i in range(k + 1)]
    for p in probs:
        out[interval_search(float(p), edges)] += p
    return out


def interval_search(p: float, edges: list[float]) -> int:
    """Linear scan for ``i`` with ``edges[i] < p <= edges[i-1]``; 0 if none."""
    for i in range(1, len(edges)):
        if edges[i] < p <= edges[i - 1]:
            return i
    return 0


def check_overlap_bound(D1: Distribution, D2: Distribution, S) -> PropertyCheckResult:
    """``sum_S D1 D2 >= (D1(S) + D2(S) - 2 tv_S)^2 / (4|S|)``."""
    bits = _subset_bits(S, D1.n)
    if len(bits) == 0:
        raise ValueError("S must be nonempty")
    p1, p2 = D1.prob_batch(bits), D2.prob_batch(bits)
    lhs = float(np.dot(p1, p2))
    tv_s = tv_distance(D1, D2, subset=S)
    bound = (p1.sum() + p2.sum() - 2 * tv_s) ** 2 / (4 * len(bits))
    slack = float(lhs - bound)
    # the chain goes through the Hellinger affinity; check that link too
    affinity = float(np.sqrt(p1 * p2).sum())
    affinity_slack = affinity - ((p1.sum() + p2.sum()) / 2 - tv_s)
    worst = min(slack, affinity_slack)
    return PropertyCheckResult("overlap_bound", 1, int(worst < -TOLERANCE), slack,
                               {"lhs": lhs, "bound": bound, "affinity_slack": affinity_slack})


def check_threshold_prop(P: Distribution, Q: Distribution, epsilon: float) -> PropertyCheckResult:
    """For all support pairs: ``Q(p)/(Q(p)+Q(q)) >= P(p)/(P(p)+(1+2e/(1-e))P(q))``."""
    dist = mult_distance(P, Q)
    if dist > epsilon:
        raise ValueError(f"precondition violated: multiplicative distance {dist} exceeds {epsilon}")
    _, pp, qq = _aligned(P, Q)
    keep = pp > 0
    pp, qq = pp[keep], qq[keep]
    c = 1 + 2 * epsilon / (1 - epsilon)
    q_ratio = qq[:, None] / (qq[:, None] + qq[None, :])
    p_bound = pp[:, None] / (pp[:, None] + c * pp[None, :])
    slack = float((q_ratio - p_bound).min())
    return PropertyCheckResult("threshold_prop", int(pp.size) ** 2, int(slack < -TOLERANCE), slack)


def learning_sample_count(support: int, eta: float, delta: float) -> int:
    return max(math.ceil(support / eta**2), math.ceil(2 * math.log(2 / delta) / eta**2))


def check_learning_bound(D, eta: float, delta: float, trials: int,
                         rng: np.random.Generator | None = None) -> PropertyCheckResult:
    """Empirical TV within ``eta`` in at least ``(1-delta) - 3 sigma`` of trials."""
    D = np.asarray(D, dtype=float)
    k = len(D) - 1
    if k > 64:
        raise ValueError("bucket distributions are limited to k <= 64")
    if trials < 100:
        raise ValueError("need at least 100 trials")
    rng = rng if rng is not None else np.random.default_rng(0)
    n_samples = learning_sample_count(k + 1, eta, delta)
    counts = rng.multinomial(n_samples, D / D.sum(), size=trials)
    tvs = 0.5 * np.abs(counts / n_samples - D).sum(axis=1)
    rate = float(np.mean(tvs <= eta))
    sigma = math.sqrt(delta * (1 - delta) / trials)
    floor = (1 - delta) - 3 * sigma
    slack = rate - floor
    return PropertyCheckResult("learning_bound", trials, int(slack < 0), slack,
                               {"pass_rate": rate, "floor": floor, "samples_per_trial": n_samples})


def check_distance_identity(D1: Distribution, D2: Distribution) -> PropertyCheckResult:
    """``2 tv <= d_inf``."""
    slack = mult_distance(D1, D2) - 2 * tv_distance(D1, D2)
    return PropertyCheckResult("distance_identity", 1, int(slack < -TOLERANCE), slack)


# -- shipped suites ------------------------------------------------------------

def _random_pair(rng, n_max: int):
    n = int(rng.integers(1, n_max + 1))
    frac = 1.0 if rng.random() < 0.5 else float(rng.uniform(0.3, 1.0))
    return random_explicit(n, rng, frac), random_explicit(n, rng, frac)


def overlap_suite(instances: int = 1000, seed: int = 1) -> PropertyCheckResult:
    rng = np.random.default_rng(seed)
    result = PropertyCheckResult("overlap_bound")
    for _ in range(instances):
        d1, d2 = random_explicit(6, rng), random_explicit(6, rng)
        size = int(rng.integers(1, 65))
        S = rng.choice(64, size=size, replace=False)
        subset = [Assignment.from_index(int(i), 6) for i in S]
        result = result.merge(check_overlap_bound(d1, d2, subset))
    return result


def threshold_suite(instances: int = 100, seed: int = 2, level: float = 0.04) -> PropertyCheckResult:
    rng = np.random.default_rng(seed)
    result = PropertyCheckResult("threshold_prop")
    for _ in range(instances):
        P = random_explicit(6, rng)
        Q = make_faulty_sampler(P, FaultModel("mult_noise", level=level), rng)
        r = check_threshold_prop(P, Q, level)
        result = result.merge(PropertyCheckResult(r.name, 1, r.violations, r.worst_slack))
    return result


def distance_identity_suite(instances: int = 1000, seed: int = 3, n_max: int = 10) -> PropertyCheckResult:
    rng = np.random.default_rng(seed)
    result = PropertyCheckResult("distance_identity")
    for _ in range(instances):
        result = result.merge(check_distance_identity(*_random_pair(rng, n_max)))
    return result


def learning_suite(seed: int = 4) -> PropertyCheckResult:
    rng = np.random.default_rng(seed)
    cases = [
        (np.full(8, 1 / 8), 0.1, 0.1, 500),
        (np.eye(1, 8, 3).ravel(), 0.1, 0.1, 200),
        (rng.dirichlet(np.ones(32)), 0.0225, 0.1, 100),
    ]
    result = PropertyCheckResult("learning_bound")
    rates = []
    for D, eta, delta, trials in cases:
        r = check_learning_bound(D, eta, delta, trials, rng)
        rates.append(r.details["pass_rate"])
        result = result.merge(r)
    result.details["pass_rates"] = rates
    return result


def run_all_checks() -> list[PropertyCheckResult]:
    return [overlap_suite(), threshold_suite(), distance_identity_suite(), learning_suite()]
