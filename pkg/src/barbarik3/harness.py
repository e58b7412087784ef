"""Benchmark generation, trial orchestration and report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bucketing import compute_k
from .distributions import Distribution, UnionOfProducts, from_descriptor, to_descriptor
from .oracles import FaultModel, make_faulty_sampler
from .tester import DEFAULT_BUDGET, TestParams, TestReport, Verdict, barbarik3, outside_sample_count

SETTING_A_DIMENSIONS = tuple(range(4, 119, 3))
CSV_COLUMNS = ("benchmark", "n", "verdict", "phase", "d_hat", "samp_q", "pcond_q", "samp_p", "dual_q", "seed")
TIMING_FIELDS = ("wall_clock",)


def generate_setting_a(n_list=None) -> list[dict]:
    """One union-of-products descriptor per dimension ``n = 3k+1``."""
    dims = SETTING_A_DIMENSIONS if n_list is None else tuple(n_list)
    out = []
    for n in dims:
        if n < 4 or (n - 1) % 3:
            raise ValueError(f"dimension {n} is not of the form 3k+1 with k >= 1")
        k = (n - 1) // 3
        out.append(to_descriptor(UnionOfProducts(k), seed=0, name=f"setting_a_n{n}"))
    return out


def report_sample_budget(n: int, eta: float, delta: float) -> int:
    """Per-side sample count of the outside phase, without running the test."""
    TestParams(0.0, eta, delta)
    return outside_sample_count(compute_k(n, eta), eta / 20, delta / 2)


def round_up(x: int, step: int = 1000) -> int:
    return math.ceil(x / step) * step


@dataclass
class RunConfig:
    benchmark: dict
    fault: FaultModel = field(default_factory=FaultModel)
    epsilon: float = 0.05
    eta: float = 0.9
    delta: float = 0.2
    seed: int = 0
    trials: int = 1
    budget: int = DEFAULT_BUDGET
    fmt: str = "json"
    pcond_mode: str = "exact"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.fmt not in ("json", "csv"):
            raise ValueError(f"unknown output format {self.fmt!r}")
        self.params = TestParams(self.epsilon, self.eta, self.delta)

    @property
    def benchmark_name(self) -> str:
        return self.benchmark.get("name") or self.benchmark.get("family", "benchmark")


@dataclass
class TrialSummary:
    benchmark: str
    n: int
    sampler: str
    reports: list
    errors: list
    wall_clock: float = 0.0

    @property
    def counts(self) -> dict:
        out = {str(v): 0 for v in Verdict}
        out["error"] = len(self.errors)
        for r in self.reports:
            if r is not None:
                out[str(r.verdict)] += 1
        return out

    @property
    def ok(self) -> bool:
        return not self.errors

    def sampler_queries(self) -> list[int]:
        return [r.ledger["sampler_queries"] for r in self.reports if r is not None]

    def to_dict(self, timing: bool = True) -> dict:
        sq = self.sampler_queries()
        reports = []
        for r in self.reports:
            d = None if r is None else r.to_dict()
            if d is not None and not timing:
                for key in TIMING_FIELDS:
                    d.pop(key, None)
            reports.append(d)
        out = {
            "benchmark": self.benchmark,
            "n": self.n,
            "sampler": self.sampler,
            "counts": self.counts,
            "mean_sampler_queries": float(np.mean(sq)) if sq else None,
            "max_sampler_queries": max(sq) if sq else None,
            "errors": self.errors,
            "reports": reports,
        }
        if timing:
            out["wall_clock"] = self.wall_clock
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.reports:
            if r is None:
                continue
            t = r.ledger["totals"]
            writer.writerow([self.benchmark, self.n, str(r.verdict), r.reject_phase,
                             "" if r.d_hat is None else repr(r.d_hat),
                             t["samp_q"], t["pcond"], t["samp_p"], t["dual"], r.seed])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _streams(seed: int):
    return np.random.SeedSequence(seed).spawn(2)


def build_sampler(target: Distribution, fault: FaultModel, seed: int) -> Distribution:
    """The faulty sampler trial ``seed`` runs against."""
    return make_faulty_sampler(target, fault, np.random.default_rng(_streams(seed)[0]))


def run_single(target: Distribution, fault: FaultModel, params: TestParams, seed: int,
               budget: int = DEFAULT_BUDGET, pcond_mode: str = "exact") -> TestReport:
    """One trial with its own oracles; fault construction and test get separate streams."""
    sampler = build_sampler(target, fault, seed)
    return barbarik3(target, sampler, params, budget=budget, rng=np.random.default_rng(_streams(seed)[1]),
                     seed=seed, pcond_mode=pcond_mode)


def _trial(args):
    target, fault, params, seed, budget, mode = args
    try:
        return run_single(target, fault, params, seed, budget, mode), None
    except Exception as exc:  # reported per trial, never aborts the batch
        return None, f"seed {seed}: {type(exc).__name__}: {exc}"


def run_trials(config: RunConfig) -> TrialSummary:
    started = time.perf_counter()
    target = from_descriptor(config.benchmark)
    jobs = [(target, config.fault, config.params, config.seed + i, config.budget, config.pcond_mode)
            for i in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_trial, jobs))
    else:
        results = [_trial(j) for j in jobs]
    reports = [r for r, _ in results]
    errors = [e for _, e in results if e is not None]
    return TrialSummary(config.benchmark_name, target.n, str(config.fault), reports, errors,
                        time.perf_counter() - started)
