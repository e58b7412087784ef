"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict with the measured numbers;
the lines are printed together at the end of the pytest run.
"""

import io
import json
import math
import time
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np

from barbarik3 import cli
from barbarik3.bucketing import BucketingContext, BucketSampler, bucket_index
from barbarik3.distributions import Assignment, ExplicitDistribution, from_descriptor, tv_distance
from barbarik3.harness import RunConfig, build_sampler, generate_setting_a, run_trials
from barbarik3.oracles import DualOracle, FaultModel, SamplerOracle
from barbarik3.reference import bruteforce_bucket_distribution, interval_search, run_all_checks
from barbarik3.tester import InsideBucketParams, bias

from conftest import ACCEPTANCE_LINES

BENCH_DIR = Path(__file__).resolve().parent.parent / "benchmarks"
TRIAL_BENCHMARKS = ("explicit_uniform8", "explicit_dirichlet8", "setting_a_n7")
TRIALS = 50
MIN_HITS = 33


def load(name):
    return json.loads((BENCH_DIR / f"{name}.json").read_text())


def shipped_small_benchmarks():
    descs = {p.stem: json.loads(p.read_text()) for p in sorted(BENCH_DIR.glob("*.json"))}
    for d in generate_setting_a(range(4, 13, 3)):
        descs.setdefault(d["name"], d)
    return {name: from_descriptor(d) for name, d in descs.items() if from_descriptor(d).n <= 12}


def record(number, title, ok, detail):
    ACCEPTANCE_LINES[f"{number:02d}"] = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}"
    assert ok, detail


def test_criterion_1_sample_budgets():
    dims = [7, 10, 17, 21, 24, 25, 34, 54, 88]
    expected = [30000, 36000, 50000, 58000, 64000, 66000, 83000, 123000, 190000]
    buf = io.StringIO()
    started = time.perf_counter()
    with redirect_stdout(buf):
        code = cli.main(["budget", "--eta", "0.9", "--delta", "0.2", "--n", *map(str, dims)])
    elapsed = time.perf_counter() - started
    rows = [line.split("\t") for line in buf.getvalue().splitlines()[1:]]
    got = [int(r[2]) for r in rows]
    ok = code == 0 and got == expected and [int(r[0]) for r in rows] == dims and elapsed < 1.0
    record(1, "sample budgets", ok, f"rounded={got} in {elapsed * 1000:.1f} ms")


def _verdict_counts(name, sampler):
    return run_trials(RunConfig(load(name), FaultModel.parse(sampler), 0.05, 0.9, 0.2,
                                seed=0, trials=TRIALS)).counts


def test_criterion_2_completeness():
    accepts = {name: _verdict_counts(name, "ideal")["Accept"] for name in TRIAL_BENCHMARKS}
    ok = all(a >= MIN_HITS for a in accepts.values())
    record(2, "completeness", ok, ", ".join(f"{k} {v}/{TRIALS} Accept" for k, v in accepts.items())
           + f" (need >= {MIN_HITS})")


def test_criterion_3_soundness():
    fault = FaultModel.parse("mass-swap:0.95")
    rejects, min_tv = {}, math.inf
    for name in TRIAL_BENCHMARKS:
        target = from_descriptor(load(name))
        # the sampler each trial faces, rebuilt from its seed
        min_tv = min(min_tv, *(tv_distance(target, build_sampler(target, fault, s)) for s in range(TRIALS)))
        rejects[name] = _verdict_counts(name, str(fault))["Reject"]
    ok = min_tv >= 0.9 and all(r >= MIN_HITS for r in rejects.values())
    record(3, "soundness", ok, ", ".join(f"{k} {v}/{TRIALS} Reject" for k, v in rejects.items())
           + f", min TV {min_tv:.4f} (need >= 0.9)")


def test_criterion_4_oracle_equivalence():
    rng = np.random.default_rng(4)
    worst_tv, mismatches, points = 0.0, 0, 0
    benches = shipped_small_benchmarks()
    for P in benches.values():
        ctx = BucketingContext.for_target(DualOracle(P), 0.9)
        exact = bruteforce_bucket_distribution(P, ctx.k)
        draws = BucketSampler(ctx, SamplerOracle(P)).draw(rng, 100_000)
        emp = np.bincount(draws, minlength=ctx.k + 1) / len(draws)
        worst_tv = max(worst_tv, 0.5 * float(np.abs(emp - exact).sum()))
        edges = [2.0**-i for i in range(ctx.k + 1)]
        for i, p in enumerate(P.dense()):
            points += 1
            mismatches += bucket_index(ctx, Assignment.from_index(i, P.n)) != interval_search(float(p), edges)
    ok = worst_tv <= 0.02 and mismatches == 0
    record(4, "oracle equivalence", ok, f"{len(benches)} benchmarks, worst TV {worst_tv:.4f} (<= 0.02), "
           f"{mismatches}/{points} bucket mismatches")


def test_criterion_5_property_suites():
    results = run_all_checks()
    ok = all(r.passed for r in results)
    detail = ", ".join(f"{r.name} {r.violations}/{r.instances} violations" for r in results)
    record(5, "property suites", ok, detail)


def test_criterion_6_bias_estimator():
    inner = InsideBucketParams.derive(31, 0.05, 0.1, 0.9, 0.1)
    gap = 0.045
    r = math.ceil(2 * math.log(4 * inner.m * inner.t / inner.delta) / gap**2)
    # a pair with Q(p) / (Q(p) + Q(q)) = 0.475
    Q = SamplerOracle(ExplicitDistribution(1, [0.475, 0.525]))
    p, q = Assignment.from_index(0, 1), Assignment.from_index(1, 1)
    rng = np.random.default_rng(6)
    reps = 10_000
    errors = np.array([abs(bias(Q, p, q, r, rng) - 0.475) for _ in range(reps)])
    frac = float(np.mean(errors > gap / 2))
    hoeffding = inner.delta / (4 * inner.m * inner.t)
    limit = hoeffding + 3 * math.sqrt(hoeffding * (1 - hoeffding) / reps)
    assert Q.ledger.total("pcond") == reps * r
    record(6, "bias estimator", frac <= limit, f"r={r}, failure fraction {frac:.2e} <= {limit:.2e}")


def test_criterion_7_determinism():
    configs = [RunConfig(load(name), FaultModel.parse(f), seed=3, trials=3)
               for name in TRIAL_BENCHMARKS for f in ("ideal", "mult-noise:0.04", "mass-swap:0.95")]
    same = sum(run_trials(c).to_json(timing=False) == run_trials(c).to_json(timing=False) for c in configs)
    record(7, "determinism", same == len(configs), f"{same}/{len(configs)} configurations byte-identical")
