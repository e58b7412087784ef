"""Command line interface.

Exit codes: 0 success, 1 at least one run errored or a check failed,
2 bad arguments or configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .oracles import FaultModel
from .reference import run_all_checks
from .tester import DEFAULT_BUDGET, ParameterError

EXIT_OK = 0
EXIT_RUN_ERROR = 1
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(Exception):
    pass


def _load_benchmark(value: str) -> dict:
    if value.lstrip().startswith("{"):
        try:
            return json.loads(value)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"inline benchmark is not valid JSON: {exc}") from None
    try:
        text = Path(value).read_text()
    except OSError as exc:
        raise OSError(f"cannot read benchmark {value}: {exc.strerror}") from None
    try:
        desc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{value} is not valid JSON: {exc}") from None
    desc.setdefault("name", Path(value).stem)
    return desc


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--benchmark", required=True, help="descriptor JSON file, or an inline JSON object")
    p.add_argument("--sampler", default="ideal", help="ideal | mult-noise:E | mass-swap:F | tv-far:MODE")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=0.9)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=None, help="defaults to the descriptor's seed")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="cap on sampler queries per run")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--pcond-mode", choices=("exact", "rejection"), default="exact")
    p.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barbarik3", description="Test a sampler against a target distribution.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-setting-a", help="emit union-of-products benchmark descriptors")
    gen.add_argument("--n-list", type=int, nargs="+", default=None)
    gen.add_argument("--out-dir", help="write one descriptor file per benchmark into this directory")

    test = sub.add_parser("test", help="run the tester once")
    _add_run_args(test)

    trials = sub.add_parser("trials", help="run independent seeded trials")
    _add_run_args(trials)
    trials.add_argument("--count", type=int, default=50)
    trials.add_argument("--workers", type=int, default=1)

    budget = sub.add_parser("budget", help="outside-phase sample count per side")
    budget.add_argument("--n", type=int, nargs="+", required=True)
    budget.add_argument("--eta", type=float, default=0.9)
    budget.add_argument("--delta", type=float, default=0.2)

    sub.add_parser("check", help="run the property suites")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


def _cmd_gen(args) -> int:
    descs = harness.generate_setting_a(args.n_list)
    if args.out_dir:
        root = Path(args.out_dir)
        root.mkdir(parents=True, exist_ok=True)
        for d in descs:
            (root / f"{d['name']}.json").write_text(json.dumps(d, indent=2) + "\n")
        print(f"wrote {len(descs)} descriptors to {root}")
    else:
        print(json.dumps(descs, indent=2))
    return EXIT_OK


def _cmd_run(args, count: int, workers: int = 1) -> int:
    desc = _load_benchmark(args.benchmark)
    seed = args.seed if args.seed is not None else int(desc.get("seed", 0))
    config = harness.RunConfig(desc, FaultModel.parse(args.sampler), args.epsilon, args.eta, args.delta,
                               seed, count, args.budget, args.format, args.pcond_mode, workers)
    summary = harness.run_trials(config)
    if count == 1 and args.format == "json" and summary.reports[0] is not None:
        text = summary.reports[0].to_json(indent=2)
    else:
        text = summary.render(args.format)
    _emit(text, args.out)
    for err in summary.errors:
        print(f"error: {err}", file=sys.stderr)
    return EXIT_OK if summary.ok else EXIT_RUN_ERROR


def _cmd_budget(args) -> int:
    rows = [(n, harness.report_sample_budget(n, args.eta, args.delta)) for n in args.n]
    print("n\tsamples\trounded")
    for n, N in rows:
        print(f"{n}\t{N}\t{harness.round_up(N)}")
    return EXIT_OK


def _cmd_check(args) -> int:
    results = run_all_checks()
    print(f"{'check':<20}{'instances':>10}{'violations':>12}{'worst slack':>16}  result")
    for r in results:
        print(f"{r.name:<20}{r.instances:>10}{r.violations:>12}{r.worst_slack:>16.4g}  "
              f"{'PASS' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUN_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-setting-a":
            return _cmd_gen(args)
        if args.command == "test":
            return _cmd_run(args, 1)
        if args.command == "trials":
            return _cmd_run(args, args.count, args.workers)
        if args.command == "budget":
            return _cmd_budget(args)
        return _cmd_check(args)
    except (ConfigError, ParameterError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
