"""Command-line interface.

Subcommands: `list` (problem registry), `solve` (single seeded run),
`run` (config-driven battery with CSV/JSON/figure output), `verify`
(grid-oracle check of the closed-form worst-case scenarios), and `report`
(re-render figures from an emitted results.json).

Exit codes: 0 on completion, 2 on configuration/usage errors, 1 on
internal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import ExperimentConfig, emit_results, run_experiment
from .errors import ContractError
from .problems import PROBLEM_IDS, make_problem, registry, verify_worst_scenario
from .solvers import ALGORITHMS, solve


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wracma",
        description="Min-max benchmark harness: worst-case CMA-ES vs ZO-PGDA",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list the benchmark problems")

    p_solve = sub.add_parser("solve", help="run one seeded optimization")
    p_solve.add_argument("--problem", required=True, choices=PROBLEM_IDS)
    p_solve.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    p_solve.add_argument("--b", type=float, default=None)
    p_solve.add_argument("--m", type=int, default=5)
    p_solve.add_argument("--n", type=int, default=5)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--budget", type=int, default=5_000_000)
    p_solve.add_argument("--target", type=float, default=1e-6)

    p_run = sub.add_parser("run", help="run a config-driven battery")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="override the config output_dir")
    p_run.add_argument("--no-figures", action="store_true")

    p_verify = sub.add_parser("verify", help="grid-check the worst-case formulas")
    p_verify.add_argument("--problems", nargs="*", default=list(PROBLEM_IDS),
                          choices=PROBLEM_IDS, metavar="ID")
    p_verify.add_argument("--samples", type=int, default=1000,
                          help="random design points per problem, split over dims")
    p_verify.add_argument("--dims", type=int, nargs="*", default=[1, 2, 3])
    p_verify.add_argument("--resolution", type=int, default=601)
    p_verify.add_argument("--b", type=float, default=None)
    p_verify.add_argument("--seed", type=int, default=0)

    p_report = sub.add_parser("report", help="re-render figures from results.json")
    p_report.add_argument("--results", required=True)
    p_report.add_argument("--out", default=None)
    return parser


def _cmd_list() -> int:
    rows = registry()
    print(f"{'id':<4} {'x':<14} {'y':<14} {'b':<10} {'x*':<6}")
    for pid, row in rows.items():
        print(f"{pid:<4} {row['x']:<14} {row['y']:<14} {row['b']:<10} {row['x_star']:<6}")
    return 0


def _cmd_solve(args) -> int:
    problem = make_problem(args.problem, args.m, args.n, args.b)
    config_cls = ALGORITHMS[args.algo][0]
    config = config_cls(budget=args.budget, target_gap=args.target)
    record = solve(problem, args.algo, config, args.seed)
    print(json.dumps(record.to_dict(), indent=2))
    return 0


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise ContractError(f"config file not found: {path}")
    config = ExperimentConfig.from_json(path)
    if args.out is not None:
        config.output_dir = args.out
    result = run_experiment(config)
    figures = False if args.no_figures else None
    written = emit_results(result, config, config.output_dir, figures=figures)
    for row in result.summaries:
        mean = row["success_fcalls_mean"]
        print(
            f"{row['problem']:<4} b={row['b'] if row['b'] is not None else '-':<8} "
            f"{row['algorithm']:<10} success {row['successes']}/{row['trials']}"
            + (f"  mean fcalls {mean:.3g}" if mean is not None else "")
        )
    for p in written:
        print(f"wrote {p}")
    return 0


def _cmd_verify(args) -> int:
    if any(n > 3 or n < 1 for n in args.dims):
        raise ContractError("verify supports dims between 1 and 3")
    failures = 0
    for pid in args.problems:
        rng = np.random.default_rng(args.seed)
        checked = 0
        bad = 0
        for i, n in enumerate(args.dims):
            quota = args.samples // len(args.dims)
            if i < args.samples % len(args.dims):
                quota += 1
            b = args.b if pid in ("f5", "f6", "f7", "f8") else None
            problem = make_problem(pid, n, n, b)
            for _ in range(quota):
                x = problem.design_box.uniform(rng)
                checked += 1
                if not verify_worst_scenario(problem, x, args.resolution):
                    bad += 1
        failures += bad
        status = "ok" if bad == 0 else f"{bad} FAILED"
        print(f"{pid}: {checked} points, {status}")
    if failures:
        print(f"verification failed on {failures} points")
        return 1
    return 0


def _cmd_report(args) -> int:
    path = Path(args.results)
    if not path.is_file():
        raise ContractError(f"results file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if "summaries" not in payload:
        raise ContractError("results file carries no summaries")
    from . import report

    outdir = Path(args.out) if args.out is not None else path.parent
    for p in report.render_figures(payload["summaries"], outdir):
        print(f"wrote {p}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "list":
            return _cmd_list()
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "report":
            return _cmd_report(args)
        return 2
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
