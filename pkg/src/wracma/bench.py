"""Benchmark harness: seeded trial batteries across problems x algorithms x b.

A battery is a pure function of its configuration: every cell owns an RNG
stream seeded from a stable hash of (seed base, problem, b, algorithm,
trial), cells run independently in a small process pool, and results are
sorted before emission so output does not depend on scheduling.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError
from .problems import PROBLEM_IDS, make_problem
from .solvers import (
    ALGORITHMS,
    RunRecord,
    VERDICT_ABORTED,
    VERDICT_SUCCESS,
    WraCmaesConfig,
    ZoPgdaConfig,
    solve,
)
from .wra import WraParams

WORKERS_ENV = "WRACMA_WORKERS"
CSV_HEADER = ["problem", "b", "algorithm", "seed", "verdict", "fcalls", "final_gap", "wall_ms"]


@dataclass
class ExperimentConfig:
    """Battery description; see README for the JSON schema."""

    problems: list  # [{"id": "f5", "b": [1, 10]}, {"id": "f2"}]
    m: int = 5
    n: int = 5
    algorithms: list = field(default_factory=lambda: ["wra-cmaes", "zo-pgda"])
    trials: int = 20
    budget: int = 5_000_000
    target_gap: float = 1e-6
    seed_base: int = 0
    output_dir: str = "results"
    history_points: int = 200
    wra_cmaes: dict = field(default_factory=dict)  # WraCmaesConfig overrides
    zo_pgda: dict = field(default_factory=dict)  # ZoPgdaConfig overrides
    workers: int | None = None
    measure_walltime: bool = True
    figures: bool = True

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ContractError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ContractError("config must be a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if not self.problems:
            raise ContractError("config needs at least one problem")
        for entry in self.problems:
            if not isinstance(entry, dict) or "id" not in entry:
                raise ContractError("each problem entry needs an 'id'")
            if entry["id"] not in PROBLEM_IDS:
                raise ContractError(f"unknown problem id '{entry['id']}'")
            extra = set(entry) - {"id", "b"}
            if extra:
                raise ContractError(f"unknown problem entry keys: {sorted(extra)}")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ContractError(f"unknown algorithm '{algo}'")
        if not self.algorithms:
            raise ContractError("config needs at least one algorithm")
        if self.trials < 1:
            raise ContractError("trials must be >= 1")
        if self.budget < 0:
            raise ContractError("budget must be non-negative")
        if self.target_gap <= 0:
            raise ContractError("target_gap must be positive")
        # fail early on bad solver overrides
        for algo in self.algorithms:
            self.solver_config(algo)
        for entry in self.problems:
            for b in entry.get("b", [None]) or [None]:
                make_problem(entry["id"], self.m, self.n, b)

    def solver_config(self, algorithm: str):
        base = dict(
            budget=self.budget,
            target_gap=self.target_gap,
            history_points=self.history_points,
        )
        try:
            if algorithm == "wra-cmaes":
                over = dict(self.wra_cmaes)
                wra_over = over.pop("wra", {})
                return WraCmaesConfig(**base, **over, wra=WraParams(**wra_over))
            return ZoPgdaConfig(**base, **dict(self.zo_pgda))
        except TypeError as exc:
            raise ContractError(f"bad {algorithm} overrides: {exc}") from exc

    def cells(self) -> list[tuple]:
        out = []
        for entry in self.problems:
            b_values = entry.get("b", [None]) or [None]
            for b in b_values:
                for algo in self.algorithms:
                    for trial in range(self.trials):
                        out.append((entry["id"], b, algo, trial))
        return out


def derive_seed(seed_base: int, problem_id: str, b, algorithm: str, trial: int) -> int:
    """Stable per-cell seed from the battery seed base."""
    b_key = "-" if b is None else repr(float(b))
    key = f"{seed_base}|{problem_id}|{b_key}|{algorithm}|{trial}"
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1  # non-negative 63-bit seed


def _run_cell(args) -> RunRecord:
    """Top-level worker entry; any failure becomes an aborted record."""
    pid, b, algorithm, trial, m, n, config_dict = args
    seed = derive_seed(config_dict["seed_base"], pid, b, algorithm, trial)
    config = ExperimentConfig.from_dict(config_dict)
    problem = make_problem(pid, m, n, b)
    try:
        return solve(problem, algorithm, config.solver_config(algorithm), seed)
    except Exception as exc:  # recorded, never halts the battery
        return RunRecord(
            problem=pid,
            b=problem.b,
            algorithm=algorithm,
            seed=seed,
            verdict=VERDICT_ABORTED,
            fcalls=0,
            final_gap=math.inf,
            wall_ms=0.0,
            params_hash="",
            iterations=0,
            history=[],
            note=f"{type(exc).__name__}: {exc}",
        )


@dataclass
class BatteryResult:
    records: list
    summaries: list


def _worker_count(config: ExperimentConfig, n_cells: int) -> int:
    if config.workers is not None:
        return max(1, int(config.workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, min(os.cpu_count() or 1, n_cells))


def run_experiment(config: ExperimentConfig) -> BatteryResult:
    """Execute every (problem, b, algorithm, trial) cell and summarize."""
    cells = config.cells()
    config_dict = config.to_dict()
    jobs = [(pid, b, algo, trial, config.m, config.n, config_dict)
            for pid, b, algo, trial in cells]
    workers = _worker_count(config, len(jobs))
    if workers == 1:
        records = [_run_cell(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell, jobs, chunksize=1))
    if not config.measure_walltime:
        for rec in records:
            rec.wall_ms = 0.0
    records.sort(key=lambda r: (r.problem, r.b, r.algorithm, r.seed))
    return BatteryResult(records=records, summaries=summarize(records, config))


def _gap_curve(group: list[RunRecord], budget: int, points: int) -> dict:
    """Median and interquartile range of gap vs f-calls on a common grid."""
    grid = np.unique(np.geomspace(1.0, max(1.0, float(budget)), num=points).astype(np.int64))
    curves = []
    for rec in group:
        if not rec.history:
            continue
        fc = np.array([row[0] for row in rec.history], dtype=np.int64)
        gap = np.array([row[1] for row in rec.history], dtype=float)
        idx = np.clip(np.searchsorted(fc, grid, side="right") - 1, 0, fc.size - 1)
        curves.append(gap[idx])
    if not curves:
        return {"fcalls": [], "median": [], "q25": [], "q75": []}
    stack = np.vstack(curves)
    return {
        "fcalls": grid.tolist(),
        "median": np.median(stack, axis=0).tolist(),
        "q25": np.quantile(stack, 0.25, axis=0).tolist(),
        "q75": np.quantile(stack, 0.75, axis=0).tolist(),
    }


def summarize(records: list, config: ExperimentConfig) -> list:
    """Per-cell-group statistics: success rate, f-call moments, gap curves."""
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.problem, rec.b, rec.algorithm), []).append(rec)
    summaries = []
    for (pid, b, algo), group in sorted(groups.items()):
        wins = [r.fcalls for r in group if r.verdict == VERDICT_SUCCESS]
        summaries.append(
            {
                "problem": pid,
                "b": b,
                "algorithm": algo,
                "trials": len(group),
                "successes": len(wins),
                "success_rate": len(wins) / len(group),
                "success_fcalls_mean": float(np.mean(wins)) if wins else None,
                "success_fcalls_std": float(np.std(wins)) if wins else None,
                "gap_curve": _gap_curve(group, config.budget, min(config.history_points, 120)),
            }
        )
    return summaries


def build_payload(result: BatteryResult, config: ExperimentConfig) -> dict:
    return {
        "config": config.to_dict(),
        "summaries": result.summaries,
        "records": [rec.to_dict() for rec in result.records],
    }


def emit_results(result: BatteryResult, config: ExperimentConfig, outdir,
                 figures: bool | None = None) -> list[Path]:
    """Write results.csv, results.json, scaling.csv and (optionally) figures."""
    if not result.records:
        raise ContractError("no records to emit")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = outdir / "results.csv"
    try:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for rec in result.records:
                writer.writerow(
                    [
                        rec.problem,
                        repr(rec.b),
                        rec.algorithm,
                        rec.seed,
                        rec.verdict,
                        rec.fcalls,
                        repr(rec.final_gap),
                        repr(rec.wall_ms),
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write {csv_path}: {exc}") from exc
    written.append(csv_path)

    json_path = outdir / "results.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(build_payload(result, config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(json_path)

    scaling_path = outdir / "scaling.csv"
    with open(scaling_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["problem", "algorithm", "b", "trials", "success_rate",
             "mean_fcalls", "std_fcalls"]
        )
        for row in result.summaries:
            writer.writerow(
                [
                    row["problem"],
                    row["algorithm"],
                    repr(row["b"]) if row["b"] is not None else "",
                    row["trials"],
                    repr(row["success_rate"]),
                    "" if row["success_fcalls_mean"] is None else repr(row["success_fcalls_mean"]),
                    "" if row["success_fcalls_std"] is None else repr(row["success_fcalls_std"]),
                ]
            )
    written.append(scaling_path)

    want_figures = config.figures if figures is None else figures
    if want_figures:
        from . import report

        written.extend(report.render_figures(result.summaries, outdir))
    return written
