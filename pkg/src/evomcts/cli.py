"""Command-line experiment runner.

Runs a grid of (benchmark function, agent) pairs, each repeated over
independent seeded runs, and writes per-pair aggregate histograms (CSV,
JSON, gnuplot data) plus per-run JSONL logs.  Agents are either fixed
UCB1 selection ("uct:<c>") or an evolved selection formula ("siea").

Seeding: every run derives its own seed as the first 8 bytes of
sha256("<base_seed>:<function>:<agent_label>:<run_index>"), so any
single run can be reproduced in isolation and results do not depend on
scheduling order or worker count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    aggregate,
    run_report,
    visit_weighted_counts,
    write_csv,
    write_json,
    write_plotdata,
)
from .bench import FUNCTION_IDS, FunctionEnv
from .mcts import UctPolicy, best_child, run_search
from .siea import EvolutionConfig, run_siea_search

__all__ = [
    "AgentSpec",
    "ExperimentConfig",
    "derive_run_seed",
    "run_experiment",
    "main",
]

#: Exploration constants accepted without --allow-any-c.
CANONICAL_C = (0.5, 1.0, math.sqrt(2.0), 2.0, 3.0)
_C_TOLERANCE = 1e-3


@dataclass(frozen=True)
class AgentSpec:
    """One agent in the grid: kind "uct" (with c) or "siea"."""

    kind: str
    c: float | None = None

    def __post_init__(self):
        if self.kind == "uct":
            if self.c is None:
                raise ValueError("uct agent needs an exploration constant")
        elif self.kind == "siea":
            if self.c is not None:
                raise ValueError("siea agent takes no constant")
        else:
            raise ValueError(f"unknown agent kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "uct":
            return f"uct_c{self.c:g}"
        return "siea"


@dataclass
class ExperimentConfig:
    functions: list = field(default_factory=lambda: list(FUNCTION_IDS))
    agents: list = field(
        default_factory=lambda: [AgentSpec("uct", c) for c in CANONICAL_C] + [AgentSpec("siea")]
    )
    iterations: int = 5000
    runs: int = 30
    bins: int = 100
    base_seed: int = 0
    ea: EvolutionConfig = field(default_factory=EvolutionConfig)
    out_dir: Path = Path("results")
    workers: int = 1
    visit_weighted: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        for f in self.functions:
            if f not in FUNCTION_IDS:
                raise ValueError(f"unknown function {f!r}")
        if any(a.kind == "siea" for a in self.agents):
            if self.post_iterations < 1:
                raise ValueError(
                    "iterations must exceed the evolution budget "
                    f"({self.ea.eval_budget}) when a siea agent is configured"
                )

    @property
    def post_iterations(self) -> int:
        """Search iterations left for a siea agent after evolution, so
        uct and siea agents consume identical reward budgets."""
        return self.iterations - self.ea.eval_budget


def derive_run_seed(base_seed: int, function_id: str, agent_label: str, run_index: int) -> int:
    """Stable 64-bit per-run seed (see module docstring)."""
    key = f"{base_seed}:{function_id}:{agent_label}:{run_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def _execute_run(payload: dict) -> dict:
    """Run one search; plain-data in, plain-data out (process-safe)."""
    rng = random.Random(payload["seed"])
    env = FunctionEnv(payload["function"])
    if payload["kind"] == "uct":
        root, log = run_search(env, UctPolicy(payload["c"]), payload["iterations"], rng)
        history = None
        best_expr = None
        best_fitness = None
        log_span = payload["iterations"]
    else:
        ea = EvolutionConfig(**payload["ea"])
        root, log, best, history = run_siea_search(
            env, ea, payload["post_iterations"], rng
        )
        best_expr = str(best.expression)
        best_fitness = best.fitness
        log_span = payload["post_iterations"]
    result = {
        "log": [[i, x] for i, x in log],
        "log_span": log_span,
        "history": history,
        "best_expr": best_expr,
        "best_fitness": best_fitness,
        "reward_draws": env.reward_draws,
        "root_visits": root.visits,
        "node_count": root.count_nodes(),
        "best_child_centre": env.centre(best_child(root, rng).state),
    }
    if payload["visit_bins"]:
        result["visit_counts"] = [
            float(v) for v in visit_weighted_counts(root, env, payload["visit_bins"])
        ]
    return result


def _write_run_log(path: Path, payload: dict, result: dict) -> None:
    lines = [
        {
            "type": "run",
            "config_id": payload["config_id"],
            "function": payload["function"],
            "agent": payload["agent_label"],
            "kind": payload["kind"],
            "c": payload["c"],
            "seed": payload["seed"],
            "run_index": payload["run_index"],
            "iterations": payload["iterations"],
            "post_iterations": payload["post_iterations"],
        }
    ]
    if result["history"] is not None:
        for record in result["history"]:
            lines.append({"type": "generation", **record})
        lines.append(
            {"type": "evolved", "expr": result["best_expr"], "fitness": result["best_fitness"]}
        )
    lines.append(
        {
            "type": "expansions",
            "iterations": [i for i, _ in result["log"]],
            "centres": [x for _, x in result["log"]],
        }
    )
    lines.append(
        {
            "type": "summary",
            "reward_draws": result["reward_draws"],
            "root_visits": result["root_visits"],
            "node_count": result["node_count"],
            "best_child_centre": result["best_child_centre"],
        }
    )
    with open(path, "w") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True))
            fh.write("\n")


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the full grid; returns {config_id: aggregate HistogramReport}."""
    out_dir = Path(cfg.out_dir)
    logs_dir = out_dir / "logs"
    logs_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for function in cfg.functions:
        for agent in cfg.agents:
            config_id = f"{function}_{agent.label}"
            for run_index in range(cfg.runs):
                payload = {
                    "config_id": config_id,
                    "function": function,
                    "agent_label": agent.label,
                    "kind": agent.kind,
                    "c": agent.c,
                    "run_index": run_index,
                    "seed": derive_run_seed(cfg.base_seed, function, agent.label, run_index),
                    "iterations": cfg.iterations,
                    "post_iterations": cfg.post_iterations if agent.kind == "siea" else None,
                    "ea": None,
                    "visit_bins": cfg.bins if cfg.visit_weighted else None,
                }
                if agent.kind == "siea":
                    payload["ea"] = {
                        "mu": cfg.ea.mu,
                        "lambda_": cfg.ea.lambda_,
                        "generations": cfg.ea.generations,
                        "sims_per_eval": cfg.ea.sims_per_eval,
                        "alpha": cfg.ea.alpha,
                        "beta": cfg.ea.beta,
                        "max_depth": cfg.ea.max_depth,
                    }
                tasks.append(payload)

    started = time.monotonic()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_execute_run, tasks))
    else:
        results = []
        for k, payload in enumerate(tasks, 1):
            results.append(_execute_run(payload))
            print(
                f"[{k}/{len(tasks)}] {payload['config_id']} run {payload['run_index']} "
                f"({time.monotonic() - started:.1f}s elapsed)",
                file=sys.stderr,
            )

    per_config: dict = {}
    visit_rows: dict = {}
    for payload, result in zip(tasks, results):
        cid = payload["config_id"]
        _write_run_log(logs_dir / f"{cid}_run{payload['run_index']:03d}.jsonl", payload, result)
        report = run_report(
            [(i, x) for i, x in result["log"]], result["log_span"], cfg.bins, cid
        )
        per_config.setdefault(cid, []).append(report)
        if "visit_counts" in result:
            visit_rows.setdefault(cid, []).append(result["visit_counts"])

    reports: dict = {}
    for function in cfg.functions:
        for agent in cfg.agents:
            cid = f"{function}_{agent.label}"
            report = aggregate(per_config[cid])
            reports[cid] = report
            meta = {
                "function": function,
                "policy": agent.kind,
                "c_or_evolved": "evolved" if agent.kind == "siea" else agent.c,
                "run_seed": cfg.base_seed,
            }
            write_csv(report, out_dir / f"{cid}.csv", meta)
            json_meta = {
                **meta,
                "iterations": cfg.iterations,
                "log_span": cfg.post_iterations if agent.kind == "siea" else cfg.iterations,
            }
            if cid in visit_rows:
                json_meta["visit_weighted_mean"] = [
                    float(v) for v in np.mean(visit_rows[cid], axis=0)
                ]
            write_json(report, out_dir / f"{cid}.json", json_meta)
            write_plotdata(report, out_dir / f"{cid}.dat")
    print(
        f"done: {len(tasks)} runs, {len(reports)} configs, "
        f"{time.monotonic() - started:.1f}s",
        file=sys.stderr,
    )
    return reports


def _parse_agents(text: str, allow_any_c: bool) -> list:
    agents = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token == "siea":
            agents.append(AgentSpec("siea"))
            continue
        if token.startswith("uct:"):
            raw = token[4:]
            c = math.sqrt(2.0) if raw == "sqrt2" else float(raw)
            if not allow_any_c and not any(abs(c - k) <= _C_TOLERANCE for k in CANONICAL_C):
                raise ValueError(
                    f"c={raw} is not one of the canonical constants "
                    f"{{0.5, 1, sqrt2, 2, 3}}; pass --allow-any-c to use it anyway"
                )
            agents.append(AgentSpec("uct", c))
            continue
        raise ValueError(f"cannot parse agent {token!r} (expected uct:<c> or siea)")
    if not agents:
        raise ValueError("no agents given")
    return agents


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evomcts",
        description="Search-histogram experiments: fixed UCB1 vs evolved selection formulas.",
    )
    parser.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    parser.add_argument("--functions", help="comma list from f1..f5 (default: all)")
    parser.add_argument("--agents", help='comma list, e.g. "uct:0.5,uct:sqrt2,siea" (default: full grid)')
    parser.add_argument("--iterations", type=int, help="search iterations per run (default 5000)")
    parser.add_argument("--runs", type=int, help="independent runs per (function, agent) (default 30)")
    parser.add_argument("--bins", type=int, help="histogram bins over [0,1] (default 100)")
    parser.add_argument("--seed", type=int, help="base seed for per-run seed derivation (default 0)")
    parser.add_argument("--ea-generations", type=int, help="evolution generations (default 20)")
    parser.add_argument("--ea-lambda", type=int, help="offspring per generation (default 4)")
    parser.add_argument("--ea-sims", type=int, help="search iterations per fitness evaluation (default 30)")
    parser.add_argument("--ea-alpha", type=float, help="lower semantic-distance bound (default 5)")
    parser.add_argument("--ea-beta", type=float, help="upper semantic-distance bound (default 10)")
    parser.add_argument("--out", type=Path, help="output directory (default ./results)")
    parser.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
    parser.add_argument(
        "--allow-any-c",
        action="store_true",
        help="accept uct constants outside {0.5, 1, sqrt2, 2, 3}",
    )
    parser.add_argument(
        "--visit-weighted",
        action="store_true",
        help="also export visit-weighted histograms (alternative view)",
    )
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    file_values: dict = {}
    if args.config is not None:
        with open(args.config) as fh:
            file_values = json.load(fh)

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return file_values.get(key, default)

    ea = EvolutionConfig(
        generations=pick(args.ea_generations, "ea_generations", 20),
        lambda_=pick(args.ea_lambda, "ea_lambda", 4),
        sims_per_eval=pick(args.ea_sims, "ea_sims", 30),
        alpha=pick(args.ea_alpha, "ea_alpha", 5.0),
        beta=pick(args.ea_beta, "ea_beta", 10.0),
    )
    functions = pick(args.functions, "functions", None)
    if isinstance(functions, str):
        functions = [f.strip() for f in functions.split(",") if f.strip()]
    agents_raw = pick(args.agents, "agents", None)
    allow_any_c = args.allow_any_c or bool(file_values.get("allow_any_c"))
    if isinstance(agents_raw, list):
        agents_raw = ",".join(agents_raw)
    kwargs = {
        "iterations": pick(args.iterations, "iterations", 5000),
        "runs": pick(args.runs, "runs", 30),
        "bins": pick(args.bins, "bins", 100),
        "base_seed": pick(args.seed, "seed", 0),
        "ea": ea,
        "out_dir": Path(pick(args.out, "out", "results")),
        "workers": pick(args.workers, "workers", 1),
        "visit_weighted": args.visit_weighted or bool(file_values.get("visit_weighted")),
    }
    if functions is not None:
        kwargs["functions"] = functions
    if agents_raw is not None:
        kwargs["agents"] = _parse_agents(agents_raw, allow_any_c)
    return ExperimentConfig(**kwargs)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        run_experiment(cfg)
    except Exception as exc:  # pragma: no cover - defensive
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
