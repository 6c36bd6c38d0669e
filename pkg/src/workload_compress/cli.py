"""Command line entry point: ``compress``, ``merge`` and ``generate``.

Exit status 0 on success, 1 for configuration errors (bad flags, unreadable
files, invalid parameters) and 2 for data errors (schema problems, targets
outside the workload, incompatible summaries).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

from . import baselines, io, synthetic
from .errors import (
    ConfigError,
    DataError,
    InvalidGamma,
    InvalidK,
    NonPositiveCost,
    SpecMismatch,
    TargetSupportViolation,
)
from .model import CompressionConfig, CompressionResult
from .summarizer import greedy_compress, merge_summaries, parallel_compress

log = logging.getLogger("workload_compress")

ALGORITHMS = ("greedy", "random", "kmedoids", "hierarchical")
FLAG_OF = {
    InvalidGamma: "--gamma",
    InvalidK: "--k",
    TargetSupportViolation: "--target",
    NonPositiveCost: "--cost",
    SpecMismatch: "--summary",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _budget(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("budget must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="workload-compress", description="Summarize SQL query logs into small representative workloads.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compress", help="summarize one log")
    c.add_argument("--log", required=True, help="JSONL query log")
    c.add_argument("--spec", help="feature spec JSON (default: SQL features plus execution statistics)")
    c.add_argument("--algorithm", choices=ALGORITHMS, default="greedy")
    c.add_argument("--budget", type=_budget, required=True)
    c.add_argument("--cost", default="unit", help="unit or field:NAME")
    c.add_argument("--gamma", type=float, default=1e-25)
    c.add_argument("--beta", type=float, default=0.5)
    c.add_argument("--alpha", choices=("min", "avg"), default="min")
    c.add_argument("--rho", choices=("l1", "linf"), default="l1")
    c.add_argument("--target", default="input", help="input, uniform or file:PATH")
    c.add_argument("--select", choices=("objective", "score"), default="objective")
    c.add_argument("--partitions", type=int, default=1)
    c.add_argument("--workers", type=int, default=None, help="processes for --partitions > 1")
    c.add_argument("--weighted", action="store_true", help="use per-feature weighted distributions")
    c.add_argument("--eager", action="store_true", help="recompute every gain each round")
    c.add_argument("--seed", type=int, default=baselines.DEFAULT_SEED)
    c.add_argument("--k", type=int, help="cluster count for kmedoids and hierarchical")
    c.add_argument("--max-iters", type=int, default=100)
    c.add_argument("--out", help="report path (default: stdout)")

    m = sub.add_parser("merge", help="merge two summary reports of separate logs")
    m.add_argument("--summary", action="append", required=True, help="report JSON; give exactly two")
    m.add_argument("--mode", choices=("union", "regreedy"), default="union")
    m.add_argument("--budget", type=_budget, help="budget for regreedy (default: the first report's)")
    m.add_argument("--out")

    g = sub.add_parser("generate", help="write a templated synthetic log")
    g.add_argument("--templates", type=int, default=22)
    g.add_argument("--instances-per-template", default="uniform:19", help="uniform:N or skew:harmonic[:BASE]")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--limit", type=int, help="keep only the first N entries")
    g.add_argument("--out", help="JSONL path (default: stdout)")
    return p


def _config(args, spec) -> tuple[CompressionConfig, str]:
    target = args.target
    if target.startswith("file:"):
        label = target
        target = io.read_target(target[len("file:"):], spec)
    elif target not in ("input", "uniform"):
        raise ConfigError(f"--target: expected input, uniform or file:PATH, got {target!r}")
    else:
        label = target
    cfg = CompressionConfig(
        budget=args.budget, gamma=args.gamma, beta=args.beta, cost_mode=args.cost, target=target,
        selection="beta_score" if args.select == "score" else "objective",
        partitions=args.partitions, alpha_kind=args.alpha, rho_kind=args.rho,
        weighted=args.weighted, lazy=not args.eager,
    )
    return cfg, label


def _run(workload, cfg: CompressionConfig, args) -> CompressionResult:
    if args.algorithm == "greedy":
        if cfg.partitions > 1:
            return parallel_compress(workload, cfg, workers=args.workers)
        return greedy_compress(workload, cfg)
    if args.algorithm == "random":
        return baselines.random_sample(workload, cfg, seed=args.seed)
    if args.k is None:
        raise ConfigError(f"--k is required for --algorithm {args.algorithm}")
    if args.algorithm == "kmedoids":
        return baselines.kmedoids(workload, args.k, cfg, max_iters=args.max_iters)
    return baselines.hierarchical(workload, args.k, cfg)


def cmd_compress(args) -> int:
    t0 = time.perf_counter()
    workload, stats = io.ingest(args.log, args.spec)
    io.require_nonempty(workload)
    t1 = time.perf_counter()
    cfg, label = _config(args, workload.spec)
    result = _run(workload, cfg, args)
    t2 = time.perf_counter()
    config = io.config_to_json(cfg, label)
    config.update(algorithm=args.algorithm, seed=args.seed, k=args.k, max_iters=args.max_iters)
    report = io.report_json(
        result,
        config=config,
        timings_ms={"ingest": 1e3 * (t1 - t0), "compress": 1e3 * (t2 - t1)},
        inputs={"log": str(Path(args.log).resolve()),
                "spec": None if args.spec is None else str(Path(args.spec).resolve()),
                "resolved_spec": io.spec_to_json(workload.spec)},
        ingest_stats={"parsed": stats.parsed, "skipped": stats.skipped, "clamped": dict(stats.clamped)},
    )
    for w in result.warnings:
        log.warning(w)
    _emit(report, args.out)
    return 0


def _load_summary(path: str):
    rep = io.read_report(path)
    inputs = rep["inputs"]
    workload, _ = io.ingest(inputs["log"], inputs.get("spec"), require_fixed_bounds=True)
    positions = io.positions_of(workload, rep["summary_ids"])
    stub = CompressionResult(summary=list(rep["summary_ids"]), positions=positions,
                             objective_value=math.nan, metrics=None, cost=math.nan)
    return rep, workload, stub


def cmd_merge(args) -> int:
    if len(args.summary) != 2:
        raise ConfigError("--summary: give exactly two reports")
    t0 = time.perf_counter()
    (ra, wa, sa), (rb, wb, sb) = (_load_summary(p) for p in args.summary)
    c = ra.get("config", {})
    budget = args.budget if args.budget is not None else c.get("budget", math.inf)
    target = c.get("target", "input")
    if target not in ("input", "uniform"):
        # explicit targets belong to one batch; the merged workload uses its own distribution
        target = "input"
    cfg = CompressionConfig(budget=budget, gamma=c.get("gamma", 1e-25), beta=c.get("beta", 0.5),
                            cost_mode=c.get("cost_mode", "unit"), target=target,
                            alpha_kind=c.get("alpha_kind", "min"), rho_kind=c.get("rho_kind", "l1"),
                            weighted=c.get("weighted", False))
    result = merge_summaries(sa, wa, sb, wb, mode=args.mode, config=cfg)
    t1 = time.perf_counter()
    config = io.config_to_json(cfg)
    config["mode"] = args.mode
    report = io.report_json(
        result, config=config, timings_ms={"merge": 1e3 * (t1 - t0)},
        inputs={"summaries": [str(Path(p).resolve()) for p in args.summary],
                "logs": [ra["inputs"]["log"], rb["inputs"]["log"]],
                "spec": ra["inputs"].get("spec")},
    )
    _emit(report, args.out)
    return 0


def cmd_generate(args) -> int:
    if args.templates < 1:
        raise ConfigError("--templates must be >= 1")
    rows = synthetic.generate(args.templates, args.instances_per_template, args.seed, args.limit)
    text = io.write_log(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _emit(report: dict, out: str | None) -> None:
    text = io.write_json(report, out)
    if out is None:
        sys.stdout.write(text)


def _flag_hint(exc: Exception) -> str:
    for kind, flag in FLAG_OF.items():
        if isinstance(exc, kind):
            return f" ({flag})"
    return ""


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        handler = {"compress": cmd_compress, "merge": cmd_merge, "generate": cmd_generate}[args.command]
        return handler(args)
    except DataError as exc:
        print(f"error: {type(exc).__name__}{_flag_hint(exc)}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {type(exc).__name__}{_flag_hint(exc)}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
