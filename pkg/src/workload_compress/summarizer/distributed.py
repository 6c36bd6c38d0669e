"""Partitioned compression and incremental merging of summaries."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from ..errors import SpecMismatch
from ..model import CompressionConfig, CompressionResult, Workload
from .greedy import GreedyContext, greedy_compress


def round_robin(n: int, parts: int) -> list[list[int]]:
    return [list(range(i, n, parts)) for i in range(parts)]


def _part_picks(ctx: GreedyContext, part: Sequence[int]) -> list[int]:
    return ctx.compress(part).positions


def _part_worker(args) -> list[int]:
    workload, config, target, part = args
    return _part_picks(GreedyContext(workload, config, target), part)


def parallel_compress(workload: Workload, config: CompressionConfig, workers: int | None = None) -> CompressionResult:
    """Summarize ``config.partitions`` round-robin slices, then run greedy on their union.

    Every slice sees the full budget and the target of the whole workload.
    ``workers`` > 1 runs the slices in separate processes; the merge stage is
    always local.
    """
    if config.partitions == 1:
        return greedy_compress(workload, config)
    ctx = GreedyContext(workload, config)
    parts = [p for p in round_robin(len(workload), config.partitions) if p]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            picks = list(pool.map(_part_worker, [(workload, config, ctx.target, p) for p in parts]))
    else:
        picks = [_part_picks(ctx, p) for p in parts]
    pooled = sorted({p for chosen in picks for p in chosen})
    return ctx.compress(pooled, algorithm="parallel")


def check_compatible(a: Workload, b: Workload) -> None:
    sa, sb = a.spec, b.spec
    if sa.names != sb.names or [f.kind for f in sa.features] != [f.kind for f in sb.features]:
        raise SpecMismatch("summaries were built over different feature sets")
    if sa.bucket_count != sb.bucket_count:
        raise SpecMismatch(f"bucket counts differ: {sa.bucket_count} vs {sb.bucket_count}")
    if not (sa.has_fixed_bounds and sb.has_fixed_bounds):
        raise SpecMismatch("merging needs numeric bounds fixed up front")
    if sa != sb:
        raise SpecMismatch("feature specs differ in bounds, bucketing or weights")


def merge_summaries(first: CompressionResult, first_workload: Workload,
                    second: CompressionResult, second_workload: Workload,
                    mode: str = "union", config: CompressionConfig | None = None) -> CompressionResult:
    """Combine two summaries of separate batches.

    ``union`` keeps both summaries as one multiset; ``regreedy`` reruns
    greedy over that multiset with ``config.budget``.  Metrics and the target
    are recomputed against the concatenated workload.
    """
    check_compatible(first_workload, second_workload)
    if config is None:
        if mode == "regreedy":
            raise ValueError("regreedy merging needs a config carrying the budget")
        config = CompressionConfig(budget=math.inf)
    combined = first_workload + second_workload
    offset = len(first_workload)
    pool = list(first.positions) + [offset + p for p in second.positions]
    if mode == "union":
        ctx = GreedyContext(combined, config)
        ids = combined.ids
        state = ctx.fresh_state()
        state.add(q for p in pool for q in ctx.tokens[p])
        return CompressionResult(
            summary=[ids[p] for p in pool],
            positions=pool,
            objective_value=state.value,
            metrics=ctx.score(pool),
            cost=math.fsum(ctx.costs[p] for p in pool),
            algorithm="merge-union",
        )
    if mode == "regreedy":
        return GreedyContext(combined, config).compress(pool, algorithm="merge-regreedy")
    raise ValueError(f"unknown merge mode {mode!r}")
