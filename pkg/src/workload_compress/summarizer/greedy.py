"""Cost-aware greedy selection with lazy gain evaluation.

Candidates compete on gain per unit of cost.  A pick that would overflow
the budget is discarded from the pool and the loop carries on, so a cheaper
candidate can still fill the leftover room.  After the pool is exhausted the
best single affordable query is compared against the greedy set.

Ties between equal gains go to the earliest position in the workload.  The
lazy path keeps stale gains in a heap keyed ``(-gain, position, stamp)``;
gains only shrink as the summary grows, so a popped entry computed against
the current summary is the exact argmax the eager scan would find.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..metrics import MetricFrame, align_target, target_distribution
from ..model import CompressionConfig, CompressionResult, TokenDistribution, TraceStep, Workload, check_costs
from .objective import ObjectiveState, check_gamma

FALLBACK_WARNING = "best single query beats the greedy set"
NOTHING_FITS_WARNING = "budget is below every query cost; summary is empty"


def resolve_target(config: CompressionConfig, workload: Workload) -> TokenDistribution:
    weights = workload.spec.weights if config.weighted else None
    if isinstance(config.target, Mapping):
        return target_distribution("explicit", workload, config.target)
    return target_distribution(config.target, workload, weights=weights)


@dataclass
class GreedyRun:
    picks: list[int] = field(default_factory=list)
    gains: list[float] = field(default_factory=list)
    spent: list[float] = field(default_factory=list)
    value: float = 0.0


class GreedyContext:
    """Everything a greedy pass needs, resolved once per workload.

    ``d`` is aligned with the workload's token index and ``costs`` with its
    entries.  Several passes over different candidate subsets (the parallel
    and merge paths) can share one context.
    """

    def __init__(self, workload: Workload, config: CompressionConfig,
                 target: TokenDistribution | None = None, costs: Sequence[float] | None = None):
        check_gamma(config.gamma)
        self.workload = workload
        self.config = config
        self.target = resolve_target(config, workload) if target is None else target
        self.d = align_target(self.target, workload).tolist()
        self.costs = list(workload.costs(config.cost_mode) if costs is None else costs)
        check_costs(self.costs)
        self.tokens = workload.index.query_tokens
        self._frame = None

    @property
    def frame(self) -> MetricFrame:
        if self._frame is None:
            self._frame = MetricFrame(self.workload, self.target, weighted=self.config.weighted,
                                      costs=self.costs)
        return self._frame

    def fresh_state(self) -> ObjectiveState:
        return ObjectiveState(self.d, self.config.gamma)

    def run(self, candidates: Sequence[int] | None = None, lazy: bool | None = None) -> GreedyRun:
        cand = list(range(len(self.tokens))) if candidates is None else sorted(set(candidates))
        lazy = self.config.lazy if lazy is None else lazy
        return (self._lazy if lazy else self._eager)(cand)

    def _lazy(self, cand: list[int]) -> GreedyRun:
        # identical (tokens, cost) entries always tie, and the earliest one wins the
        # tie, so each group of duplicates needs a single heap entry: its next position
        state = self.fresh_state()
        run = GreedyRun()
        budget, costs, tokens = self.config.budget, self.costs, self.tokens
        if not cand:
            return run
        min_cost = min(costs[p] for p in cand)
        groups: dict[tuple, list[int]] = {}
        for p in cand:
            groups.setdefault((tokens[p], costs[p]), []).append(p)
        members = {g[0]: g for g in groups.values()}
        heap = [(-state.gain(tokens[p]) / costs[p], p, 0, 0) for p in members]
        heapq.heapify(heap)
        spent, stamp = 0.0, 0
        while heap and spent + min_cost <= budget:
            neg, p, s, k = heap[0]
            if s != stamp:
                heapq.heapreplace(heap, (-state.gain(tokens[p]) / costs[p], p, stamp, k))
                continue
            heapq.heappop(heap)
            if spent + costs[p] > budget:
                # every remaining duplicate costs the same and cannot fit either
                continue
            spent = self._accept(state, run, p, -neg, spent)
            stamp += 1
            group = members[p]
            k += 1
            if k < len(group):
                nxt = group[k]
                members[nxt] = group
                heapq.heappush(heap, (neg, nxt, stamp - 1, k))
        run.value = state.value
        return run

    def _eager(self, cand: list[int]) -> GreedyRun:
        state = self.fresh_state()
        run = GreedyRun()
        budget, costs, tokens = self.config.budget, self.costs, self.tokens
        if not cand:
            return run
        min_cost = min(costs[p] for p in cand)
        pool = list(cand)
        spent = 0.0
        while pool and spent + min_cost <= budget:
            best, best_gain = -1, -math.inf
            for p in pool:
                g = state.gain(tokens[p]) / costs[p]
                if g > best_gain:
                    best, best_gain = p, g
            pool.remove(best)
            if spent + costs[best] <= budget:
                spent = self._accept(state, run, best, best_gain, spent)
        run.value = state.value
        return run

    def _accept(self, state: ObjectiveState, run: GreedyRun, p: int, gain: float, spent: float) -> float:
        state.add(self.tokens[p])
        spent += self.costs[p]
        run.picks.append(p)
        run.gains.append(gain)
        run.spent.append(spent)
        return spent

    def best_single(self, cand: Sequence[int]) -> tuple[int, float]:
        """Affordable candidate with the largest ``G({q})``; ``(-1, 0.0)`` if none fits."""
        state = self.fresh_state()
        best, best_value = -1, -math.inf
        for p in sorted(set(cand)):
            if self.costs[p] <= self.config.budget:
                v = state.gain(self.tokens[p])
                if v > best_value:
                    best, best_value = p, v
        return (best, best_value) if best >= 0 else (-1, 0.0)

    def counts(self, positions: Sequence[int]) -> np.ndarray:
        return self.workload.index.counts_of(positions)

    def score(self, positions: Sequence[int]):
        cfg = self.config
        cost = math.fsum(self.costs[p] for p in positions)
        return self.frame.report(self.counts(positions), cfg.beta, cfg.alpha_kind, cfg.rho_kind, cost)

    def compress(self, candidates: Sequence[int] | None = None, algorithm: str = "greedy") -> CompressionResult:
        cand = list(range(len(self.tokens))) if candidates is None else sorted(set(candidates))
        run = self.run(cand)
        warnings: list[str] = []
        single, single_value = self.best_single(cand)
        if single < 0:
            warnings.append(NOTHING_FITS_WARNING)
        ids = self.workload.ids
        trace = [TraceStep(ids[p], g, c) for p, g, c in zip(run.picks, run.gains, run.spent)]

        if self.config.selection == "beta_score":
            chosen, report = self._best_prefix(run, single, single_value)
            if len(chosen) == 1 and chosen[0] == single and run.picks[:1] != [single]:
                warnings.append(FALLBACK_WARNING)
        else:
            chosen = run.picks
            if single >= 0 and single_value > run.value:
                chosen = [single]
                warnings.append(FALLBACK_WARNING)
            report = self.score(chosen)

        value = self.fresh_state()
        value.add(q for p in chosen for q in self.tokens[p])
        return CompressionResult(
            summary=[ids[p] for p in chosen],
            positions=list(chosen),
            objective_value=value.value,
            metrics=report,
            cost=math.fsum(self.costs[p] for p in chosen),
            trace=trace,
            warnings=warnings,
            algorithm=algorithm,
        )

    def _best_prefix(self, run: GreedyRun, single: int, single_value: float):
        # score every non-empty prefix against the running counts; ties keep the shorter one
        frame, cfg = self.frame, self.config
        m = np.zeros(len(self.d), dtype=np.int64)
        best, best_report, best_score = [], self.score([]), -math.inf
        for k, p in enumerate(run.picks, start=1):
            for tid, c in self.tokens[p]:
                m[tid] += c
            report = frame.report(m, cfg.beta, cfg.alpha_kind, cfg.rho_kind, run.spent[k - 1])
            if report.beta_score > best_score:
                best, best_report, best_score = run.picks[:k], report, report.beta_score
        if single >= 0 and single not in best:
            report = self.score([single])
            if report.beta_score > best_score or (report.beta_score == best_score and len(best) > 1):
                best, best_report = [single], report
        return list(best), best_report


def greedy_compress(workload: Workload, config: CompressionConfig) -> CompressionResult:
    """Budgeted greedy summary of ``workload`` under ``config``."""
    return GreedyContext(workload, config).compress()
