"""Fixtures and independent oracles shared by the test modules.

The oracles deliberately avoid the library's arrays and token index: they
work on plain dicts, with ``Fraction`` where the quantity is rational.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np

from workload_compress.featurizer import default_spec, featurize_batch
from workload_compress.model import (
    CATEGORICAL,
    FeatureDecl,
    FeatureSpec,
    FeatureVector,
    QueryRecord,
    Workload,
)

RUNNING_SQL = {
    "Q1": "SELECT a, AVG(b), MAX(c), MAX(d) FROM T1 GROUP BY a",
    "Q2": "SELECT COUNT(*) FROM T1, T2 WHERE T1.a = T2.a",
    "Q3": "SELECT * FROM T1, T2, T3 ORDER BY T1.a, T2.b, T3.c",
}
# execution ms, planning ms, input bytes, output rows, cpu ms; joins come from the SQL
RUNNING_STATS = {
    "Q1": (5, 4, 5e6, 100, 2),
    "Q2": (10, 2, 10e6, 1000, 3),
    "Q3": (8, 5, 20e6, 500, 4),
}
STAT_NAMES = ("execution_time_ms", "planning_time_ms", "input_bytes", "output_rows", "cpu_time_ms")
# bucket matrix as printed for the example (rows Q1..Q3, the six numeric features)
PRINTED_BUCKETS = {
    "Q1": (0, 6, 0, 0, 0, 0),
    "Q2": (10, 0, 6, 10, 5, 5),
    "Q3": (6, 10, 10, 4, 10, 10),
}
NUMERIC_NAMES = STAT_NAMES + ("num_joins",)


def running_records() -> list[QueryRecord]:
    return [QueryRecord(q, RUNNING_SQL[q], dict(zip(STAT_NAMES, RUNNING_STATS[q]))) for q in ("Q1", "Q2", "Q3")]


def running_bounds() -> dict[str, tuple[float, float]]:
    cols = list(zip(*(RUNNING_STATS[q] for q in ("Q1", "Q2", "Q3"))))
    bounds = {name: (min(c), max(c)) for name, c in zip(STAT_NAMES, cols)}
    bounds["num_joins"] = (0, 2)
    return bounds


def running_workload() -> Workload:
    w, _ = featurize_batch(running_records(), default_spec(10, running_bounds()))
    return w


def counterexample_workload() -> Workload:
    """One feature with domain {v1, v2}: q1={v1}, q2={v2}, q3={v1, v2}."""
    spec = FeatureSpec((FeatureDecl("f", CATEGORICAL),))
    vecs = [FeatureVector({"f": {"v1": 1}}), FeatureVector({"f": {"v2": 1}}),
            FeatureVector({"f": {"v1": 1, "v2": 1}})]
    return Workload(spec, [QueryRecord(f"q{i}") for i in (1, 2, 3)], vecs)


def random_workload(rng: np.random.Generator, n: int, n_features: int = 3, domain: int = 6,
                    max_tokens: int = 3, max_count: int = 2, costs: bool = False) -> Workload:
    spec = FeatureSpec(tuple(FeatureDecl(f"f{j}", CATEGORICAL) for j in range(n_features)))
    recs, vecs = [], []
    for i in range(n):
        toks = {}
        for j in range(n_features):
            k = min(int(rng.integers(0, max_tokens + 1)), domain)
            chosen = rng.choice(domain, size=k, replace=False) if k else []
            toks[f"f{j}"] = {f"t{int(t)}": int(rng.integers(1, max_count + 1)) for t in chosen}
        if not any(toks.values()):
            toks["f0"] = {"t0": 1}
        vecs.append(FeatureVector(toks))
        cost = float(rng.integers(1, 4)) if costs else 1.0
        recs.append(QueryRecord(f"r{i:03d}", cost=cost))
    return Workload(spec, recs, vecs)


# ---- exact metric oracle ---------------------------------------------------

def exact_counts(vectors) -> Counter:
    c: Counter = Counter()
    for v in vectors:
        for f, t, k in v:
            c[(f, t)] += k
    return c


def exact_p(vectors) -> dict:
    c = exact_counts(vectors)
    total = sum(c.values())
    return {k: Fraction(v, total) for k, v in c.items()} if total else {}


def exact_alpha(summary_vecs, ref_vecs, features) -> dict:
    ref, sub = exact_counts(ref_vecs), exact_counts(summary_vecs)
    out = {}
    for f in features:
        dom = {t for (g, t) in ref if g == f}
        got = {t for (g, t) in sub if g == f}
        out[f] = Fraction(len(got & dom), len(dom)) if dom else Fraction(1)
    return out


def exact_rho(summary_vecs, ref_vecs, target: dict) -> tuple[Fraction, Fraction]:
    dom = exact_counts(ref_vecs).keys()
    p = exact_p(summary_vecs)
    diffs = [abs(p.get(k, Fraction(0)) - target.get(k, Fraction(0))) for k in dom]
    return 1 - sum(diffs) / 2, 1 - max(diffs)


# ---- objective oracle ------------------------------------------------------

def g_oracle(vectors, target: dict, gamma: float) -> float:
    c = exact_counts(vectors)
    return math.fsum(float(target.get(k, 0)) * math.log((m + gamma) / gamma) for k, m in c.items() if m)


def brute_force_best(workload: Workload, target: dict, gamma: float, budget: float, costs=None) -> float:
    n = len(workload)
    costs = costs or [1.0] * n
    best = 0.0
    for r in range(n + 1):
        for combo in itertools.combinations(range(n), r):
            if sum(costs[i] for i in combo) <= budget:
                best = max(best, g_oracle([workload.vectors[i] for i in combo], target, gamma))
    return best
