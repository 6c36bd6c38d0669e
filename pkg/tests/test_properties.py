"""Property tests over randomly generated workloads."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from helpers import brute_force_best, exact_counts, g_oracle, random_workload
from workload_compress.baselines import DistanceConfig, distance_matrix, kmedoids_positions, query_distance
from workload_compress.featurizer import default_spec, featurize_batch
from workload_compress.metrics import (
    MetricFrame,
    coverage,
    induced_distribution,
    representativity,
    target_distribution,
)
from workload_compress.model import CompressionConfig
from workload_compress.summarizer import GreedyContext, greedy_compress, objective, parallel_compress
from workload_compress.synthetic import generate, records

seeds = st.integers(0, 2 ** 32 - 1)
gammas = st.sampled_from([1e-25, 1e-6, 1e-2, 0.5, 1.0])
fast = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
many = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _subset(rng, n, p=0.5):
    return [i for i in range(n) if rng.random() < p]


@fast
@given(seeds, st.integers(1, 15))
def test_size_and_union(seed, n):
    rng = np.random.default_rng(seed)
    w = random_workload(rng, n)
    s = _subset(rng, n)
    assert w.size == sum(v.size for v in w.vectors)
    assert all(v.size == sum(c for _, _, c in v) for v in w.vectors)
    left, right = w.subset(s), w.subset([i for i in range(n) if i not in s])
    both = (left + right).frequencies()
    assert both == exact_counts(w.vectors)
    for f in w.spec.names:
        assert left.domain(f) <= w.domain(f)


@fast
@given(seeds, st.integers(1, 15), st.booleans())
def test_distributions_sum_to_one(seed, n, weighted):
    w = random_workload(np.random.default_rng(seed), n)
    weights = {"f0": 0.5, "f1": 0.25, "f2": 0.25} if weighted else None
    for mode in ("input", "uniform"):
        d = target_distribution(mode, w, weights=weights)
        assert abs(math.fsum(d.values()) - 1.0) <= 1e-9
        assert all(v >= 0 for v in d.values())


@fast
@given(seeds, st.integers(1, 12))
def test_metric_ranges(seed, n):
    rng = np.random.default_rng(seed)
    w = random_workload(rng, n)
    s = w.subset(_subset(rng, n))
    p_W = induced_distribution(w)
    _, a_min, a_avg = coverage(s, w)
    assert 0 <= a_min <= a_avg <= 1
    r1, rinf = representativity(s, w, p_W)
    assert 0 <= r1 <= 1 and 0 <= rinf <= 1
    assert representativity(w, w, p_W) == pytest.approx((1.0, 1.0), abs=1e-12)


@many
@given(seeds, gammas)
def test_objective_nonnegative_and_monotone(seed, gamma):
    rng = np.random.default_rng(seed)
    w = random_workload(rng, 8)
    d = induced_distribution(w)
    s = _subset(rng, 8)
    q = int(rng.integers(0, 8))
    base = w.subset(s)
    g = objective(base, d, gamma)
    assert g >= 0
    assert objective(w.subset(s + [q]), d, gamma) >= g - 1e-12


@many
@given(seeds, gammas)
def test_objective_submodular(seed, gamma):
    rng = np.random.default_rng(seed)
    n = 9
    w = random_workload(rng, n)
    d = induced_distribution(w)
    t = _subset(rng, n - 1, 0.6)
    s = [i for i in t if rng.random() < 0.5]
    q = n - 1
    G = lambda pos: objective(w.subset(pos), d, gamma)  # noqa: E731
    assert G(s + [q]) - G(s) >= G(t + [q]) - G(t) - 1e-9


@fast
@given(seeds, st.booleans(), gammas)
def test_lazy_equals_eager(seed, costs, gamma):
    rng = np.random.default_rng(seed)
    w = random_workload(rng, 20, costs=costs)
    cfg = CompressionConfig(budget=float(rng.integers(0, 15)), gamma=gamma, cost_mode="field:cost")
    a = greedy_compress(w, cfg)
    b = greedy_compress(w, replace(cfg, lazy=False))
    assert a.summary == b.summary and a.objective_value == b.objective_value


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 4), gammas)
def test_approximation_against_brute_force(seed, budget, gamma):
    rng = np.random.default_rng(seed)
    w = random_workload(rng, int(rng.integers(2, 11)))
    d = induced_distribution(w)
    res = greedy_compress(w, CompressionConfig(budget=budget, gamma=gamma))
    opt = brute_force_best(w, d, gamma, budget)
    assert res.objective_value >= 0.5 * (1 - 1 / math.e) * opt - 1e-9
    assert res.objective_value == pytest.approx(g_oracle([w.vectors[p] for p in res.positions], d, gamma))


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_coverage_dominance_at_tiny_gamma(seed):
    rng = np.random.default_rng(seed)
    w = random_workload(rng, 10)
    d = induced_distribution(w)
    a, b = w.subset(_subset(rng, 10)), w.subset(_subset(rng, 10))
    dom = lambda s: set(exact_counts(s.vectors))  # noqa: E731
    if dom(a) > dom(b):
        assert objective(a, d, 1e-25) > objective(b, d, 1e-25)


@fast
@given(seeds, st.floats(0, 20))
def test_results_respect_budget(seed, budget):
    rng = np.random.default_rng(seed)
    w = random_workload(rng, 15, costs=True)
    cfg = CompressionConfig(budget=budget, cost_mode="field:cost", gamma=1e-3)
    for res in (greedy_compress(w, cfg), parallel_compress(w, replace(cfg, partitions=3))):
        assert res.cost <= budget + 1e-12
        assert 0 <= res.metrics.eta <= 1


@fast
@given(seeds, st.sampled_from(["objective", "beta_score"]))
def test_prefix_mode_never_worse_than_full_run(seed, selection):
    rng = np.random.default_rng(seed)
    w = random_workload(rng, 12)
    cfg = CompressionConfig(budget=5, gamma=1e-6, selection=selection, beta=0.5)
    res = greedy_compress(w, cfg)
    run = GreedyContext(w, cfg).run()
    full = GreedyContext(w, cfg).score(run.picks).beta_score
    if selection == "beta_score":
        assert res.metrics.beta_score >= full - 1e-12
    else:
        assert res.positions == run.picks or len(res.positions) == 1


@fast
@given(seeds)
def test_distance_properties(seed):
    rng = np.random.default_rng(seed)
    rows = records(generate(templates=5, instances="uniform:3", seed=int(rng.integers(0, 1000))))
    w, _ = featurize_batch(rows, default_spec())
    cfg = DistanceConfig.for_spec(w.spec)
    D = distance_matrix(w, cfg)
    i, j = (int(x) for x in rng.integers(0, len(w), size=2))
    dij = query_distance(w.vectors[i], w.vectors[j], cfg, w.spec)
    assert dij == pytest.approx(query_distance(w.vectors[j], w.vectors[i], cfg, w.spec))
    assert dij == pytest.approx(D[i, j], abs=1e-12)
    assert 0 <= dij <= 1 and query_distance(w.vectors[i], w.vectors[i], cfg, w.spec) == 0
    medoids, history = kmedoids_positions(D, 4)
    assert all(a >= b - 1e-12 for a, b in zip(history, history[1:]))


@fast
@given(seeds)
def test_ingest_is_order_stable(seed):
    rng = np.random.default_rng(seed)
    rows = records(generate(templates=4, instances="uniform:3", seed=3))
    perm = [rows[i] for i in rng.permutation(len(rows))]
    a, _ = featurize_batch(rows, default_spec())
    b, _ = featurize_batch(perm, default_spec())
    assert a.frequencies() == b.frequencies()
    fa, fb = MetricFrame(a, induced_distribution(a)), MetricFrame(b, induced_distribution(b))
    assert fa.rho(a.index.counts) == pytest.approx(fb.rho(b.index.counts))
