"""Acceptance gate: one group of checks per criterion, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from helpers import (
    NUMERIC_NAMES,
    PRINTED_BUCKETS,
    brute_force_best,
    counterexample_workload,
    exact_p,
    exact_rho,
    random_workload,
    running_workload,
)
from workload_compress import synthetic
from workload_compress.baselines import DistanceConfig, distance_matrix, hierarchical, kmedoids, random_sample
from workload_compress.featurizer import default_spec, featurize_batch
from workload_compress.metrics import coverage, induced_distribution, representativity
from workload_compress.model import CompressionConfig, Workload
from workload_compress.summarizer import (
    GreedyContext,
    greedy_compress,
    kl_diagnostic,
    merge_summaries,
    objective,
    parallel_compress,
)

APPROX = 0.5 * (1 - 1 / math.e)

# ---- 1: running example ----------------------------------------------------

C1 = "running example sizes, coverage, representativity, token tables"

# distributions from the worked example, three decimals
TABLE_P_W = {("function_call", "AVG"): 0.031, ("function_call", "MAX"): 0.062, ("function_call", "COUNT"): 0.031,
             ("table_reference", "t1"): 0.093, ("table_reference", "t2"): 0.062, ("table_reference", "t3"): 0.031}
TABLE_P_S = {("function_call", "AVG"): 0.043, ("function_call", "MAX"): 0.086, ("function_call", "COUNT"): 0.0,
             ("table_reference", "t1"): 0.086, ("table_reference", "t2"): 0.043, ("table_reference", "t3"): 0.043}


@pytest.mark.criterion(1, C1)
def test_c1_sizes_and_coverage():
    t0 = time.perf_counter()
    W = running_workload()
    assert [v.size for v in W.vectors] == [11, 9, 12]
    assert W.size == 32
    S = W.subset([0, 2])
    _, a_min, a_avg = coverage(S, W)
    assert abs(a_min - 2 / 3) <= 1e-12
    assert abs(a_avg - 23 / 30) <= 1e-12
    _, rho_inf = representativity(S, W, induced_distribution(W))
    assert abs(rho_inf - 0.96875) <= 1e-12
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(1, C1)
def test_c1_rho_1_matches_printed_value():
    W = running_workload()
    S = W.subset([0, 2])
    rho_1, _ = representativity(S, W, induced_distribution(W))
    assert abs(rho_1 - 0.779) <= 5e-4, f"rho_1 = {rho_1!r} (exact value {exact_rho(S.vectors, W.vectors, exact_p(W.vectors))[0]})"


@pytest.mark.criterion(1, C1)
def test_c1_token_tables():
    W = running_workload()
    S = W.subset([0, 2])
    p_W, p_S = induced_distribution(W), induced_distribution(S)
    # the printed tables cut probabilities after the third decimal
    for key, want in TABLE_P_W.items():
        assert math.floor(p_W.get(key) * 1000) / 1000 == pytest.approx(want, abs=1e-12), key
    for key, want in TABLE_P_S.items():
        assert math.floor(p_S.get(key) * 1000) / 1000 == pytest.approx(want, abs=1e-12), key


# ---- 2: bucket matrix ------------------------------------------------------

@pytest.mark.criterion(2, "bucket matrix of the running example (18 cells)")
def test_c2_bucket_matrix():
    W = running_workload()
    got = {q: tuple(next(iter(v.tokens(f))) for f in NUMERIC_NAMES) for q, v in zip(W.ids, W.vectors)}
    mismatches = [(q, f, got[q][j], PRINTED_BUCKETS[q][j])
                  for q in PRINTED_BUCKETS for j, f in enumerate(NUMERIC_NAMES) if got[q][j] != PRINTED_BUCKETS[q][j]]
    assert not mismatches, f"cells differing (query, feature, computed, printed): {mismatches}"


# ---- 3: objective properties -----------------------------------------------

def _random_target(rng, w: Workload) -> dict:
    if rng.random() < 0.5:
        return dict(induced_distribution(w))
    keys = w.index.keys
    mass = rng.random(len(keys)) * (rng.random(len(keys)) < 0.7)
    if mass.sum() == 0:
        mass[0] = 1.0
    mass = mass / mass.sum()
    return {k: float(v) for k, v in zip(keys, mass) if v > 0}


@pytest.mark.criterion(3, "objective non-negative, monotone, submodular")
def test_c3_objective_properties():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    trials = 1000
    for _ in range(trials):
        n = int(rng.integers(2, 51))
        w = random_workload(rng, n, n_features=int(rng.integers(1, 4)), domain=int(rng.integers(2, 10)))
        gamma = float(10.0 ** rng.uniform(-25, 0))
        d = _random_target(rng, w)
        perm = rng.permutation(n)
        q = int(perm[0])
        t_size = int(rng.integers(0, n))
        T = [int(i) for i in perm[1:1 + t_size]]
        S = [i for i in T if rng.random() < 0.5]

        def G(pos):
            return objective(w.subset(pos), d, gamma)

        gS, gT, gSq, gTq = G(S), G(T), G(S + [q]), G(T + [q])
        assert gS >= 0 and gT >= 0
        assert gSq >= gS - 1e-9 and gT >= gS - 1e-9
        assert gSq - gS >= gTq - gT - 1e-9
    assert time.perf_counter() - t0 < 30.0


# ---- 4: KL identity --------------------------------------------------------

@pytest.mark.criterion(4, "KL identity for full-coverage summaries")
def test_c4_kl_identity():
    rng = np.random.default_rng(4)
    gamma = 1e-12
    for _ in range(100):
        n = int(rng.integers(2, 40))
        w = random_workload(rng, n, n_features=int(rng.integers(1, 4)))
        order = [int(i) for i in rng.permutation(n)]
        chosen, seen = [], set()
        universe = set(w.index.keys)
        for p in order:
            keys = {(f, t) for f, t, _ in w.vectors[p]}
            if not keys <= seen or rng.random() < 0.3:
                chosen.append(p)
                seen |= keys
            if seen == universe and rng.random() < 0.5:
                break
        assert seen == universe
        _, _, residual = kl_diagnostic(w.subset(chosen), w, induced_distribution(w), gamma)
        assert residual <= 1e-6


# ---- 5 and 6: approximation and lazy/eager equivalence ----------------------

def _small_instances():
    rng = np.random.default_rng(5)
    out = []
    for _ in range(200):
        n = int(rng.integers(1, 13))
        w = random_workload(rng, n, n_features=int(rng.integers(1, 4)), domain=int(rng.integers(2, 8)))
        gamma = float(10.0 ** rng.uniform(-25, 0))
        budget = int(rng.integers(1, 5))
        target = "input" if rng.random() < 0.6 else "uniform"
        out.append((w, CompressionConfig(budget=budget, gamma=gamma, target=target)))
    return out


@pytest.mark.criterion(5, "greedy within 1/2(1-1/e) of the brute-force optimum")
def test_c5_approximation():
    t0 = time.perf_counter()
    violations = []
    for k, (w, cfg) in enumerate(_small_instances()):
        res = greedy_compress(w, cfg)
        d = dict(GreedyContext(w, cfg).target)
        opt = brute_force_best(w, d, cfg.gamma, cfg.budget)
        if res.objective_value < APPROX * opt - 1e-9:
            violations.append((k, res.objective_value, opt))
        assert res.cost <= cfg.budget
    assert not violations
    assert time.perf_counter() - t0 < 60.0


def _ids(w, cfg, lazy):
    return greedy_compress(w, cfg.replace(lazy=lazy)).summary


@pytest.mark.criterion(6, "lazy and eager greedy select identical sequences")
def test_c6_lazy_equals_eager():
    rng = np.random.default_rng(6)
    for w, cfg in _small_instances():
        assert _ids(w, cfg, True) == _ids(w, cfg, False)
    for _ in range(50):
        w = random_workload(rng, 500, n_features=3, domain=int(rng.integers(3, 12)), costs=bool(rng.random() < 0.5))
        cfg = CompressionConfig(budget=float(rng.integers(5, 40)), gamma=float(10.0 ** rng.uniform(-25, 0)))
        assert _ids(w, cfg, True) == _ids(w, cfg, False)


# ---- 7: representativity pathologies ---------------------------------------

@pytest.mark.criterion(7, "non-monotone and non-submodular representativity witnesses")
def test_c7_witnesses():
    W = counterexample_workload()
    d = induced_distribution(W)

    def rho1(pos):
        return representativity(W.subset(pos), W, d)[0]

    exact_d = exact_p(W.vectors)

    def rho1_exact(pos):
        return exact_rho([W.vectors[i] for i in pos], W.vectors, exact_d)[0]

    assert rho1_exact([2]) == 1 and rho1_exact([0, 2]) == Fraction(5, 6)
    assert rho1([2]) == 1.0
    assert abs(rho1([0, 2]) - 5 / 6) <= 1e-15
    assert rho1_exact([0, 2]) + rho1_exact([1, 2]) == Fraction(10, 6)
    assert rho1_exact([0, 1, 2]) + rho1_exact([2]) == 2
    assert rho1([0, 2]) + rho1([1, 2]) < rho1([0, 1, 2]) + rho1([2])


# ---- 8: coverage dominance -------------------------------------------------

@pytest.mark.criterion(8, "full coverage at tiny gamma when affordable")
def test_c8_full_coverage():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(1, 101))
        w = random_workload(rng, n, n_features=int(rng.integers(1, 4)), domain=int(rng.integers(2, 30)),
                            costs=bool(rng.random() < 0.5))
        budget = math.fsum(w.costs("field:cost")) * float(rng.choice([1.0, 1.5]))
        res = greedy_compress(w, CompressionConfig(budget=budget, gamma=1e-25, cost_mode="field:cost"))
        assert res.alpha_min == 1.0


# ---- 9: merge bounds -------------------------------------------------------

@pytest.mark.criterion(9, "union merge keeps coverage and max-deviation floors")
def test_c9_merge_bounds():
    rng = np.random.default_rng(9)
    alpha_bad, rho_bad = [], []
    for trial in range(200):
        n = int(rng.integers(4, 40))
        w = random_workload(rng, n, n_features=int(rng.integers(1, 4)))
        perm = rng.permutation(n)
        cut = int(rng.integers(1, n))
        w1, w2 = w.subset(sorted(perm[:cut].tolist())), w.subset(sorted(perm[cut:].tolist()))
        r1 = greedy_compress(w1, CompressionConfig(budget=int(rng.integers(1, len(w1) + 1))))
        r2 = greedy_compress(w2, CompressionConfig(budget=int(rng.integers(1, len(w2) + 1))))
        m = merge_summaries(r1, w1, r2, w2, mode="union")
        if m.alpha_min < min(r1.alpha_min, r2.alpha_min) / 2 - 1e-12:
            alpha_bad.append(trial)
        if m.rho_inf < min(r1.rho_inf, r2.rho_inf) - 1e-12:
            rho_bad.append((trial, r1.rho_inf, r2.rho_inf, m.rho_inf))
    assert not alpha_bad
    assert not rho_bad, f"{len(rho_bad)} of 200 trials break the max-deviation floor, first: {rho_bad[0]}"


# ---- 10: parallel consistency ----------------------------------------------

@pytest.fixture(scope="module")
def uniform_418():
    rows = synthetic.generate(22, "uniform:19", seed=0)
    w, _ = featurize_batch(synthetic.records(rows), default_spec())
    return w


@pytest.mark.criterion(10, "parallel matches sequential coverage, loses <= 0.1 representativity")
def test_c10_parallel(uniform_418):
    w = uniform_418
    assert len(w) == 418
    cfg = CompressionConfig(budget=60)
    seq = greedy_compress(w, cfg)
    for p in (2, 4, 6):
        par = parallel_compress(w, cfg.replace(partitions=p))
        assert par.cost <= cfg.budget
        assert par.alpha_per_feature == seq.alpha_per_feature, p
        assert seq.rho_1 - par.rho_1 <= 0.1, p


# ---- 11: skewed target -----------------------------------------------------

@pytest.mark.criterion(11, "score-selected prefix covers all function calls minimally")
def test_c11_skewed_target():
    rows = synthetic.generate(22, "skew:harmonic", seed=0)
    w, _ = featurize_batch(synthetic.records(rows), default_spec())
    w = Workload(w.spec.with_weights({"function_call": 1.0}), w.records, w.vectors)
    fc = w.domain("function_call")
    assert len(fc) == 5
    res = greedy_compress(w, CompressionConfig(budget=10, target="uniform", weighted=True,
                                               selection="beta_score", beta=0.5))
    chosen = set().union(*(w.vectors[p].tokens("function_call") for p in res.positions))
    assert chosen == fc
    # smallest number of entries whose function calls cover the domain
    sets = {frozenset(v.tokens("function_call")) for v in w.vectors}
    minimal = next(r for r in range(1, 6) if any(frozenset().union(*c) == fc for c in itertools.combinations(sets, r)))
    assert len(res.summary) == minimal == 3


# ---- 12: algorithm comparison ----------------------------------------------

@pytest.mark.criterion(12, "greedy beats clustering on rho_1 and random on alpha_min")
def test_c12_algorithm_comparison():
    rows = synthetic.generate(22, "skew:harmonic:1850", seed=0, limit=5000)
    w, _ = featurize_batch(synthetic.records(rows), default_spec())
    assert len(w) == 5000
    cfg = CompressionConfig(budget=100)
    g = greedy_compress(w, cfg)
    assert len(g.summary) == 100
    dist = distance_matrix(w, DistanceConfig.for_spec(w.spec))
    km = kmedoids(w, 100, cfg, dist=dist)
    hc = hierarchical(w, 100, cfg, dist=dist)
    rnd = random_sample(w, cfg, seed=0)
    assert g.rho_1 > km.rho_1
    assert g.rho_1 > hc.rho_1
    assert rnd.alpha_min < g.alpha_min


# ---- 13: scaling -----------------------------------------------------------

@pytest.mark.criterion(13, "doubling n from 50k to 100k at most triples greedy time")
def test_c13_scaling():
    rows = synthetic.generate(22, "uniform:4546", seed=13, limit=100_000)
    big, _ = featurize_batch(synthetic.records(rows), default_spec())
    assert len(big) == 100_000

    def timed(n):
        best = math.inf
        for _ in range(2):
            # fresh workload object so the token index is rebuilt inside the timed call
            w = Workload(big.spec, big.records[:n], big.vectors[:n])
            t0 = time.perf_counter()
            res = greedy_compress(w, CompressionConfig(budget=math.isqrt(n)))
            best = min(best, time.perf_counter() - t0)
            assert len(res.summary) == math.isqrt(n)
        return best

    small, large = timed(50_000), timed(100_000)
    assert large / small <= 3.0, (small, large)
