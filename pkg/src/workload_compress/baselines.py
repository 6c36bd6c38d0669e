"""Comparison summaries: random sampling, k-medoids and average-linkage clustering.

Clustering works on a mixed distance: the mean Jaccard distance of the
categorical token sets plus a scaled Euclidean distance between numeric
bucket coordinates.  All baselines return the same result type as greedy,
scored against the same target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import ConfigError, InvalidK, SpecMismatch
from .featurizer.buckets import ZERO_BUCKET
from .metrics import MetricFrame
from .model import CompressionConfig, CompressionResult, FeatureSpec, FeatureVector, Workload, check_costs
from .summarizer.greedy import resolve_target
from .summarizer.objective import ObjectiveState

DEFAULT_SEED = 0


@dataclass(frozen=True)
class DistanceConfig:
    categorical_weight: float = 0.5
    numeric_weight: float = 0.5
    numeric_scale: int = 10

    def __post_init__(self):
        if self.categorical_weight < 0 or self.numeric_weight < 0:
            raise ConfigError("distance weights must be non-negative")
        if not math.isclose(self.categorical_weight + self.numeric_weight, 1.0, abs_tol=1e-9):
            raise ConfigError("distance weights must sum to 1")
        if self.numeric_scale <= 0:
            raise ConfigError("numeric_scale must be positive")

    @classmethod
    def for_spec(cls, spec: FeatureSpec, **kw) -> "DistanceConfig":
        return cls(numeric_scale=spec.bucket_count, **kw)


def _coordinate(bucket, scale: int) -> float:
    if bucket == ZERO_BUCKET:
        return 0.0
    return min(max(bucket / scale, 0.0), 1.0)


def _bucket_of(vec: FeatureVector, feature: str):
    toks = vec.tokens(feature)
    return next(iter(toks)) if toks else None


def query_distance(a: FeatureVector, b: FeatureVector, cfg: DistanceConfig, spec: FeatureSpec) -> float:
    """Distance in [0, 1] between two feature vectors of ``spec``."""
    unknown = (set(a.features()) | set(b.features())) - set(spec.names)
    if unknown:
        raise SpecMismatch(f"features {sorted(unknown)} are not declared in the feature spec")
    cat = [f.name for f in spec.categorical]
    num = [f.name for f in spec.numeric]
    total = 0.0
    if cat:
        jd = 0.0
        for f in cat:
            sa, sb = set(a.tokens(f)), set(b.tokens(f))
            union = len(sa | sb)
            jd += 0.0 if union == 0 else 1.0 - len(sa & sb) / union
        total += cfg.categorical_weight * jd / len(cat)
    if num:
        sq = 0.0
        for f in num:
            ba, bb = _bucket_of(a, f), _bucket_of(b, f)
            xa = 0.0 if ba is None else _coordinate(ba, cfg.numeric_scale)
            xb = 0.0 if bb is None else _coordinate(bb, cfg.numeric_scale)
            sq += (xa - xb) ** 2
        total += cfg.numeric_weight * math.sqrt(sq) / math.sqrt(len(num))
    return total


def distance_matrix(workload: Workload, cfg: DistanceConfig, block: int = 1024) -> np.ndarray:
    """All pairwise distances, vectorized per feature and computed in row blocks."""
    spec = workload.spec
    n = len(workload)
    cat = [f.name for f in spec.categorical]
    num = [f.name for f in spec.numeric]
    out = np.zeros((n, n), dtype=float)
    if n == 0:
        return out

    sets = []
    for f in cat:
        vocab: dict = {}
        rows, cols = [], []
        for i, vec in enumerate(workload.vectors):
            for tok in vec.tokens(f):
                rows.append(i)
                cols.append(vocab.setdefault(tok, len(vocab)))
        mat = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, max(len(vocab), 1)))
        sets.append((mat, np.asarray(mat.sum(axis=1)).ravel()))

    coords = np.zeros((n, len(num)))
    for j, f in enumerate(num):
        for i, vec in enumerate(workload.vectors):
            b = _bucket_of(vec, f)
            coords[i, j] = 0.0 if b is None else _coordinate(b, cfg.numeric_scale)
    sq_norm = (coords ** 2).sum(axis=1)

    for start in range(0, n, block):
        stop = min(start + block, n)
        part = np.zeros((stop - start, n))
        if cat:
            for mat, sizes in sets:
                inter = (mat[start:stop] @ mat.T).toarray()
                union = sizes[start:stop, None] + sizes[None, :] - inter
                part += np.where(union > 0, 1.0 - inter / np.maximum(union, 1), 0.0)
            part *= cfg.categorical_weight / len(cat)
        if num:
            d2 = sq_norm[start:stop, None] + sq_norm[None, :] - 2.0 * coords[start:stop] @ coords.T
            part += cfg.numeric_weight * np.sqrt(np.maximum(d2, 0.0)) / math.sqrt(len(num))
        out[start:stop] = part
    np.fill_diagonal(out, 0.0)
    # symmetrize away rounding differences between blocks
    return np.minimum(out, out.T)


def evaluate_summary(workload: Workload, positions: Sequence[int], config: CompressionConfig,
                     algorithm: str, warnings: list[str] | None = None) -> CompressionResult:
    """Score an arbitrary subset with the same metrics greedy reports."""
    target = resolve_target(config, workload)
    costs = workload.costs(config.cost_mode)
    frame = MetricFrame(workload, target, weighted=config.weighted, costs=costs)
    positions = list(positions)
    m = workload.index.counts_of(positions)
    cost = math.fsum(costs[p] for p in positions)
    state = ObjectiveState(frame.d, config.gamma)
    state.add(q for p in positions for q in workload.index.query_tokens[p])
    ids = workload.ids
    return CompressionResult(
        summary=[ids[p] for p in positions],
        positions=positions,
        objective_value=state.value,
        metrics=frame.report(m, config.beta, config.alpha_kind, config.rho_kind, cost),
        cost=cost,
        warnings=list(warnings or []),
        algorithm=algorithm,
    )


def random_sample(workload: Workload, config: CompressionConfig, seed: int = DEFAULT_SEED) -> CompressionResult:
    """Shuffle with PCG64(seed) and keep every entry that still fits the budget."""
    costs = workload.costs(config.cost_mode)
    check_costs(costs)
    order = np.random.Generator(np.random.PCG64(seed)).permutation(len(workload))
    chosen, spent = [], 0.0
    for p in order.tolist():
        if spent + costs[p] <= config.budget:
            chosen.append(p)
            spent += costs[p]
    return evaluate_summary(workload, chosen, config, "random")


def _check_k(k: int, n: int) -> None:
    if not isinstance(k, (int, np.integer)) or not (1 <= k <= n):
        raise InvalidK(f"k must be an integer in [1, {n}], got {k!r}")


def _medoid(dist: np.ndarray, members: np.ndarray) -> int:
    sub = dist[np.ix_(members, members)].sum(axis=1)
    return int(members[int(np.argmin(sub))])


def _assign(dist: np.ndarray, medoids: list[int]) -> np.ndarray:
    labels = np.argmin(dist[:, medoids], axis=1)
    for c, m in enumerate(medoids):
        labels[m] = c
    return labels


def kmedoids_positions(dist: np.ndarray, k: int, max_iters: int = 100) -> tuple[list[int], list[float]]:
    """Medoid positions and the per-iteration assignment cost."""
    n = dist.shape[0]
    _check_k(k, n)
    first = int(np.argmax(dist.sum(axis=1)))
    medoids = [first]
    nearest = dist[first].copy()
    while len(medoids) < k:
        cand = nearest.copy()
        cand[medoids] = -1.0
        nxt = int(np.argmax(cand))
        medoids.append(nxt)
        nearest = np.minimum(nearest, dist[nxt])
    labels = _assign(dist, medoids)
    history = [float(dist[np.arange(n), np.asarray(medoids)[labels]].sum())]
    for _ in range(max_iters):
        medoids = [_medoid(dist, np.flatnonzero(labels == c)) for c in range(k)]
        new = _assign(dist, medoids)
        history.append(float(dist[np.arange(n), np.asarray(medoids)[new]].sum()))
        if np.array_equal(new, labels):
            break
        labels = new
    return medoids, history


def kmedoids(workload: Workload, k: int, config: CompressionConfig, cfg: DistanceConfig | None = None,
             max_iters: int = 100, dist: np.ndarray | None = None) -> CompressionResult:
    """Farthest-first seeded k-medoids; the summary is the k medoids in cluster order."""
    _check_k(k, len(workload))
    cfg = cfg or DistanceConfig.for_spec(workload.spec)
    dist = distance_matrix(workload, cfg) if dist is None else dist
    medoids, _ = kmedoids_positions(dist, k, max_iters)
    return evaluate_summary(workload, medoids, config, "kmedoids")


def average_linkage(dist: np.ndarray, k: int) -> list[np.ndarray]:
    """Agglomerate until ``k`` clusters remain; returns member arrays in slot order.

    Each step merges the closest pair by mean distance, ties broken by the
    smallest ``(i, j)`` slot pair; the merged cluster keeps the lower slot.
    """
    n = dist.shape[0]
    _check_k(k, n)
    D = dist.astype(float).copy()
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    alive = np.ones(n, dtype=bool)
    members = {i: [i] for i in range(n)}
    # per-row nearest neighbour, ties to the smallest column; dead slots are inf rows/columns
    nn_j = np.argmin(D, axis=1)
    nn_d = D[np.arange(n), nn_j]

    for _ in range(n - k):
        # the first row holding the global minimum, with its first minimal column,
        # is the lexicographically smallest closest pair
        i = int(np.argmin(nn_d))
        j = int(nn_j[i])
        i, j = min(i, j), max(i, j)
        merged = (size[i] * D[i] + size[j] * D[j]) / (size[i] + size[j])
        merged[i] = merged[j] = np.inf
        merged[~alive] = np.inf
        D[i, :] = merged
        D[:, i] = merged
        D[j, :] = np.inf
        D[:, j] = np.inf
        alive[j] = False
        nn_d[j] = np.inf
        size[i] += size[j]
        members[i].extend(members.pop(j))

        stale = np.flatnonzero(alive & ((nn_j == i) | (nn_j == j)))
        stale = np.union1d(stale, [i])
        rest = np.flatnonzero(alive)
        rest = np.setdiff1d(rest, stale, assume_unique=True)
        closer = (merged[rest] < nn_d[rest]) | ((merged[rest] == nn_d[rest]) & (i < nn_j[rest]))
        nn_d[rest[closer]] = merged[rest[closer]]
        nn_j[rest[closer]] = i
        for r in stale.tolist():
            c = int(np.argmin(D[r]))
            nn_j[r], nn_d[r] = c, D[r, c]
    return [np.asarray(members[i]) for i in sorted(members)]


def hierarchical(workload: Workload, k: int, config: CompressionConfig, cfg: DistanceConfig | None = None,
                 dist: np.ndarray | None = None) -> CompressionResult:
    """Average-linkage agglomerative clustering; the summary is one medoid per cluster."""
    _check_k(k, len(workload))
    cfg = cfg or DistanceConfig.for_spec(workload.spec)
    dist = distance_matrix(workload, cfg) if dist is None else dist
    clusters = average_linkage(dist, k)
    return evaluate_summary(workload, [_medoid(dist, c) for c in clusters], config, "hierarchical")
