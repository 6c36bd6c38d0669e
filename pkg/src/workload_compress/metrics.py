"""Coverage, representativity and the blended score of a summary.

All computations run on arrays aligned with the reference workload's token
index.  By default the induced distributions use the global form (one
normalizer across all features); ``weights`` switches to the per-feature
weighted form ``w_f * m(t, f) / |f(W)|``.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyWorkload,
    NotASubset,
    NotNormalizable,
    TargetSupportViolation,
    ZeroCostWorkload,
)
from .model import MetricsReport, TokenDistribution, Workload

EXPLICIT_TOL = 1e-6


def _weight_array(reference: Workload, weights: Mapping[str, float] | None) -> np.ndarray:
    w = reference.spec.weights if weights is None else weights
    return np.asarray([float(w.get(name, 0.0)) for name in reference.spec.names], dtype=float)


def induced_array(m: np.ndarray, feature_of: np.ndarray, n_features: int,
                  weights: np.ndarray | None = None) -> np.ndarray:
    """Token probabilities from counts ``m``; all zeros for an empty multiset."""
    m = np.asarray(m, dtype=float)
    if weights is None:
        total = m.sum()
        return m / total if total > 0 else np.zeros_like(m)
    per_feature = np.bincount(feature_of, weights=m, minlength=n_features)
    w = np.where(per_feature > 0, weights, 0.0)
    wsum = w.sum()
    if wsum <= 0:
        return np.zeros_like(m)
    w = w / wsum
    denom = per_feature[feature_of]
    return np.divide(w[feature_of] * m, denom, out=np.zeros_like(m), where=denom > 0)


def summary_counts(summary: Workload, reference: Workload) -> np.ndarray:
    """Counts of the summary's tokens on the reference index; checks containment by id."""
    need = Counter(summary.ids)
    have = Counter(reference.ids)
    extra = [i for i, c in need.items() if c > have.get(i, 0)]
    if extra:
        raise NotASubset(f"summary entries not in the reference workload: {sorted(extra)[:5]}")
    ids = reference.index.ids
    m = np.zeros(len(ids), dtype=np.int64)
    for vec in summary.vectors:
        for feat, tok, cnt in vec:
            tid = ids.get((feat, tok))
            if tid is None:
                raise NotASubset(f"summary token {(feat, tok)!r} absent from the reference workload")
            m[tid] += cnt
    return m


class MetricFrame:
    """Reference-side constants needed to score any summary of ``reference``.

    ``target`` is aligned with the reference index; ``weighted`` selects the
    weighted induced distribution for representativity.
    """

    def __init__(self, reference: Workload, target: TokenDistribution | None = None, *,
                 weighted: bool = False, weights: Mapping[str, float] | None = None,
                 costs: Sequence[float] | None = None):
        self.reference = reference
        idx = reference.index
        self.spec = reference.spec
        self.n_features = len(self.spec.features)
        self.feature_of = idx.feature_of
        self.m_W = idx.counts
        self.w = _weight_array(reference, weights)
        self.weighted = weighted
        self.dom_size = np.bincount(self.feature_of, minlength=self.n_features)
        positive = self.w > 0
        self.alpha_features = positive if positive.any() else np.ones(self.n_features, dtype=bool)
        self.target = target
        self.d = None if target is None else align_target(target, reference)
        self.total_cost = None if costs is None else math.fsum(costs)

    def alpha(self, m_S: np.ndarray) -> tuple[np.ndarray, float, float]:
        covered = np.bincount(self.feature_of[m_S > 0], minlength=self.n_features)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(self.dom_size > 0, covered / np.maximum(self.dom_size, 1), 1.0)
        a_min = float(a[self.alpha_features].min())
        a_avg = float(np.dot(self.w, a))
        return a, a_min, min(a_avg, 1.0)

    def p(self, m: np.ndarray) -> np.ndarray:
        return induced_array(m, self.feature_of, self.n_features, self.w if self.weighted else None)

    def rho(self, m_S: np.ndarray) -> tuple[float, float]:
        if self.d is None:
            raise ValueError("no target distribution")
        if len(self.d) == 0:
            return 1.0, 1.0
        diff = np.abs(self.p(m_S) - self.d)
        return float(1.0 - 0.5 * math.fsum(diff)), float(1.0 - diff.max())

    def report(self, m_S: np.ndarray, beta: float, alpha_kind: str = "min", rho_kind: str = "l1",
               cost: float | None = None) -> MetricsReport:
        a, a_min, a_avg = self.alpha(m_S)
        r1, rinf = self.rho(m_S)
        alpha = a_min if alpha_kind == "min" else a_avg
        rho = r1 if rho_kind == "l1" else rinf
        eta = float("nan")
        if cost is not None and self.total_cost is not None:
            if self.total_cost <= 0:
                raise ZeroCostWorkload("workload has zero total cost")
            eta = 1.0 - cost / self.total_cost
        return MetricsReport(
            alpha_per_feature={name: float(a[i]) for i, name in enumerate(self.spec.names)},
            alpha_min=a_min,
            alpha_avg=a_avg,
            rho_1=r1,
            rho_inf=rinf,
            beta_score=beta_score(alpha, rho, beta),
            eta=eta,
        )


def align_target(target: Mapping, reference: Workload, tol: float = 1e-9) -> np.ndarray:
    ids = reference.index.ids
    d = np.zeros(len(ids), dtype=float)
    outside = []
    for key, p in target.items():
        tid = ids.get(key)
        if tid is None:
            if p > 0:
                outside.append(key)
            continue
        d[tid] = p
    if outside:
        raise TargetSupportViolation(
            f"{len(outside)} target tokens lie outside the workload's active domain, e.g. {outside[0]!r}"
        )
    return d


def induced_distribution(workload: Workload, weights: Mapping[str, float] | None = None) -> TokenDistribution:
    """Token distribution induced by a workload.

    Without ``weights`` every token is counted against ``||W||``; with
    weights each feature keeps its own share ``w_f``.
    """
    if workload.size == 0:
        raise EmptyWorkload("cannot induce a distribution from an empty workload")
    idx = workload.index
    w = None if weights is None else _weight_array(workload, weights)
    p = induced_array(idx.counts, idx.feature_of, len(workload.spec.features), w)
    if p.sum() == 0:
        raise NotNormalizable("all weighted features are empty")
    return TokenDistribution({k: float(v) for k, v in zip(idx.keys, p)})


def coverage(summary: Workload, reference: Workload, weights: Mapping[str, float] | None = None):
    """Per-feature coverage factors plus their minimum and weighted mean.

    Features with an empty active domain count as fully covered.  Features
    of weight zero are left out of the minimum.
    """
    frame = MetricFrame(reference, weights=weights)
    a, a_min, a_avg = frame.alpha(summary_counts(summary, reference))
    return {name: float(a[i]) for i, name in enumerate(reference.spec.names)}, a_min, a_avg


def representativity(summary: Workload, reference: Workload, target: Mapping,
                     weights: Mapping[str, float] | None = None) -> tuple[float, float]:
    """``(rho_1, rho_inf)`` of the summary against ``target``.

    Sums and maxima run over the reference's active domain; an empty
    summary induces the all-zero distribution.
    """
    frame = MetricFrame(reference, target, weighted=weights is not None, weights=weights)
    return frame.rho(summary_counts(summary, reference))


def beta_score(alpha: float, rho: float, beta: float) -> float:
    # exact at both endpoints: 1 * a + 0 * r == a
    return beta * alpha + (1.0 - beta) * rho


def compression_ratio(summary: Workload, reference: Workload, cost_mode: str = "unit") -> float:
    total = math.fsum(reference.costs(cost_mode))
    if total <= 0:
        raise ZeroCostWorkload("workload has zero total cost")
    return 1.0 - math.fsum(summary.costs(cost_mode)) / total


def target_distribution(mode, reference: Workload, explicit: Mapping | None = None,
                        weights: Mapping[str, float] | None = None) -> TokenDistribution:
    """Build the target ``d`` for ``input``, ``uniform`` or ``explicit`` mode.

    Uniform spreads mass evenly over the union of active domains, or over
    each feature's domain scaled by ``w_f`` when weights are given.
    Explicit targets are checked against the reference's active domain and
    renormalized when within 1e-6 of summing to one.
    """
    if isinstance(mode, Mapping):
        mode, explicit = "explicit", mode
    if mode == "input":
        return induced_distribution(reference, weights)
    if mode == "uniform":
        idx = reference.index
        if len(idx) == 0:
            raise EmptyWorkload("cannot build a uniform target over an empty domain")
        if weights is None:
            u = 1.0 / len(idx)
            return TokenDistribution({k: u for k in idx.keys})
        F = len(reference.spec.features)
        w = _weight_array(reference, weights)
        dom = np.bincount(idx.feature_of, minlength=F)
        w = np.where(dom > 0, w, 0.0)
        if w.sum() <= 0:
            raise NotNormalizable("all weighted features have empty domains")
        w = w / w.sum()
        mass = {k: float(w[f] / dom[f]) for k, f in zip(idx.keys, idx.feature_of) if w[f] > 0}
        return TokenDistribution(mass)
    if mode == "explicit":
        if explicit is None:
            raise NotNormalizable("explicit target mode needs a distribution")
        align_target(explicit, reference)
        return TokenDistribution.normalized(explicit, tol=EXPLICIT_TOL)
    raise ValueError(f"unknown target mode {mode!r}")
