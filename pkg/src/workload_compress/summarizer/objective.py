"""The smoothed log objective and its marginal gains.

``G(S, gamma) = sum_t d(t) * ln((m_S(t) + gamma) / gamma)`` over every
(feature, token) pair.  It is non-negative, monotone and submodular for any
``gamma`` in (0, 1]; small ``gamma`` makes an uncovered token very expensive,
larger ``gamma`` turns the objective into a smoothed KL fit to ``d``.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import IncompleteCoverage, InvalidGamma, NonPositiveCost
from ..metrics import align_target, summary_counts
from ..model import FeatureVector, TokenDistribution, Workload


def check_gamma(gamma: float) -> None:
    if not (0 < gamma <= 1):
        raise InvalidGamma(f"gamma must lie in (0, 1], got {gamma!r}")


def objective(counts, target: Mapping, gamma: float) -> float:
    """``G`` for a count map ``{(feature, token): m}`` or a workload."""
    check_gamma(gamma)
    if isinstance(counts, Workload):
        counts = counts.frequencies()
    log_gamma = math.log(gamma)
    total = 0.0
    for key, m in counts.items():
        d = target.get(key, 0.0)
        if d and m:
            total += d * (math.log(m + gamma) - log_gamma)
    return total


def term_gain(d: float, m: int, c: int, gamma: float) -> float:
    # ln(m + c + gamma) - ln(m + gamma), monotone non-increasing in m
    return d * math.log1p(c / (m + gamma))


class ObjectiveState:
    """Running summary counts on a token index together with the cached ``G``.

    ``d`` and ``counts`` are plain lists indexed by token id so that a gain
    evaluation touches only the query's own tokens.
    """

    __slots__ = ("d", "counts", "gamma", "log_gamma", "value")

    def __init__(self, d: Sequence[float], gamma: float):
        check_gamma(gamma)
        self.d = list(d)
        self.counts = [0] * len(self.d)
        self.gamma = gamma
        self.log_gamma = math.log(gamma)
        self.value = 0.0

    @classmethod
    def for_workload(cls, workload: Workload, target: Mapping, gamma: float) -> "ObjectiveState":
        return cls(align_target(target, workload), gamma)

    def gain(self, tokens: Iterable[tuple[int, int]]) -> float:
        g = 0.0
        d, m, gamma = self.d, self.counts, self.gamma
        for tid, c in tokens:
            dt = d[tid]
            if dt:
                g += dt * math.log1p(c / (m[tid] + gamma))
        return g

    def add(self, tokens: Iterable[tuple[int, int]]) -> None:
        d, m, gamma, lg = self.d, self.counts, self.gamma, self.log_gamma
        for tid, c in tokens:
            dt = d[tid]
            if dt:
                self.value += dt * ((math.log(m[tid] + c + gamma) - lg) - (math.log(m[tid] + gamma) - lg))
            m[tid] += c

    def recompute(self) -> float:
        lg = self.log_gamma
        return sum(dt * (math.log(mt + self.gamma) - lg) for dt, mt in zip(self.d, self.counts) if dt and mt)


def marginal_gain(query: FeatureVector | Sequence[tuple[int, int]], state: ObjectiveState, cost: float,
                  index=None) -> float:
    """Normalized gain ``(G(S + q) - G(S)) / c(q)``.

    ``query`` is either a list of ``(token_id, count)`` pairs or a feature
    vector resolved through ``index``.
    """
    if not (cost > 0):
        raise NonPositiveCost(f"cost must be positive, got {cost!r}")
    if isinstance(query, FeatureVector):
        if index is None:
            raise ValueError("a token index is needed to evaluate a feature vector")
        query = [(index.ids[(f, t)], c) for f, t, c in query if (f, t) in index.ids]
    return state.gain(query) / cost


def kl_diagnostic(summary: Workload, reference: Workload, target: Mapping, gamma: float):
    """``(KL(d || p_S), H(d), residual)`` where the residual measures how far
    ``G + ln gamma`` is from ``-KL - H + ln ||S||``.

    Needs every token with positive target mass to occur in the summary.
    """
    check_gamma(gamma)
    m = summary_counts(summary, reference).astype(float)
    d = align_target(target, reference)
    pos = d > 0
    if np.any(m[pos] == 0):
        missing = int(np.count_nonzero(m[pos] == 0))
        raise IncompleteCoverage(f"{missing} tokens with positive target mass are not covered")
    size = m.sum()
    p = m / size
    dp = d[pos]
    kl = math.fsum(dp * np.log(dp / p[pos]))
    entropy = -math.fsum(dp * np.log(dp))
    freq = {k: int(v) for k, v in zip(reference.index.keys, m) if v}
    g = objective(freq, dict(zip(reference.index.keys, d)), gamma)
    residual = abs(g + math.log(gamma) - (-kl - entropy + math.log(size)))
    return kl, entropy, residual


def as_target(target) -> TokenDistribution:
    return target if isinstance(target, TokenDistribution) else TokenDistribution(target)
