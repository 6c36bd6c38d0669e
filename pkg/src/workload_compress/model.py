"""Domain types shared by every module: features, tokens, queries, workloads.

A workload is a multiset of featurized queries.  Every query carries a
``FeatureVector`` mapping each feature to a multiset of tokens; frequencies,
active domains and sizes are all derived from those multisets.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import (
    ConfigError,
    InvalidBounds,
    InvalidEpsilon,
    InvalidGamma,
    MissingStatistic,
    NonPositiveCost,
    NotNormalizable,
    SchemaError,
    UnknownFeature,
)

CATEGORICAL = "categorical"
NUMERIC = "numeric"

LINEAR = "linear"
EXPONENTIAL = "exponential"

# Categorical tokens are strings (tuples for product features); numeric
# tokens are integer bucket ids.
Token = Union[str, int, tuple]
TokenKey = tuple  # (feature name, token)

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class FeatureDecl:
    name: str
    kind: str
    bounds: tuple[float, float] | None = None
    weight: float | None = None
    bucketing: str = LINEAR
    epsilon: float | None = None
    # non-empty for product features
    parents: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ConfigError("feature name must be non-empty")
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise ConfigError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.bounds is not None:
            if self.kind != NUMERIC:
                raise ConfigError(f"feature {self.name!r}: bounds only apply to numeric features")
            lo, hi = self.bounds
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
                raise InvalidBounds(f"feature {self.name!r}: need min < max, got {self.bounds}")
        if self.weight is not None and not self.weight >= 0:
            raise ConfigError(f"feature {self.name!r}: weight must be >= 0")
        if self.bucketing not in (LINEAR, EXPONENTIAL):
            raise ConfigError(f"feature {self.name!r}: unknown bucketing {self.bucketing!r}")
        if self.bucketing == EXPONENTIAL:
            if self.kind != NUMERIC:
                raise ConfigError(f"feature {self.name!r}: exponential bucketing needs a numeric feature")
            if self.epsilon is None or not self.epsilon > 0:
                raise InvalidEpsilon(f"feature {self.name!r}: exponential bucketing needs epsilon > 0")
        if self.parents and self.kind != CATEGORICAL:
            raise ConfigError(f"feature {self.name!r}: product features are categorical")

    @property
    def is_product(self) -> bool:
        return bool(self.parents)


@dataclass(frozen=True)
class FeatureSpec:
    """The feature universe plus histogram settings.

    ``open_range`` selects incremental bucketing: numeric values above the
    fixed maximum get bucket ids beyond ``bucket_count`` instead of being
    clamped.
    """

    features: tuple[FeatureDecl, ...]
    bucket_count: int = 10
    open_range: bool = False

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ConfigError(f"duplicate feature names: {dup}")
        if not isinstance(self.bucket_count, int) or self.bucket_count < 1:
            raise ConfigError(f"bucket count H must be a positive integer, got {self.bucket_count!r}")
        for f in self.features:
            for p in f.parents:
                if p not in names:
                    raise UnknownFeature(f"product feature {f.name!r}: unknown parent {p!r}")
        if self.open_range:
            for f in self.numeric:
                if f.bucketing == LINEAR and f.bounds is None:
                    raise InvalidBounds(
                        f"feature {f.name!r}: incremental mode needs fixed bounds for every numeric feature"
                    )
        explicit = [f.weight for f in self.features if f.weight is not None and not f.is_product]
        if explicit:
            self._check_explicit_weights()

    def _check_explicit_weights(self):
        missing = [f.name for f in self.features if f.weight is None and not f.is_product]
        if missing:
            raise ConfigError(f"weights given for some features but not for {missing}")
        total = sum(f.weight or 0.0 for f in self.features)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"feature weights must sum to 1, got {total!r}")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def numeric(self) -> list[FeatureDecl]:
        return [f for f in self.features if f.kind == NUMERIC]

    @property
    def categorical(self) -> list[FeatureDecl]:
        return [f for f in self.features if f.kind == CATEGORICAL]

    def __getitem__(self, name: str) -> FeatureDecl:
        for f in self.features:
            if f.name == name:
                return f
        raise UnknownFeature(f"unknown feature {name!r}")

    def __contains__(self, name: str) -> bool:
        return any(f.name == name for f in self.features)

    def position(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise UnknownFeature(f"unknown feature {name!r}")

    @cached_property
    def weights(self) -> dict[str, float]:
        """Resolved per-feature weights.

        Without explicit weights, base features share the mass uniformly and
        product features get 0.
        """
        if any(f.weight is not None for f in self.features if not f.is_product):
            return {f.name: float(f.weight or 0.0) for f in self.features}
        base = [f for f in self.features if not f.is_product]
        if not base:
            return {f.name: 1.0 / len(self.features) for f in self.features}
        extra = sum(f.weight or 0.0 for f in self.features if f.is_product)
        share = (1.0 - extra) / len(base) if extra < 1.0 else 0.0
        return {f.name: (share if not f.is_product else float(f.weight or 0.0)) for f in self.features}

    @property
    def has_fixed_bounds(self) -> bool:
        return all(f.bounds is not None for f in self.numeric if f.bucketing == LINEAR)

    def with_bounds(self, bounds: Mapping[str, tuple[float, float]]) -> "FeatureSpec":
        feats = tuple(replace(f, bounds=tuple(bounds[f.name])) if f.name in bounds else f for f in self.features)
        return replace(self, features=feats)

    def with_weights(self, weights: Mapping[str, float]) -> "FeatureSpec":
        feats = tuple(replace(f, weight=float(weights.get(f.name, 0.0))) for f in self.features)
        return replace(self, features=feats)


@dataclass(frozen=True)
class QueryRecord:
    id: str
    sql: str | None = None
    stats: Mapping[str, float] = field(default_factory=dict)
    cost: float = 1.0
    # user-supplied categorical values, e.g. columns named in WHERE predicates
    attributes: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.cost >= 0 and math.isfinite(self.cost)):
            raise SchemaError(f"query {self.id!r}: cost must be finite and >= 0")


class FeatureVector:
    """Per-feature token multisets of one query.

    Stored compactly as a tuple of ``(feature, ((token, count), ...))``
    pairs; empty features are omitted.
    """

    __slots__ = ("_items", "_size")

    def __init__(self, tokens: Mapping[str, Mapping[Token, int]] | Iterable = ()):
        if isinstance(tokens, Mapping):
            pairs = tokens.items()
        else:
            pairs = tokens
        items = []
        size = 0
        for feat, counts in pairs:
            if isinstance(counts, Mapping):
                counts = counts.items()
            entries = tuple((t, int(c)) for t, c in counts if c)
            for _, c in entries:
                if c < 0:
                    raise ValueError(f"negative token count in feature {feat!r}")
            if entries:
                items.append((feat, entries))
                size += sum(c for _, c in entries)
        self._items = tuple(items)
        self._size = size

    @property
    def size(self) -> int:
        return self._size

    def __len__(self) -> int:
        return self._size

    def tokens(self, feature: str) -> dict[Token, int]:
        for feat, entries in self._items:
            if feat == feature:
                return dict(entries)
        return {}

    def features(self) -> list[str]:
        return [f for f, _ in self._items]

    def __iter__(self) -> Iterator[tuple[str, Token, int]]:
        for feat, entries in self._items:
            for t, c in entries:
                yield feat, t, c

    def as_dict(self) -> dict[str, dict[Token, int]]:
        return {f: dict(e) for f, e in self._items}

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def __hash__(self):
        return hash(tuple((f, frozenset(e)) for f, e in self._items))

    def __repr__(self) -> str:
        return f"FeatureVector({self.as_dict()!r})"


class TokenIndex:
    """Interned view of a workload's tokens.

    Token ids follow first appearance in workload order; ``query_tokens[i]``
    lists ``(token_id, count)`` pairs of the i-th query.
    """

    def __init__(self, spec: FeatureSpec, vectors: Sequence[FeatureVector]):
        ids: dict[TokenKey, int] = {}
        keys: list[TokenKey] = []
        query_tokens = []
        totals: list[int] = []
        for vec in vectors:
            row = []
            for feat, tok, cnt in vec:
                key = (feat, tok)
                tid = ids.get(key)
                if tid is None:
                    tid = ids[key] = len(keys)
                    keys.append(key)
                    totals.append(0)
                totals[tid] += cnt
                row.append((tid, cnt))
            query_tokens.append(tuple(row))
        self.spec = spec
        self.ids = ids
        self.keys = keys
        self.query_tokens = query_tokens
        self.counts = np.asarray(totals, dtype=np.int64)
        self.feature_of = np.asarray([spec.position(f) for f, _ in keys], dtype=np.int64)
        self.size = int(self.counts.sum())

    def __len__(self) -> int:
        return len(self.keys)

    def counts_of(self, positions: Iterable[int]) -> np.ndarray:
        m = np.zeros(len(self.keys), dtype=np.int64)
        for i in positions:
            for tid, cnt in self.query_tokens[i]:
                m[tid] += cnt
        return m


@dataclass(frozen=True)
class Workload:
    """A multiset of (query record, feature vector) entries."""

    spec: FeatureSpec
    records: tuple[QueryRecord, ...]
    vectors: tuple[FeatureVector, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "vectors", tuple(self.vectors))
        if len(self.records) != len(self.vectors):
            raise ValueError("records and vectors differ in length")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    @cached_property
    def size(self) -> int:
        return sum(v.size for v in self.vectors)

    @cached_property
    def index(self) -> TokenIndex:
        return TokenIndex(self.spec, self.vectors)

    @cached_property
    def _frequencies(self) -> Counter:
        freq: Counter = Counter()
        for vec in self.vectors:
            for feat, tok, cnt in vec:
                freq[(feat, tok)] += cnt
        return freq

    def frequencies(self) -> Counter:
        return Counter(self._frequencies)

    def frequency(self, feature: str, token: Token) -> int:
        if feature not in self.spec:
            raise UnknownFeature(f"unknown feature {feature!r}")
        return self._frequencies.get((feature, token), 0)

    def domain(self, feature: str) -> set:
        if feature not in self.spec:
            raise UnknownFeature(f"unknown feature {feature!r}")
        return {t for (f, t) in self._frequencies if f == feature}

    def subset(self, positions: Iterable[int]) -> "Workload":
        pos = list(positions)
        return Workload(self.spec, [self.records[i] for i in pos], [self.vectors[i] for i in pos])

    def __add__(self, other: "Workload") -> "Workload":
        if not isinstance(other, Workload):
            return NotImplemented
        return Workload(self.spec, self.records + other.records, self.vectors + other.vectors)

    def costs(self, cost_mode: str = "unit") -> list[float]:
        """Per-entry costs under ``unit`` or ``field:NAME`` (``field:cost`` is the record's own cost)."""
        if cost_mode == "unit":
            return [1.0] * len(self.records)
        if not cost_mode.startswith("field:"):
            raise ConfigError(f"unknown cost mode {cost_mode!r}")
        name = cost_mode[len("field:"):]
        out = []
        for r in self.records:
            if name == "cost":
                out.append(float(r.cost))
            elif name in r.stats:
                out.append(float(r.stats[name]))
            else:
                raise MissingStatistic(f"query {r.id!r} has no statistic {name!r} for its cost")
        return out


def workload_size(workload: Workload) -> int:
    return workload.size


def token_frequency(workload: Workload, feature: str, token: Token) -> int:
    return workload.frequency(feature, token)


class TokenDistribution(Mapping):
    """Probability mass over (feature, token) pairs."""

    def __init__(self, mass: Mapping[TokenKey, float], *, tol: float = 1e-9):
        clean = {}
        for key, p in mass.items():
            p = float(p)
            if not p >= 0 or not math.isfinite(p):
                raise NotNormalizable(f"mass of {key!r} is {p!r}")
            if p > 0:
                clean[key] = p
        total = math.fsum(clean.values())
        if abs(total - 1.0) > tol:
            raise NotNormalizable(f"distribution sums to {total!r}")
        self._mass = clean

    @classmethod
    def normalized(cls, mass: Mapping[TokenKey, float], tol: float = 1e-6) -> "TokenDistribution":
        """Renormalize when the total is within ``tol`` of 1, else raise."""
        total = math.fsum(float(p) for p in mass.values())
        if not math.isfinite(total) or abs(total - 1.0) > tol:
            raise NotNormalizable(f"distribution sums to {total!r}, more than {tol} away from 1")
        return cls({k: float(p) / total for k, p in mass.items()})

    def __getitem__(self, key):
        return self._mass[key]

    def get(self, key, default=0.0):
        return self._mass.get(key, default)

    def __iter__(self):
        return iter(self._mass)

    def __len__(self):
        return len(self._mass)

    @property
    def support(self) -> set:
        return set(self._mass)

    def __repr__(self):
        return f"TokenDistribution({len(self._mass)} tokens)"


ALPHA_KINDS = ("min", "avg")
RHO_KINDS = ("l1", "linf")


@dataclass(frozen=True)
class CompressionConfig:
    """Resolved compression parameters.

    ``target`` is ``"input"``, ``"uniform"`` or an explicit
    ``TokenDistribution``.  ``weighted`` switches the induced distributions
    and representativity to the per-feature weighted form.
    """

    budget: float
    gamma: float = 1e-25
    beta: float = 0.5
    cost_mode: str = "unit"
    target: Union[str, TokenDistribution] = "input"
    selection: str = "objective"
    partitions: int = 1
    alpha_kind: str = "min"
    rho_kind: str = "l1"
    weighted: bool = False
    lazy: bool = True

    def __post_init__(self):
        if not (0 < self.gamma <= 1):
            raise InvalidGamma(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if not (0 <= self.beta <= 1):
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta!r}")
        if not (self.budget >= 0):
            raise ConfigError(f"budget must be >= 0, got {self.budget!r}")
        if self.selection not in ("objective", "beta_score"):
            raise ConfigError(f"unknown selection {self.selection!r}")
        if isinstance(self.target, str) and self.target not in ("input", "uniform"):
            raise ConfigError(f"unknown target mode {self.target!r}")
        if not isinstance(self.partitions, int) or self.partitions < 1:
            raise ConfigError(f"partitions must be a positive integer, got {self.partitions!r}")
        if self.alpha_kind not in ALPHA_KINDS:
            raise ConfigError(f"alpha kind must be one of {ALPHA_KINDS}")
        if self.rho_kind not in RHO_KINDS:
            raise ConfigError(f"rho kind must be one of {RHO_KINDS}")
        if self.cost_mode != "unit" and not self.cost_mode.startswith("field:"):
            raise ConfigError(f"unknown cost mode {self.cost_mode!r}")

    def replace(self, **changes) -> "CompressionConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class MetricsReport:
    alpha_per_feature: dict[str, float]
    alpha_min: float
    alpha_avg: float
    rho_1: float
    rho_inf: float
    beta_score: float
    eta: float

    def as_dict(self) -> dict:
        return {
            "alpha_per_feature": dict(self.alpha_per_feature),
            "alpha_min": self.alpha_min,
            "alpha_avg": self.alpha_avg,
            "rho_1": self.rho_1,
            "rho_inf": self.rho_inf,
            "beta_score": self.beta_score,
            "eta": self.eta,
        }


@dataclass(frozen=True)
class TraceStep:
    id: str
    gain: float
    cumulative_cost: float


@dataclass
class CompressionResult:
    """Chosen summary plus its quality metrics.

    ``positions`` index into the workload the result was computed on;
    ``summary`` holds the matching query ids.
    """

    summary: list[str]
    positions: list[int]
    objective_value: float
    metrics: MetricsReport
    cost: float
    trace: list[TraceStep] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    algorithm: str = "greedy"

    @property
    def alpha_per_feature(self) -> dict[str, float]:
        return self.metrics.alpha_per_feature

    @property
    def alpha_min(self) -> float:
        return self.metrics.alpha_min

    @property
    def alpha_avg(self) -> float:
        return self.metrics.alpha_avg

    @property
    def rho_1(self) -> float:
        return self.metrics.rho_1

    @property
    def rho_inf(self) -> float:
        return self.metrics.rho_inf

    @property
    def beta_score(self) -> float:
        return self.metrics.beta_score

    @property
    def eta(self) -> float:
        return self.metrics.eta


def check_costs(costs: Sequence[float]) -> None:
    for i, c in enumerate(costs):
        if not (c > 0) or not math.isfinite(c):
            raise NonPositiveCost(f"entry {i} has cost {c!r}; costs must be positive")
