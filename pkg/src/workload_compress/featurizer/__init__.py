"""Turn raw log entries into feature vectors."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from ..errors import InvalidBounds, MissingStatistic, ParseError, UnknownFeature
from ..model import (
    CATEGORICAL,
    EXPONENTIAL,
    NUMERIC,
    FeatureDecl,
    FeatureSpec,
    FeatureVector,
    QueryRecord,
    Workload,
)
from .buckets import ZERO_BUCKET, bucketize, bucketize_exponential, equi_width_bounds
from .sql import SQL_FEATURES, extract_categorical, parse

__all__ = [
    "NUMERIC_STATS",
    "ZERO_BUCKET",
    "FeaturizeStats",
    "batch_bounds",
    "bucketize",
    "bucketize_exponential",
    "default_spec",
    "derive_product_feature",
    "equi_width_bounds",
    "extract_categorical",
    "featurize",
    "featurize_batch",
]

NUMERIC_STATS = (
    "execution_time_ms",
    "planning_time_ms",
    "input_bytes",
    "output_rows",
    "cpu_time_ms",
    "num_joins",
)


def default_spec(bucket_count: int = 10, bounds: Mapping[str, tuple[float, float]] | None = None,
                 open_range: bool = False) -> FeatureSpec:
    """The four SQL features plus the six execution statistics."""
    bounds = bounds or {}
    feats = [FeatureDecl(name, CATEGORICAL) for name in SQL_FEATURES]
    feats += [FeatureDecl(name, NUMERIC, bounds=bounds.get(name)) for name in NUMERIC_STATS]
    return FeatureSpec(tuple(feats), bucket_count=bucket_count, open_range=open_range)


@dataclass
class FeaturizeStats:
    parsed: int = 0
    skipped: int = 0
    clamped: Counter = field(default_factory=Counter)
    errors: list[str] = field(default_factory=list)


def _numeric_value(record: QueryRecord, name: str, parsed) -> float:
    if name in record.stats:
        return float(record.stats[name])
    if name == "num_joins" and parsed is not None:
        return float(parsed.num_joins)
    raise MissingStatistic(f"query {record.id!r} has no value for numeric feature {name!r}")


def _parse_record(record: QueryRecord):
    return parse(record.sql) if record.sql and record.sql.strip() else None


def featurize(record: QueryRecord, spec: FeatureSpec, stats: FeaturizeStats | None = None,
              parsed=None) -> FeatureVector:
    """Feature vector of one log entry.

    Every numeric feature contributes exactly one bucket token, so bounds
    must be known for each linear-bucketed numeric feature.  ``parsed`` lets
    a caller reuse an earlier parse of the entry's SQL.
    """
    if parsed is None:
        parsed = _parse_record(record)
    tokens: dict[str, Counter] = {}
    sql_tokens = parsed.as_dict() if parsed is not None else {}
    H = spec.bucket_count
    for decl in spec.features:
        if decl.is_product:
            continue
        if decl.kind == CATEGORICAL:
            if decl.name in SQL_FEATURES:
                tokens[decl.name] = Counter(sql_tokens.get(decl.name, ()))
            else:
                tokens[decl.name] = Counter(record.attributes.get(decl.name, ()))
            continue
        v = _numeric_value(record, decl.name, parsed)
        if decl.bucketing == EXPONENTIAL:
            b = bucketize_exponential(v, decl.epsilon)
        else:
            if decl.bounds is None:
                raise InvalidBounds(f"numeric feature {decl.name!r} has no bounds")
            lo, hi = decl.bounds
            if stats is not None and (v < lo or (v > hi and not spec.open_range)):
                stats.clamped[decl.name] += 1
            b = bucketize(v, lo, hi, H, open_range=spec.open_range)
        tokens[decl.name] = Counter({b: 1})
    for decl in spec.features:
        if decl.is_product:
            tokens[decl.name] = _product_tokens(tokens, decl.parents)
    return FeatureVector({f: tokens[f] for f in spec.names})


def _product_tokens(tokens: Mapping[str, Counter], parents: Sequence[str]) -> Counter:
    sets = [sorted(set(tokens.get(p, ())), key=repr) for p in parents]
    return Counter({combo: 1 for combo in itertools.product(*sets)})


def derive_product_feature(spec: FeatureSpec, parents: Sequence[str], name: str | None = None,
                           weight: float | None = None) -> FeatureSpec:
    """Extend ``spec`` with the cross product of ``parents`` (set semantics)."""
    if len(parents) < 2:
        raise ValueError("a product feature needs at least two parents")
    for p in parents:
        spec[p]  # raises UnknownFeature
    name = name or "*".join(parents)
    if name in spec:
        raise UnknownFeature(f"feature {name!r} already exists")
    decl = FeatureDecl(name, CATEGORICAL, weight=0.0 if weight is None else weight, parents=tuple(parents))
    return replace(spec, features=spec.features + (decl,))


def batch_bounds(records: Iterable[QueryRecord], spec: FeatureSpec,
                 parsed: Sequence | None = None) -> dict[str, tuple[float, float]]:
    """Min/max of every unbounded linear numeric feature over a batch.

    A degenerate range (all values equal) is widened by one unit so every
    value lands in bucket 0.  ``parsed`` optionally holds each record's SQL
    parse (``None`` for entries without usable SQL).
    """
    names = [f.name for f in spec.numeric if f.bounds is None and f.bucketing != EXPONENTIAL]
    lo = {n: math.inf for n in names}
    hi = {n: -math.inf for n in names}
    for k, r in enumerate(records):
        p = None if parsed is None else parsed[k]
        for n in names:
            if n in r.stats:
                v = float(r.stats[n])
            elif n == "num_joins" and r.sql:
                if p is None:
                    try:
                        p = parse(r.sql)
                    except ParseError:
                        break
                v = float(p.num_joins)
            else:
                continue
            lo[n] = min(lo[n], v)
            hi[n] = max(hi[n], v)
    out = {}
    for n in names:
        if lo[n] == math.inf:
            continue
        out[n] = (lo[n], hi[n]) if lo[n] < hi[n] else (lo[n], lo[n] + 1.0)
    return out


def featurize_batch(records: Sequence[QueryRecord], spec: FeatureSpec, *, skip_errors: bool = True,
                    require_fixed_bounds: bool = False) -> tuple[Workload, FeaturizeStats]:
    """Featurize a batch in order; malformed SQL entries are skipped and counted.

    Numeric features without declared bounds take them from the batch,
    which is refused when ``require_fixed_bounds`` is set.
    """
    stats = FeaturizeStats()
    parsed, failed = [], {}
    for k, r in enumerate(records):
        try:
            parsed.append(_parse_record(r))
        except ParseError as exc:
            if not skip_errors:
                raise
            parsed.append(None)
            failed[k] = exc
    if not spec.has_fixed_bounds:
        if require_fixed_bounds or spec.open_range:
            missing = [f.name for f in spec.numeric if f.bounds is None and f.bucketing != EXPONENTIAL]
            raise InvalidBounds(f"fixed bounds required for numeric features {missing}")
        good = [k for k in range(len(records)) if k not in failed]
        spec = spec.with_bounds(batch_bounds([records[k] for k in good], spec, [parsed[k] for k in good]))
    kept, vectors = [], []
    for k, r in enumerate(records):
        if k in failed:
            stats.skipped += 1
            stats.errors.append(f"{r.id}: {failed[k]}")
            continue
        vec = featurize(r, spec, stats, parsed=parsed[k])
        stats.parsed += 1
        kept.append(r)
        vectors.append(vec)
    return Workload(spec, kept, vectors), stats
