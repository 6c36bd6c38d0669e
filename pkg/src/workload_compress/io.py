"""JSON formats on disk: query logs (JSONL), feature specs, targets and reports.

All formats carry ``"schema_version": 1``.  Log lines are featurized in file
order; SQL that fails to parse is skipped and counted, any other problem
with a line is fatal.
"""

from __future__ import annotations

import json
import math
from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, EmptyWorkload, SchemaError
from .featurizer import FeaturizeStats, default_spec, featurize_batch
from .model import (
    CATEGORICAL,
    LINEAR,
    CompressionConfig,
    CompressionResult,
    FeatureDecl,
    FeatureSpec,
    QueryRecord,
    TokenDistribution,
    Workload,
)

SCHEMA_VERSION = 1
DIGITS = 9


def _check_version(obj: Mapping, where: str) -> None:
    v = obj.get("schema_version", SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise SchemaError(f"{where}: unsupported schema_version {v!r}")


def _read_json(path: str | Path, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {str(path)!r}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what} {str(path)!r} is not valid JSON: {exc}") from exc


def record_from_json(obj: Any, where: str) -> QueryRecord:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    _check_version(obj, where)
    qid = obj.get("id")
    if not isinstance(qid, str) or not qid:
        raise SchemaError(f"{where}: field 'id' must be a non-empty string")
    sql = obj.get("sql")
    if sql is not None and not isinstance(sql, str):
        raise SchemaError(f"{where}: field 'sql' must be a string")
    stats = obj.get("stats", {})
    if not isinstance(stats, dict):
        raise SchemaError(f"{where}: field 'stats' must be an object")
    for name, v in stats.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise SchemaError(f"{where}: stats.{name} must be a finite number >= 0, got {v!r}")
    cost = obj.get("cost", 1.0)
    if isinstance(cost, bool) or not isinstance(cost, (int, float)):
        raise SchemaError(f"{where}: field 'cost' must be a number")
    attrs = obj.get("attributes", {})
    if not isinstance(attrs, dict) or not all(isinstance(v, list) for v in attrs.values()):
        raise SchemaError(f"{where}: field 'attributes' must map names to lists of strings")
    return QueryRecord(qid, sql, {k: float(v) for k, v in stats.items()}, float(cost),
                       {k: tuple(str(x) for x in v) for k, v in attrs.items()})


def read_log(path: str | Path) -> list[QueryRecord]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read log {str(path)!r}: {exc.strerror}") from exc
    out, seen = [], set()
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        where = f"{path}:{n}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{where}: invalid JSON ({exc.msg})") from exc
        rec = record_from_json(obj, where)
        if rec.id in seen:
            raise SchemaError(f"{where}: duplicate id {rec.id!r}")
        seen.add(rec.id)
        out.append(rec)
    return out


def write_log(rows: list[dict], path: str | Path | None = None) -> str:
    text = "".join(json.dumps({"schema_version": SCHEMA_VERSION, **r}, sort_keys=True) + "\n" for r in rows)
    if path is not None:
        Path(path).write_text(text)
    return text


def spec_from_json(obj: Any) -> FeatureSpec:
    if not isinstance(obj, dict):
        raise SchemaError("spec file must hold a JSON object")
    _check_version(obj, "spec")
    feats = []
    for i, f in enumerate(obj.get("features", [])):
        if not isinstance(f, dict) or "name" not in f or "kind" not in f:
            raise SchemaError(f"spec feature #{i} needs 'name' and 'kind'")
        bounds = None
        if "min" in f or "max" in f:
            if "min" not in f or "max" not in f:
                raise SchemaError(f"spec feature {f['name']!r}: give both 'min' and 'max'")
            bounds = (float(f["min"]), float(f["max"]))
        feats.append(FeatureDecl(
            f["name"], f["kind"], bounds=bounds,
            weight=None if f.get("weight") is None else float(f["weight"]),
            bucketing=f.get("bucketing", LINEAR),
            epsilon=None if f.get("epsilon") is None else float(f["epsilon"]),
        ))
    for d in obj.get("derived", []):
        parents = tuple(d.get("parents", ()))
        if len(parents) < 2:
            raise SchemaError(f"derived feature {d.get('name')!r} needs at least two parents")
        feats.append(FeatureDecl(d.get("name") or "*".join(parents), CATEGORICAL,
                                 weight=None if d.get("weight") is None else float(d["weight"]),
                                 parents=parents))
    if not feats:
        raise SchemaError("spec file declares no features")
    return FeatureSpec(tuple(feats), bucket_count=int(obj.get("H", 10)), open_range=bool(obj.get("open_range", False)))


def spec_to_json(spec: FeatureSpec) -> dict:
    base, derived = [], []
    for f in spec.features:
        if f.is_product:
            derived.append({"name": f.name, "parents": list(f.parents), "weight": f.weight})
            continue
        entry: dict = {"name": f.name, "kind": f.kind}
        if f.bounds is not None:
            entry["min"], entry["max"] = f.bounds
        if f.weight is not None:
            entry["weight"] = f.weight
        if f.bucketing != LINEAR:
            entry["bucketing"], entry["epsilon"] = f.bucketing, f.epsilon
        base.append(entry)
    return {"schema_version": SCHEMA_VERSION, "H": spec.bucket_count, "open_range": spec.open_range,
            "features": base, "derived": derived}


def read_spec(path: str | Path | None) -> FeatureSpec:
    return default_spec() if path is None else spec_from_json(_read_json(path, "spec"))


def ingest(log_path: str | Path, spec_path: str | Path | None = None, *,
           require_fixed_bounds: bool = False) -> tuple[Workload, FeaturizeStats]:
    records = read_log(log_path)
    return featurize_batch(records, read_spec(spec_path), require_fixed_bounds=require_fixed_bounds)


def _token_from_json(feature: str, tok, spec: FeatureSpec):
    decl = spec[feature]
    if decl.is_product:
        return tuple(tok)
    if decl.kind != CATEGORICAL:
        if isinstance(tok, bool) or not isinstance(tok, int):
            raise SchemaError(f"target token for numeric feature {feature!r} must be an integer bucket")
    return tok


def read_target(path: str | Path, spec: FeatureSpec) -> TokenDistribution:
    obj = _read_json(path, "target")
    if not isinstance(obj, dict) or not isinstance(obj.get("target"), list):
        raise SchemaError("target file must hold {'target': [{'feature', 'token', 'mass'}, ...]}")
    _check_version(obj, "target")
    mass = {}
    for e in obj["target"]:
        key = (e["feature"], _token_from_json(e["feature"], e["token"], spec))
        mass[key] = mass.get(key, 0.0) + float(e["mass"])
    return TokenDistribution.normalized(mass)


def write_target(dist: Mapping, path: str | Path) -> None:
    entries = [{"feature": f, "token": list(t) if isinstance(t, tuple) else t, "mass": p}
               for (f, t), p in dist.items()]
    Path(path).write_text(json.dumps({"schema_version": SCHEMA_VERSION, "target": entries}, indent=1))


def sig(x: float) -> float:
    if isinstance(x, float) and not math.isfinite(x):
        return x
    return float(f"{x:.{DIGITS}g}")


def config_to_json(config: CompressionConfig, target_label: str | None = None) -> dict:
    out = {}
    for f in fields(config):
        v = getattr(config, f.name)
        if f.name == "target" and not isinstance(v, str):
            v = target_label or "explicit"
        out[f.name] = v
    return out


def report_json(result: CompressionResult, *, config: dict, timings_ms: Mapping[str, float],
                inputs: Mapping[str, Any], ingest_stats: Mapping[str, Any] | None = None) -> dict:
    m = result.metrics
    return {
        "schema_version": SCHEMA_VERSION,
        "algorithm": result.algorithm,
        "summary_ids": list(result.summary),
        "metrics": {
            "alpha_per_feature": {k: sig(v) for k, v in m.alpha_per_feature.items()},
            "alpha_min": sig(m.alpha_min),
            "alpha_avg": sig(m.alpha_avg),
            "rho_1": sig(m.rho_1),
            "rho_inf": sig(m.rho_inf),
            "beta_score": sig(m.beta_score),
            "eta": sig(m.eta),
        },
        "objective": sig(result.objective_value),
        "eta": sig(m.eta),
        "cost": sig(result.cost),
        "trace": [{"id": s.id, "gain": sig(s.gain), "cumulative_cost": sig(s.cumulative_cost)}
                  for s in result.trace],
        "warnings": list(result.warnings),
        "timings_ms": {k: round(v, 3) for k, v in timings_ms.items()},
        "config": config,
        "inputs": dict(inputs),
        "ingest": dict(ingest_stats or {}),
    }


def write_json(obj: dict, path: str | Path | None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_report(path: str | Path) -> dict:
    obj = _read_json(path, "report")
    if not isinstance(obj, dict) or "summary_ids" not in obj or "inputs" not in obj:
        raise SchemaError(f"report {str(path)!r} lacks summary_ids or inputs")
    _check_version(obj, f"report {path}")
    return obj


def positions_of(workload: Workload, ids) -> list[int]:
    where = {qid: i for i, qid in enumerate(workload.ids)}
    missing = [q for q in ids if q not in where]
    if missing:
        raise SchemaError(f"summary ids not found in the log: {missing[:5]}")
    return [where[q] for q in ids]


def require_nonempty(workload: Workload) -> None:
    if len(workload) == 0:
        raise EmptyWorkload("the log holds no usable entries")
