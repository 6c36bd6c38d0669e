"""Templated synthetic query logs.

Every template owns a table, a grouping column and a set of aggregate
functions drawn from ``SUM, MAX, COUNT, SUBSTR, ARRAY_AGG``, so the token
signatures of different templates never coincide.  Template 1 uses the
three common aggregates, template 19 is the only ARRAY_AGG user and
template 22 the only SUBSTR user.  Execution statistics are a per-template
base value with log-normal jitter.  ``numpy``'s PCG64 drives every draw.
"""

from __future__ import annotations

import itertools
import math
import re

import numpy as np

from .errors import ConfigError
from .model import QueryRecord

COMMON = ("SUM", "MAX", "COUNT")
RARE = {19: ("ARRAY_AGG",), 22: ("SUBSTR",)}
FUNCTIONS = COMMON + ("SUBSTR", "ARRAY_AGG")
JITTER_SIGMA = 0.25
STATS = ("execution_time_ms", "planning_time_ms", "input_bytes", "output_rows", "cpu_time_ms")

_PROPER = [c for r in (1, 2) for c in itertools.combinations(COMMON, r)]


def template_functions(i: int) -> tuple[str, ...]:
    """Aggregates used by 1-based template ``i``."""
    if i == 1:
        return COMMON
    if i in RARE:
        return RARE[i]
    return _PROPER[(i - 2) % len(_PROPER)]


def _call(fn: str, col: str) -> str:
    if fn == "COUNT":
        return "COUNT(*)"
    if fn == "SUBSTR":
        return f"SUBSTR({col}, 1, 3)"
    return f"{fn}({col})"


def template_sql(i: int, literal: int) -> str:
    table = f"t{i}"
    key = f"k{i}"
    joins = i % 3
    calls = ", ".join(_call(fn, f"{table}.v") for fn in template_functions(i))
    sql = f"SELECT {table}.{key}, {calls} FROM {table}"
    for j in range(joins):
        other = f"d{i}_{j}"
        sql += f" JOIN {other} ON {table}.{key} = {other}.{key}"
    sql += f" WHERE {table}.v > {literal} GROUP BY {table}.{key}"
    if i % 2 == 0:
        sql += f" ORDER BY {table}.{key}"
    return sql


def instance_counts(templates: int, mode: str) -> list[int]:
    """``uniform:N`` gives N per template; ``skew:harmonic[:BASE]`` gives floor(BASE / (i + 1))."""
    if templates < 1:
        raise ConfigError("need at least one template")
    m = re.fullmatch(r"uniform:(\d+)", mode)
    if m:
        return [int(m.group(1))] * templates
    m = re.fullmatch(r"skew:harmonic(?::(\d+))?", mode)
    if m:
        base = int(m.group(1) or 66)
        return [base // (i + 1) for i in range(1, templates + 1)]
    raise ConfigError(f"unknown instance mode {mode!r}; use uniform:N or skew:harmonic[:BASE]")


def _base_stats(i: int, templates: int) -> dict[str, float]:
    # spread template medians over a few orders of magnitude
    x = (i - 1) / max(templates - 1, 1)
    return {
        "execution_time_ms": 10.0 * math.exp(6.0 * x),
        "planning_time_ms": 1.0 + 20.0 * ((i * 7) % templates) / templates,
        "input_bytes": 1e6 * math.exp(5.0 * ((i * 5) % templates) / templates),
        "output_rows": 1.0 + 1000.0 * ((i * 3) % templates) / templates,
        "cpu_time_ms": 5.0 * math.exp(6.0 * x) * (1.0 + (i % 4) / 4.0),
    }


def generate(templates: int = 22, instances: str = "uniform:19", seed: int = 0,
             limit: int | None = None) -> list[dict]:
    """Log entries in file order, templates interleaved by a seeded shuffle."""
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = instance_counts(templates, instances)
    slots = [i for i, c in enumerate(counts, start=1) for _ in range(c)]
    order = rng.permutation(len(slots))
    rows = []
    seen = [0] * (templates + 1)
    for n, k in enumerate(order.tolist()):
        if limit is not None and n >= limit:
            break
        i = slots[k]
        seen[i] += 1
        base = _base_stats(i, templates)
        jitter = rng.lognormal(0.0, JITTER_SIGMA, size=len(STATS))
        stats = {name: round(float(base[name] * j), 3) for name, j in zip(STATS, jitter)}
        rows.append({
            "id": f"q{i:02d}_{seen[i]:05d}",
            "sql": template_sql(i, int(rng.integers(0, 1000))),
            "stats": stats,
            "cost": 1.0,
            "template": i,
        })
    return rows


def records(rows: list[dict]) -> list[QueryRecord]:
    return [QueryRecord(r["id"], r.get("sql"), dict(r["stats"]), float(r.get("cost", 1.0))) for r in rows]
