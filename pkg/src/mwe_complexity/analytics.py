"""Per-type frequency and complexity statistics, plus table rendering."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, fields, is_dataclass
from enum import Enum

from .corpus import Dataset, Group, MweType, complex_only, group_score
from .errors import EmptyDataset


class StdMode(Enum):
    POPULATION = "population"
    SAMPLE = "sample"


@dataclass(frozen=True)
class TypeStatsRow:
    mwe_type: MweType
    count: int
    pct: float
    mean: float
    std: float


@dataclass(frozen=True)
class GroupStatsRow:
    mwe_type: MweType
    native_mean: float
    nonnative_mean: float


def _std(values, mean, mode):
    n = len(values)
    if mode is StdMode.SAMPLE:
        if n < 2:
            return 0.0
        return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)


def _by_type(d: Dataset):
    groups = defaultdict(list)
    for inst in d:
        groups[inst.mwe_type].append(inst)
    return groups


def _count_order(groups):
    enum_pos = {t: k for k, t in enumerate(MweType)}
    return sorted(groups, key=lambda t: (-len(groups[t]), enum_pos[t]))


def type_frequency_table(d: Dataset, std_mode: StdMode = StdMode.POPULATION
                         ) -> list[TypeStatsRow]:
    """Count, share, mean and std of ``prob`` for each MWE type in ``d``.

    Rows are sorted by count, most frequent first.
    """
    if len(d) == 0:
        raise EmptyDataset("cannot tabulate an empty dataset")
    groups = _by_type(d)
    total = len(d)
    rows = []
    for t in _count_order(groups):
        probs = [i.prob for i in groups[t]]
        mean = math.fsum(probs) / len(probs)
        rows.append(TypeStatsRow(t, len(probs), len(probs) / total, mean,
                                 _std(probs, mean, std_mode)))
    return rows


def group_comparison_table(d: Dataset) -> list[GroupStatsRow]:
    """Mean native and non-native scores per type over the complex-only view."""
    view = complex_only(d)
    if len(view) == 0:
        raise EmptyDataset("no complex instances to compare")
    groups = _by_type(view)
    rows = []
    for t in _count_order(groups):
        insts = groups[t]
        nat = math.fsum(group_score(i, Group.NATIVE) for i in insts) / len(insts)
        non = math.fsum(group_score(i, Group.NON_NATIVE) for i in insts) / len(insts)
        rows.append(GroupStatsRow(t, nat, non))
    return rows


# -- rendering ---------------------------------------------------------------

_HEADERS = {
    "mwe_type": "MWE Type",
    "count": "Total",
    "pct": "%",
    "mean": "Mean",
    "std": "Std",
    "native_mean": "Native mean",
    "nonnative_mean": "Non-native mean",
}

# Fixed-precision text formats; JSON keeps full precision.
_FORMATS = {
    "pct": lambda v: f"{100 * v:.2f}",
    "mean": lambda v: f"{v:.3f}",
    "std": lambda v: f"{v:.3f}",
    "native_mean": lambda v: f"{v:.3f}",
    "nonnative_mean": lambda v: f"{v:.3f}",
}


def _cell(name, value):
    if isinstance(value, Enum):
        return str(value.value)
    if name in _FORMATS:
        return _FORMATS[name](value)
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _json_value(value):
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value):
        return {f.name: _json_value(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    return value


def render_table(rows, fmt: str = "tsv", headers: dict | None = None) -> str:
    """Render a list of same-typed dataclass rows as tsv, json or markdown."""
    if not rows:
        raise ValueError("nothing to render")
    names = [f.name for f in fields(rows[0])]
    if fmt == "json":
        return json.dumps([_json_value(r) for r in rows], indent=2) + "\n"
    heads = {**_HEADERS, **(headers or {})}
    body = [[_cell(n, getattr(r, n)) for n in names] for r in rows]
    if fmt == "tsv":
        lines = ["\t".join(names)] + ["\t".join(row) for row in body]
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        title = [heads.get(n, n) for n in names]
        align = [":---" if k == 0 else "---:" for k in range(len(names))]
        lines = ["| " + " | ".join(title) + " |", "| " + " | ".join(align) + " |"]
        lines += ["| " + " | ".join(row) + " |" for row in body]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
