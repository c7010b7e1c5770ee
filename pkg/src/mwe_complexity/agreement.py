"""Inter-annotator agreement for categorical MWE labels."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Iterable, Sequence

import numpy as np

from .corpus import AnnotationRecord
from .errors import DataError, DegenerateCategories, EmptyInput


class AgreementMode(Enum):
    MEAN_PAIRWISE = "mean-pairwise"
    UNANIMOUS = "unanimous"


@dataclass(frozen=True)
class AnnotationMatrix:
    """Dense items x annotators grid of category labels."""

    items: tuple[str, ...]
    annotators: tuple[str, ...]
    labels: tuple[tuple[Hashable, ...], ...]

    def __post_init__(self):
        if not self.items:
            raise DataError("annotation matrix needs at least one item")
        if len(self.annotators) < 2:
            raise DataError("annotation matrix needs at least two annotators")
        if len(self.labels) != len(self.items):
            raise DataError("one label row per item required")
        for row in self.labels:
            if len(row) != len(self.annotators) or any(v is None for v in row):
                raise DataError("annotation matrix has missing cells")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Hashable]]) -> "AnnotationMatrix":
        rows = [tuple(r) for r in rows]
        k = len(rows[0]) if rows else 0
        return cls(
            items=tuple(str(i) for i in range(len(rows))),
            annotators=tuple(str(a) for a in range(k)),
            labels=tuple(rows),
        )

    @property
    def categories(self) -> list:
        """Categories present, in first-seen order."""
        return list(dict.fromkeys(v for row in self.labels for v in row))

    def counts(self) -> np.ndarray:
        """n_ij: how many annotators put item i in category j."""
        cats = {c: j for j, c in enumerate(self.categories)}
        out = np.zeros((len(self.items), len(cats)), dtype=np.int64)
        for i, row in enumerate(self.labels):
            for v in row:
                out[i, cats[v]] += 1
        return out


def _item_agreement(counts: np.ndarray, n_raters: int) -> np.ndarray:
    return (np.sum(counts * counts, axis=1) - n_raters) / (n_raters * (n_raters - 1))


def observed_agreement(m: AnnotationMatrix,
                       mode: AgreementMode = AgreementMode.MEAN_PAIRWISE) -> float:
    counts = m.counts()
    if mode is AgreementMode.UNANIMOUS:
        return float(np.mean(counts.max(axis=1) == len(m.annotators)))
    return float(np.mean(_item_agreement(counts, len(m.annotators))))


def fleiss_kappa(m: AnnotationMatrix) -> float:
    counts = m.counts().astype(np.float64)
    n_items, n_raters = len(m.items), len(m.annotators)
    p_bar = float(np.mean(_item_agreement(counts, n_raters)))
    p_j = counts.sum(axis=0) / (n_items * n_raters)
    p_e = float(np.sum(p_j * p_j))
    if counts.shape[1] < 2:
        raise DegenerateCategories("only one category used; kappa is undefined")
    return (p_bar - p_e) / (1.0 - p_e)


def weighted_agreement(rounds: Iterable[tuple[float, int]]) -> float:
    """Instance-weighted mean of per-round agreement values."""
    rounds = list(rounds)
    if not rounds:
        raise EmptyInput("no rounds given")
    if any(n <= 0 for _, n in rounds):
        raise ValueError("round sizes must be positive")
    total = sum(n for _, n in rounds)
    return sum(v * n for v, n in rounds) / total


def resolve_majority(labels: Sequence[Hashable], tiebreaker: int = -1) -> Hashable:
    """Strict-majority label, else the label of annotator ``tiebreaker``."""
    if not labels:
        raise EmptyInput("no labels to resolve")
    label, n = Counter(labels).most_common(1)[0]
    if 2 * n > len(labels):
        return label
    return labels[tiebreaker]


def resolve_matrix(m: AnnotationMatrix, tiebreaker: int = -1) -> AnnotationMatrix:
    resolved = []
    for row in m.labels:
        gold = resolve_majority(row, tiebreaker)
        resolved.append(tuple(gold for _ in row))
    return AnnotationMatrix(m.items, m.annotators, tuple(resolved))


@dataclass(frozen=True)
class RoundSummary:
    round: int
    n_items: int
    observed_agreement: float
    unanimous_agreement: float
    kappa: float


def matrices_by_round(records: Iterable[AnnotationRecord]) -> dict[int, AnnotationMatrix]:
    """Group annotation records into one dense matrix per round."""
    grid: dict[int, dict[str, dict[str, object]]] = defaultdict(lambda: defaultdict(dict))
    for r in records:
        grid[r.round][r.instance_id][r.annotator_id] = r.label
    out = {}
    for rnd in sorted(grid):
        items = grid[rnd]
        annotators = sorted({a for cells in items.values() for a in cells})
        item_ids = list(items)
        rows = []
        for iid in item_ids:
            cells = items[iid]
            missing = [a for a in annotators if a not in cells]
            if missing:
                raise DataError(
                    f"round {rnd}: item {iid!r} lacks labels from {', '.join(missing)}")
            rows.append(tuple(cells[a] for a in annotators))
        out[rnd] = AnnotationMatrix(tuple(item_ids), tuple(annotators), tuple(rows))
    return out


def summarize_rounds(records: Iterable[AnnotationRecord]) -> list[RoundSummary]:
    out = []
    for rnd, m in matrices_by_round(records).items():
        out.append(RoundSummary(
            round=rnd,
            n_items=len(m.items),
            observed_agreement=observed_agreement(m, AgreementMode.MEAN_PAIRWISE),
            unanimous_agreement=observed_agreement(m, AgreementMode.UNANIMOUS),
            kappa=fleiss_kappa(m),
        ))
    return out
