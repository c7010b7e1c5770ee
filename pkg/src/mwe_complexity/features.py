"""Phrase features: MWE type, length, bigram frequency, word complexity, genre.

Frequency and word-complexity resources are pluggable. Bigram tables and
unigram tables can be loaded from TSV or counted from any text collection
with :meth:`BigramFrequencyTable.from_texts` and
:meth:`UnigramTable.from_texts`.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .corpus import MODELING_TYPES, AnnotatedInstance, Genre, MweType, tokenize
from .errors import EmptyInput, ResourceError, TooShort


class FeatureGroup(Enum):
    MWE_TYPE = "mwe"
    GENRE = "genre"
    MEAN_CW = "mean_cw"
    MAX_CW = "max_cw"
    LENGTH = "length"
    FREQUENCY = "frequency"

    @classmethod
    def parse_list(cls, text: str) -> frozenset["FeatureGroup"]:
        # "a,b" selects groups; "all,-a" removes from the full set
        names = [t.strip() for t in text.split(",") if t.strip()]
        groups = set()
        try:
            for n in names:
                if n == "all":
                    groups |= ALL_GROUPS
                elif n.startswith("-"):
                    groups.discard(cls(n[1:]))
                else:
                    groups.add(cls(n))
        except ValueError as exc:
            raise ValueError(f"unknown feature group in {text!r}") from exc
        return frozenset(groups)


ALL_GROUPS = frozenset(FeatureGroup)


def _read_rows(path, n_fields, header):
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1 and [c.strip() for c in row] == list(header):
                continue
            if len(row) != n_fields:
                raise ResourceError(
                    f"{path}:{lineno}: expected {n_fields} fields, got {len(row)}")
            yield lineno, row


def _sha256_rows(rows) -> str:
    h = hashlib.sha256()
    for row in rows:
        h.update(("\t".join(map(str, row)) + "\n").encode("utf-8"))
    return h.hexdigest()


def _bigrams(tokens):
    return zip(tokens, tokens[1:])


@dataclass(frozen=True)
class BigramFrequencyTable:
    counts: Mapping[tuple[str, str], int]
    source: str = "unknown"

    def __post_init__(self):
        for pair, c in self.counts.items():
            if not isinstance(c, (int, np.integer)) or c < 0:
                raise ResourceError(f"bad bigram count {c!r} for {pair}")

    def count(self, first: str, second: str) -> int:
        return self.counts.get((first, second), 0)

    @classmethod
    def from_texts(cls, texts: Iterable[str], source: str = "texts") -> "BigramFrequencyTable":
        counts: Counter = Counter()
        for text in texts:
            counts.update(_bigrams(tokenize(text)))
        return cls(dict(counts), source)

    @classmethod
    def load(cls, path) -> "BigramFrequencyTable":
        counts = {}
        for lineno, (a, b, c) in _read_rows(path, 3, ("token1", "token2", "count")):
            try:
                n = int(c)
            except ValueError:
                raise ResourceError(f"{path}:{lineno}: bad count {c!r}") from None
            if n < 0:
                raise ResourceError(f"{path}:{lineno}: negative count")
            key = (a.lower(), b.lower())
            counts[key] = counts.get(key, 0) + n
        return cls(counts, str(path))

    def rows(self):
        return sorted((a, b, int(c)) for (a, b), c in self.counts.items())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("token1\ttoken2\tcount\n")
            for a, b, c in self.rows():
                fh.write(f"{a}\t{b}\t{c}\n")

    def fingerprint(self) -> str:
        return _sha256_rows(self.rows())


@dataclass(frozen=True)
class UnigramTable:
    counts: Mapping[str, int]
    source: str = "unknown"

    @classmethod
    def from_texts(cls, texts: Iterable[str], source: str = "texts") -> "UnigramTable":
        counts: Counter = Counter()
        for text in texts:
            counts.update(tokenize(text))
        return cls(dict(counts), source)

    @classmethod
    def load(cls, path) -> "UnigramTable":
        counts = {}
        for lineno, (w, c) in _read_rows(path, 2, ("word", "count")):
            try:
                n = int(c)
            except ValueError:
                raise ResourceError(f"{path}:{lineno}: bad count {c!r}") from None
            if n < 0:
                raise ResourceError(f"{path}:{lineno}: negative count")
            counts[w.lower()] = counts.get(w.lower(), 0) + n
        return cls(counts, str(path))

    def rows(self):
        return sorted((w, int(c)) for w, c in self.counts.items())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("word\tcount\n")
            for w, c in self.rows():
                fh.write(f"{w}\t{c}\n")


class WordComplexityScorer(Protocol):
    def score(self, word: str) -> float: ...

    def to_dict(self) -> dict: ...


@dataclass(frozen=True)
class LexiconScorer:
    """Looks words up in a precomputed score table."""

    scores: Mapping[str, float]
    default: float = 0.5
    source: str = "unknown"

    def __post_init__(self):
        if not 0.0 <= self.default <= 1.0:
            raise ResourceError("default score must lie in [0, 1]")
        for w, s in self.scores.items():
            if not 0.0 <= s <= 1.0:
                raise ResourceError(f"score for {w!r} outside [0, 1]: {s}")

    def score(self, word: str) -> float:
        return self.scores.get(word.lower(), self.default)

    @classmethod
    def load(cls, path, default: float = 0.5) -> "LexiconScorer":
        scores = {}
        for lineno, (w, s) in _read_rows(path, 2, ("word", "score")):
            try:
                v = float(s)
            except ValueError:
                raise ResourceError(f"{path}:{lineno}: bad score {s!r}") from None
            if not (0.0 <= v <= 1.0):
                raise ResourceError(f"{path}:{lineno}: score {v} outside [0, 1]")
            scores[w.lower()] = v
        return cls(scores, default, str(path))

    def to_dict(self) -> dict:
        return {"kind": "lexicon", "default": self.default,
                "scores": dict(sorted(self.scores.items()))}


@dataclass(frozen=True)
class HeuristicScorer:
    """Self-contained word complexity estimate.

    ``clamp(0.04 * chars + 0.5 * (1 - nf), 0, 1)`` where ``nf`` is the
    word's log unigram count normalized by the largest log count in the
    table, so unseen words get ``nf = 0``.
    """

    unigrams: UnigramTable
    _log_max: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        top = max(self.unigrams.counts.values(), default=0)
        object.__setattr__(self, "_log_max", math.log1p(top))

    def score(self, word: str) -> float:
        if self._log_max > 0:
            nf = math.log1p(self.unigrams.counts.get(word.lower(), 0)) / self._log_max
        else:
            nf = 0.0
        raw = 0.04 * len(word) + 0.5 * (1.0 - nf)
        return min(1.0, max(0.0, raw))

    def to_dict(self) -> dict:
        return {"kind": "heuristic", "unigrams": dict(self.unigrams.rows())}


def scorer_from_dict(data: dict) -> WordComplexityScorer:
    if data["kind"] == "lexicon":
        return LexiconScorer(data["scores"], data["default"])
    if data["kind"] == "heuristic":
        return HeuristicScorer(UnigramTable(data["unigrams"]))
    raise ResourceError(f"unknown scorer kind {data['kind']!r}")


def scorer_fingerprint(scorer: WordComplexityScorer) -> str:
    blob = json.dumps(scorer.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class FeatureVector:
    mwe_type: MweType
    length: int
    frequency: float
    max_cw: float
    mean_cw: float
    genre: Genre


def extract_features(inst: AnnotatedInstance, freq: BigramFrequencyTable,
                     cw: WordComplexityScorer, smoothing: float = 0.0) -> FeatureVector:
    """Six raw features for one phrase.

    ``frequency`` is the mean count of the phrase's adjacent token bigrams;
    missing bigrams count as zero unless add-k ``smoothing`` is set.
    """
    tokens = inst.tokens
    if len(tokens) < 2:
        raise TooShort(f"instance {inst.id!r}: phrase {inst.phrase!r} has < 2 tokens")
    counts = [freq.count(a, b) + smoothing for a, b in _bigrams(tokens)]
    scores = [cw.score(t) for t in tokens]
    return FeatureVector(
        mwe_type=inst.mwe_type,
        length=len(tokens),
        frequency=math.fsum(counts) / len(counts),
        max_cw=max(scores),
        mean_cw=math.fsum(scores) / len(scores),
        genre=inst.genre,
    )


# -- encoding ----------------------------------------------------------------

NUMERIC = (
    (FeatureGroup.LENGTH, "length"),
    (FeatureGroup.FREQUENCY, "frequency"),
    (FeatureGroup.MAX_CW, "max_cw"),
    (FeatureGroup.MEAN_CW, "mean_cw"),
)
GENRES = tuple(Genre)


def _numeric_raw(v: FeatureVector) -> list[float]:
    # log1p tames the heavy tail of raw bigram counts
    return [float(v.length), math.log1p(v.frequency), v.max_cw, v.mean_cw]


@dataclass(frozen=True)
class EncoderState:
    means: tuple[float, ...]
    stds: tuple[float, ...]
    constant: tuple[bool, ...]
    log_frequency: bool = True
    genres: tuple[Genre, ...] = GENRES
    mwe_types: tuple[MweType, ...] = MODELING_TYPES

    def to_dict(self) -> dict:
        return {
            "means": list(self.means), "stds": list(self.stds),
            "constant": list(self.constant), "log_frequency": self.log_frequency,
            "genres": [g.value for g in self.genres],
            "mwe_types": [t.value for t in self.mwe_types],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderState":
        return cls(
            means=tuple(d["means"]), stds=tuple(d["stds"]),
            constant=tuple(d["constant"]), log_frequency=d["log_frequency"],
            genres=tuple(Genre(g) for g in d["genres"]),
            mwe_types=tuple(MweType(t) for t in d["mwe_types"]),
        )

    def dim(self, groups: frozenset[FeatureGroup] = ALL_GROUPS) -> int:
        n = sum(1 for g, _ in NUMERIC if g in groups)
        if FeatureGroup.GENRE in groups:
            n += len(self.genres)
        if FeatureGroup.MWE_TYPE in groups:
            n += len(self.mwe_types)
        return n


def fit_encoder(train: Sequence[FeatureVector]) -> EncoderState:
    if not train:
        raise EmptyInput("cannot fit an encoder on no data")
    raw = np.array([_numeric_raw(v) for v in train], dtype=np.float64)
    means = raw.mean(axis=0)
    stds = raw.std(axis=0)
    constant = stds < 1e-12
    return EncoderState(
        means=tuple(float(m) for m in means),
        stds=tuple(float(s) if not c else 1.0 for s, c in zip(stds, constant)),
        constant=tuple(bool(c) for c in constant),
    )


def encode(v: FeatureVector, s: EncoderState,
           groups: frozenset[FeatureGroup] = ALL_GROUPS) -> np.ndarray:
    """Dense vector: scaled numeric features, then genre and MWE one-hots.

    Groups missing from ``groups`` are dropped from the layout entirely.
    """
    out = []
    raw = _numeric_raw(v)
    for k, (group, _) in enumerate(NUMERIC):
        if group in groups:
            out.append(0.0 if s.constant[k] else (raw[k] - s.means[k]) / s.stds[k])
    if FeatureGroup.GENRE in groups:
        out.extend(1.0 if g is v.genre else 0.0 for g in s.genres)
    if FeatureGroup.MWE_TYPE in groups:
        if v.mwe_type not in s.mwe_types:
            raise ValueError(f"MWE type {v.mwe_type.value!r} cannot be encoded")
        out.extend(1.0 if t is v.mwe_type else 0.0 for t in s.mwe_types)
    return np.array(out, dtype=np.float64)


def encode_many(vectors: Sequence[FeatureVector], s: EncoderState,
                groups: frozenset[FeatureGroup] = ALL_GROUPS) -> np.ndarray:
    if not vectors:
        return np.zeros((0, s.dim(groups)))
    return np.vstack([encode(v, s, groups) for v in vectors])


@dataclass(frozen=True)
class FeatureResources:
    """Bigram table plus word scorer, the two external inputs to extraction."""

    bigrams: BigramFrequencyTable
    scorer: WordComplexityScorer
    smoothing: float = 0.0

    def extract(self, inst: AnnotatedInstance) -> FeatureVector:
        return extract_features(inst, self.bigrams, self.scorer, self.smoothing)

    def fingerprints(self) -> dict[str, str]:
        return {
            "bigrams": self.bigrams.fingerprint(),
            "scorer": scorer_fingerprint(self.scorer),
        }

    @classmethod
    def from_texts(cls, texts: Iterable[str], smoothing: float = 0.0) -> "FeatureResources":
        """Count bigrams and unigrams from ``texts``; heuristic word scores."""
        texts = list(texts)
        return cls(
            BigramFrequencyTable.from_texts(texts, "corpus sentences"),
            HeuristicScorer(UnigramTable.from_texts(texts, "corpus sentences")),
            smoothing,
        )

    def to_dict(self) -> dict:
        return {
            "bigrams": [list(r) for r in self.bigrams.rows()],
            "scorer": self.scorer.to_dict(),
            "smoothing": self.smoothing,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureResources":
        bigrams = BigramFrequencyTable({(a, b): c for a, b, c in d["bigrams"]}, "embedded")
        return cls(bigrams, scorer_from_dict(d["scorer"]), d["smoothing"])
