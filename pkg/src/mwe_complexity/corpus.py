"""Data model and TSV I/O for the MWE-annotated CWI phrase data.

Canonical files
---------------
instances TSV (header required)::

    id genre split sentence start end phrase native_seen nonnative_seen
    native_marked nonnative_marked binary prob

Offsets are 0-based and end-exclusive; ``prob`` is written with two decimals.

MWE labels TSV (header required)::

    id mwe_type

Ids may repeat when the same context occurs more than once in the source
data. The n-th label row for an id belongs to the n-th instance row with
that id.
"""

from __future__ import annotations

import csv
import string
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DataError,
    MalformedRow,
    MissingLabel,
    SpanMismatch,
    UnknownMweType,
    ZeroAnnotators,
)

INSTANCE_COLUMNS = (
    "id", "genre", "split", "sentence", "start", "end", "phrase",
    "native_seen", "nonnative_seen", "native_marked", "nonnative_marked",
    "binary", "prob",
)
LABEL_COLUMNS = ("id", "mwe_type")
RECORD_COLUMNS = ("instance_id", "annotator_id", "round", "mwe_type")

MAX_PHRASE_CHARS = 50


class Genre(Enum):
    NEWS = "News"
    WIKINEWS = "WikiNews"
    WIKIPEDIA = "Wikipedia"


class SplitTag(Enum):
    TRAIN = "Train"
    DEV = "Dev"
    TEST = "Test"


class Group(Enum):
    NATIVE = "native"
    NON_NATIVE = "non-native"


class MweType(Enum):
    """The 13 annotation categories, in order of frequency in the full data.

    Values are the canonical serialized names.
    """

    NOT_MWE = "not MWE"
    MW_COMPOUND = "MW compounds"
    MW_NAMED_ENTITY = "MW named entities"
    NOT_MWE_CONTAINS_MWE = "not MWE but contains MWE(s)"
    VERB_PARTICLE = "verb-particle or other phrasal verb"
    FIXED_PHRASE = "fixed phrase"
    SEMI_FIXED_VP = "semi-fixedVP"
    VERB_PREPOSITION = "verb-preposition"
    PP_MODIFIER = "PP modifier"
    CONJUNCTION_CONNECTIVE = "conjunction/connective"
    VERB_NOUN_PREPOSITION = "verb-noun(-preposition)"
    COORDINATED_PHRASE = "coordinated phrase"
    SUPPORT_VERB = "support verb"

    @property
    def is_proper_mwe(self) -> bool:
        return self not in (MweType.NOT_MWE, MweType.NOT_MWE_CONTAINS_MWE)

    @classmethod
    def parse(cls, raw: str) -> "MweType":
        """Strict parse of a canonical name."""
        return cls(raw)

    @classmethod
    def from_alias(cls, raw: str) -> "MweType":
        """Lenient parse used when converting third-party files.

        Matches case-insensitively after dropping whitespace, punctuation
        and a plural ``s``, so ``"MW compound"``, ``"mw_compounds"`` and
        ``"MW Compounds"`` all resolve to :attr:`MW_COMPOUND`.
        """
        key = _alias_key(raw)
        try:
            return _ALIASES[key]
        except KeyError:
            raise ValueError(raw) from None


def _alias_key(raw: str) -> str:
    key = "".join(ch for ch in raw.lower() if ch.isalnum())
    return key.replace("mwes", "mwe").rstrip("s")


_ALIASES = {_alias_key(t.value): t for t in MweType}
_ALIASES.update({_alias_key(t.name): t for t in MweType})
_ALIASES.update({
    _alias_key("verb-particle"): MweType.VERB_PARTICLE,
    _alias_key("phrasal verb"): MweType.VERB_PARTICLE,
    _alias_key("verb-particle or other phrasal verbs"): MweType.VERB_PARTICLE,
    _alias_key("not MWE but contains MWE"): MweType.NOT_MWE_CONTAINS_MWE,
    _alias_key("contains MWE"): MweType.NOT_MWE_CONTAINS_MWE,
    _alias_key("semi-fixed VP"): MweType.SEMI_FIXED_VP,
    _alias_key("conjunction"): MweType.CONJUNCTION_CONNECTIVE,
    _alias_key("connective"): MweType.CONJUNCTION_CONNECTIVE,
    _alias_key("verb-noun"): MweType.VERB_NOUN_PREPOSITION,
    _alias_key("verb-noun-preposition"): MweType.VERB_NOUN_PREPOSITION,
    _alias_key("named entity"): MweType.MW_NAMED_ENTITY,
    _alias_key("compound"): MweType.MW_COMPOUND,
})

# MWE types that can reach the regressor (NOT_MWE is filtered out upstream).
MODELING_TYPES = tuple(t for t in MweType if t is not MweType.NOT_MWE)


_PUNCT = string.punctuation


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip ASCII punctuation off each token.

    Tokens that are pure punctuation disappear.
    """
    tokens = (tok.strip(_PUNCT) for tok in text.lower().split())
    return [tok for tok in tokens if tok]


def normalize_phrase(text: str) -> str:
    return " ".join(tokenize(text))


@dataclass(frozen=True)
class AnnotatedInstance:
    id: str
    genre: Genre
    split: SplitTag
    sentence: str
    start: int
    end: int
    phrase: str
    native_seen: int
    nonnative_seen: int
    native_marked: int
    nonnative_marked: int
    binary: int
    prob: float
    mwe_type: MweType

    @property
    def tokens(self) -> list[str]:
        return tokenize(self.phrase)

    def problems(self) -> list[str]:
        """Return every violated invariant except the span check."""
        out = []
        if not 0 <= self.native_marked <= self.native_seen:
            out.append("native_marked outside 0..native_seen")
        if not 0 <= self.nonnative_marked <= self.nonnative_seen:
            out.append("nonnative_marked outside 0..nonnative_seen")
        seen = self.native_seen + self.nonnative_seen
        if seen <= 0:
            out.append("no annotators saw this phrase")
        else:
            ratio = (self.native_marked + self.nonnative_marked) / seen
            # prob is serialized with 2 decimals
            if abs(ratio - self.prob) > 0.005 + 1e-9:
                out.append(f"prob {self.prob} != marked/seen {ratio:.4f}")
        if self.binary not in (0, 1):
            out.append("binary must be 0 or 1")
        elif (self.binary == 1) != (self.prob > 0):
            out.append("binary label disagrees with prob")
        if len(self.phrase) > MAX_PHRASE_CHARS:
            out.append(f"phrase longer than {MAX_PHRASE_CHARS} characters")
        if len(self.tokens) < 2:
            out.append("phrase has fewer than 2 tokens")
        return out


@dataclass(frozen=True)
class AnnotationRecord:
    instance_id: str
    annotator_id: str
    round: int
    label: MweType


@dataclass(frozen=True)
class Dataset:
    instances: tuple[AnnotatedInstance, ...]
    provenance: dict = field(default_factory=dict, compare=False, hash=False)

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, idx):
        return self.instances[idx]

    def filter(self, pred, note: str | None = None) -> "Dataset":
        prov = dict(self.provenance)
        if note:
            prov["filters"] = tuple(prov.get("filters", ())) + (note,)
        return Dataset(tuple(i for i in self.instances if pred(i)), prov)

    def with_instances(self, instances: Iterable[AnnotatedInstance]) -> "Dataset":
        return Dataset(tuple(instances), dict(self.provenance))


# -- reading -----------------------------------------------------------------

def _read_tsv(path, columns):
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "missing header", path) from None
        if tuple(header) != tuple(columns):
            raise MalformedRow(1, f"expected header {list(columns)}, got {header}", path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise MalformedRow(
                    lineno, f"expected {len(columns)} fields, got {len(row)}", path)
            yield lineno, row


def _parse_instance(lineno, row, path, end_inclusive, mwe_type=MweType.NOT_MWE):
    (id_, genre, split, sentence, start, end, phrase,
     ns, nns, nm, nnm, binary, prob) = row
    try:
        genre_v = Genre(genre)
    except ValueError:
        raise MalformedRow(lineno, f"unknown genre {genre!r}", path) from None
    try:
        split_v = SplitTag(split)
    except ValueError:
        raise MalformedRow(lineno, f"unknown split {split!r}", path) from None
    try:
        ints = [int(v) for v in (start, end, ns, nns, nm, nnm, binary)]
        prob_v = float(prob)
    except ValueError as exc:
        raise MalformedRow(lineno, f"bad number: {exc}", path) from None
    start_v, end_v, ns_v, nns_v, nm_v, nnm_v, bin_v = ints
    if end_inclusive:
        end_v += 1
    return AnnotatedInstance(
        id=id_, genre=genre_v, split=split_v, sentence=sentence,
        start=start_v, end=end_v, phrase=phrase,
        native_seen=ns_v, nonnative_seen=nns_v,
        native_marked=nm_v, nonnative_marked=nnm_v,
        binary=bin_v, prob=prob_v, mwe_type=mwe_type,
    )


def check_instance(inst, lineno, path):
    if inst.sentence[inst.start:inst.end] != inst.phrase:
        raise SpanMismatch(inst.id, inst.phrase, inst.sentence[inst.start:inst.end])
    problems = inst.problems()
    if problems:
        raise MalformedRow(lineno, "; ".join(problems), path)


def scan_instances(path, end_inclusive=False):
    """Parse an instances file, collecting per-row errors instead of raising.

    Returns ``(instances, errors)`` where ``errors`` is a list of
    ``(line, exception)`` pairs. Rows with errors are left out of
    ``instances``; every other row is returned unchanged. Header and
    field-count problems still raise, since nothing after them can be
    trusted.
    """
    instances, errors = [], []
    for lineno, row in _read_tsv(path, INSTANCE_COLUMNS):
        try:
            inst = _parse_instance(lineno, row, path, end_inclusive)
            check_instance(inst, lineno, path)
        except DataError as exc:
            errors.append((lineno, exc))
            continue
        instances.append(inst)
    return instances, errors


def read_labels(path) -> list[tuple[str, str]]:
    return [(row[0], row[1]) for _, row in _read_tsv(path, LABEL_COLUMNS)]


def load_dataset(instances_path, mwe_labels_path, end_inclusive: bool = False) -> Dataset:
    """Load and validate a canonical instances file plus its MWE labels."""
    rows = []
    for lineno, row in _read_tsv(instances_path, INSTANCE_COLUMNS):
        inst = _parse_instance(lineno, row, instances_path, end_inclusive)
        check_instance(inst, lineno, instances_path)
        rows.append((lineno, inst))

    labels: dict[str, list[MweType]] = defaultdict(list)
    for lineno, (id_, raw) in (
            (ln, (r[0], r[1])) for ln, r in _read_tsv(mwe_labels_path, LABEL_COLUMNS)):
        try:
            labels[id_].append(MweType.parse(raw))
        except ValueError:
            raise UnknownMweType(id_, raw) from None

    known = Counter(inst.id for _, inst in rows)
    for id_, labs in labels.items():
        if id_ not in known:
            raise MalformedRow(0, f"label for unknown instance {id_!r}", mwe_labels_path)
        if len(labs) > known[id_]:
            raise MalformedRow(
                0, f"{len(labs)} labels for {known[id_]} instances of {id_!r}",
                mwe_labels_path)

    seen: Counter = Counter()
    out = []
    for _, inst in rows:
        k = seen[inst.id]
        seen[inst.id] += 1
        labs = labels.get(inst.id, ())
        if k >= len(labs):
            raise MissingLabel(inst.id)
        out.append(replace(inst, mwe_type=labs[k]))

    prov = {
        "instances_path": str(instances_path),
        "mwe_labels_path": str(mwe_labels_path),
        "end_inclusive": end_inclusive,
    }
    return Dataset(tuple(out), prov)


def load_records(path) -> list[AnnotationRecord]:
    records = []
    seen = set()
    for lineno, (inst_id, ann, rnd, raw) in _read_tsv(path, RECORD_COLUMNS):
        try:
            rnd_v = int(rnd)
        except ValueError:
            raise MalformedRow(lineno, f"bad round {rnd!r}", path) from None
        if rnd_v < 1:
            raise MalformedRow(lineno, "round must be >= 1", path)
        try:
            label = MweType.parse(raw)
        except ValueError:
            raise UnknownMweType(inst_id, raw) from None
        key = (rnd_v, inst_id, ann)
        if key in seen:
            raise MalformedRow(
                lineno, f"duplicate label by {ann!r} for {inst_id!r} in round {rnd_v}",
                path)
        seen.add(key)
        records.append(AnnotationRecord(inst_id, ann, rnd_v, label))
    return records


# -- writing -----------------------------------------------------------------

def _check_field(value: str):
    if "\t" in value or "\n" in value or "\r" in value:
        raise DataError(f"field contains a tab or newline: {value!r}")
    return value


def instance_row(inst: AnnotatedInstance) -> list[str]:
    return [
        _check_field(inst.id), inst.genre.value, inst.split.value,
        _check_field(inst.sentence), str(inst.start), str(inst.end),
        _check_field(inst.phrase),
        str(inst.native_seen), str(inst.nonnative_seen),
        str(inst.native_marked), str(inst.nonnative_marked),
        str(inst.binary), f"{inst.prob:.2f}",
    ]


def _write_tsv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def save_dataset(d: Dataset, instances_path, mwe_labels_path) -> None:
    _write_tsv(instances_path, INSTANCE_COLUMNS, (instance_row(i) for i in d))
    save_labels(d, mwe_labels_path)


def save_labels(d: Dataset, mwe_labels_path) -> None:
    _write_tsv(mwe_labels_path, LABEL_COLUMNS, ([i.id, i.mwe_type.value] for i in d))


def save_records(records: Iterable[AnnotationRecord], path) -> None:
    _write_tsv(path, RECORD_COLUMNS, (
        [r.instance_id, r.annotator_id, str(r.round), r.label.value] for r in records))


# -- views -------------------------------------------------------------------

def modeling_subset(d: Dataset) -> Dataset:
    """Instances annotated as anything but plain ``not MWE``."""
    return d.filter(lambda i: i.mwe_type is not MweType.NOT_MWE, "modeling")


def complex_only(d: Dataset) -> Dataset:
    """Instances marked complex by at least one annotator."""
    return d.filter(lambda i: i.prob > 0, "complex-only")


def select_splits(d: Dataset, splits: Iterable[SplitTag]) -> Dataset:
    wanted = frozenset(splits)
    return d.filter(lambda i: i.split in wanted,
                    "splits=" + ",".join(s.value for s in SplitTag if s in wanted))


def select_genre(d: Dataset, genre: Genre) -> Dataset:
    return d.filter(lambda i: i.genre is genre, f"genre={genre.value}")


def group_score(inst: AnnotatedInstance, group: Group) -> float:
    """Fraction of one annotator group that marked the phrase complex."""
    if group is Group.NATIVE:
        marked, seen = inst.native_marked, inst.native_seen
    else:
        marked, seen = inst.nonnative_marked, inst.nonnative_seen
    if seen == 0:
        raise ZeroAnnotators(f"instance {inst.id!r}: no {group.value} annotators")
    return marked / seen


# -- consistency checks ------------------------------------------------------

@dataclass(frozen=True)
class PhraseConflict:
    phrase: str
    label_counts: tuple[tuple[MweType, int], ...]
    instance_ids: tuple[str, ...]
    proposed: MweType | None
    dissenting_instances: tuple[str, ...]
    dissenting_records: tuple[AnnotationRecord, ...]


@dataclass(frozen=True)
class ConsistencyReport:
    conflicts: tuple[PhraseConflict, ...]

    def __bool__(self):
        return bool(self.conflicts)

    def __len__(self):
        return len(self.conflicts)


def check_phrase_label_consistency(
        d: Dataset, records: Sequence[AnnotationRecord] = ()) -> ConsistencyReport:
    """Find phrases that received different MWE types in different contexts.

    A conflict proposes the strict-majority label when one exists (the
    usual 2-of-3 case) and lists the instances, and any per-annotator
    records for them, that disagree with it. Without a strict majority the
    proposal is ``None`` and the case goes to adjudication.
    """
    by_phrase: dict[str, list[AnnotatedInstance]] = defaultdict(list)
    for inst in d:
        by_phrase[normalize_phrase(inst.phrase)].append(inst)

    recs_by_inst: dict[str, list[AnnotationRecord]] = defaultdict(list)
    for r in records:
        recs_by_inst[r.instance_id].append(r)

    conflicts = []
    for phrase in sorted(by_phrase):
        group = by_phrase[phrase]
        counts = Counter(i.mwe_type for i in group)
        if len(counts) <= 1:
            continue
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], list(MweType).index(kv[0])))
        top, top_n = ordered[0]
        proposed = top if top_n * 2 > len(group) else None
        if proposed is None:
            dissent_inst = ()
            dissent_rec = ()
        else:
            dissent_inst = tuple(i.id for i in group if i.mwe_type is not proposed)
            ids = {i.id for i in group}
            dissent_rec = tuple(
                r for iid in sorted(ids) for r in recs_by_inst.get(iid, ())
                if r.label is not proposed)
        conflicts.append(PhraseConflict(
            phrase=phrase,
            label_counts=tuple(ordered),
            instance_ids=tuple(i.id for i in group),
            proposed=proposed,
            dissenting_instances=dissent_inst,
            dissenting_records=dissent_rec,
        ))
    return ConsistencyReport(tuple(conflicts))


def upgrade_contains_mwe(d: Dataset) -> tuple[Dataset, list[str]]:
    """Relabel ``not MWE`` phrases that contain an MWE annotated elsewhere.

    Containment is a contiguous token match of a strictly shorter phrase
    whose label is a proper MWE type. Idempotent.
    """
    proper = {
        tuple(i.tokens) for i in d if i.mwe_type.is_proper_mwe
    }
    lengths = sorted({len(p) for p in proper})
    changed = []
    out = []
    for inst in d:
        if inst.mwe_type is MweType.NOT_MWE and _contains_any(inst.tokens, proper, lengths):
            out.append(replace(inst, mwe_type=MweType.NOT_MWE_CONTAINS_MWE))
            changed.append(inst.id)
        else:
            out.append(inst)
    if not changed:
        return d, []
    return d.with_instances(out), changed


def _contains_any(tokens, phrases, lengths):
    n = len(tokens)
    for size in lengths:
        if size >= n:
            break
        for start in range(n - size + 1):
            if tuple(tokens[start:start + size]) in phrases:
                return True
    return False
