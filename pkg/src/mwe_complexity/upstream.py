"""Convert the upstream MWE-CWI release into canonical TSV files.

Expected layout: a directory tree holding tab-separated files in the CWI
Shared Task 2018 column order, one file per genre and split::

    <any path>/<Genre>_<Split>[...].tsv     e.g. News_Train_MWE.tsv

Columns (no header, or a header line that is skipped)::

    0 hit_id  1 sentence  2 start  3 end  4 target
    5 native_seen  6 nonnative_seen  7 native_marked  8 nonnative_marked
    9 binary  10 prob  [11 mwe_type]

Genre is read from the file name (``WikiNews`` is matched before
``News``) and the split from ``Train``/``Dev``/``Test`` in the name. The
MWE type comes from column ``mwe_column`` (default: the 12th column).
Single-token targets are skipped, so the full shared-task files can be
fed in directly when they carry the extra column. Instance ids are
``<Genre>_<Split>_<line>``, with ``line`` the 1-based line in the source
file.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus import (
    AnnotatedInstance,
    Dataset,
    Genre,
    MweType,
    SplitTag,
    check_instance,
    save_dataset,
    tokenize,
)
from .errors import DataError, LayoutError

log = logging.getLogger(__name__)

CWI_FIELDS = 11


@dataclass
class ConversionStats:
    files: int = 0
    rows: int = 0
    kept: int = 0
    skipped_single_token: int = 0
    repaired_spans: int = 0


def _classify(path: Path):
    name = path.name.lower()
    if "wikinews" in name:
        genre = Genre.WIKINEWS
    elif "wikipedia" in name:
        genre = Genre.WIKIPEDIA
    elif "news" in name:
        genre = Genre.NEWS
    else:
        return None
    for split in SplitTag:
        if split.value.lower() in name:
            return genre, split
    return None


def _is_header(row):
    return len(row) > 2 and not row[2].strip().lstrip("-").isdigit()


def _repair(sentence, phrase, start):
    hits = []
    pos = sentence.find(phrase)
    while pos >= 0:
        hits.append(pos)
        pos = sentence.find(phrase, pos + 1)
    if not hits:
        return None
    return min(hits, key=lambda p: abs(p - start))


def convert_release(upstream_dir, end_inclusive: bool = False, mwe_column: int = 11,
                    repair_spans: bool = False) -> tuple[Dataset, ConversionStats]:
    root = Path(upstream_dir)
    if not root.is_dir():
        raise LayoutError(f"{root}: not a directory")
    files = []
    for path in sorted(root.rglob("*.tsv")):
        tag = _classify(path)
        if tag is None:
            log.info("skipping %s: no genre/split in the file name", path)
            continue
        files.append((path, *tag))
    if not files:
        raise LayoutError(f"{root}: no <Genre>_<Split> .tsv files found")

    stats = ConversionStats(files=len(files))
    instances = []
    for path, genre, split in files:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
            for lineno, row in enumerate(reader, start=1):
                if not row or not "".join(row).strip():
                    continue
                if lineno == 1 and _is_header(row):
                    continue
                if len(row) < CWI_FIELDS:
                    raise LayoutError(
                        f"{path}:{lineno}: expected >= {CWI_FIELDS} fields, got {len(row)}")
                stats.rows += 1
                target = row[4]
                if len(tokenize(target)) < 2:
                    stats.skipped_single_token += 1
                    continue
                raw_type = row[mwe_column].strip() if len(row) > mwe_column else ""
                if not raw_type:
                    raise LayoutError(f"{path}:{lineno}: phrase {target!r} has no MWE type")
                try:
                    mwe = MweType.from_alias(raw_type)
                except ValueError:
                    raise LayoutError(
                        f"{path}:{lineno}: unknown MWE type {raw_type!r}") from None
                try:
                    start, end = int(row[2]), int(row[3])
                    ns, nns, nm, nnm, binary = (int(v) for v in row[5:10])
                    prob = round(float(row[10]), 2)
                except ValueError as exc:
                    raise LayoutError(f"{path}:{lineno}: bad number: {exc}") from None
                if end_inclusive:
                    end += 1
                sentence = row[1]
                if repair_spans and sentence[start:end] != target:
                    fixed = _repair(sentence, target, start)
                    if fixed is not None:
                        start, end = fixed, fixed + len(target)
                        stats.repaired_spans += 1
                inst = AnnotatedInstance(
                    id=f"{genre.value}_{split.value}_{lineno:05d}",
                    genre=genre, split=split, sentence=sentence,
                    start=start, end=end, phrase=target,
                    native_seen=ns, nonnative_seen=nns,
                    native_marked=nm, nonnative_marked=nnm,
                    binary=binary, prob=prob, mwe_type=mwe,
                )
                try:
                    check_instance(inst, lineno, path)
                except DataError as exc:
                    raise LayoutError(f"{path}:{lineno}: {exc}") from None
                instances.append(inst)
                stats.kept += 1
    prov = {"upstream_dir": str(root), "end_inclusive": end_inclusive,
            "mwe_column": mwe_column, "repair_spans": repair_spans}
    return Dataset(tuple(instances), prov), stats


def convert(upstream_dir, out_dir, **kwargs) -> ConversionStats:
    """Convert and write ``instances.tsv`` and ``mwe_labels.tsv`` into ``out_dir``."""
    d, stats = convert_release(upstream_dir, **kwargs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(d, out / "instances.tsv", out / "mwe_labels.tsv")
    return stats
