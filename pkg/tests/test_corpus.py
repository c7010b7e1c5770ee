import csv

import pytest

from conftest import dataset, make_instance
from mwe_complexity.corpus import (
    INSTANCE_COLUMNS,
    AnnotationRecord,
    Dataset,
    Genre,
    Group,
    MweType,
    SplitTag,
    check_phrase_label_consistency,
    complex_only,
    group_score,
    load_dataset,
    load_records,
    modeling_subset,
    normalize_phrase,
    save_dataset,
    save_records,
    scan_instances,
    select_genre,
    select_splits,
    tokenize,
    upgrade_contains_mwe,
)
from mwe_complexity.errors import (
    DataError,
    MalformedRow,
    MissingLabel,
    SpanMismatch,
    UnknownMweType,
    ZeroAnnotators,
)


def write_pair(tmp_path, instances, labels=None):
    inst_path, lab_path = tmp_path / "instances.tsv", tmp_path / "mwe_labels.tsv"
    save_dataset(dataset(*instances), inst_path, lab_path)
    if labels is not None:
        lab_path.write_text("id\tmwe_type\n" + "".join(f"{a}\t{b}\n" for a, b in labels))
    return inst_path, lab_path


def test_mwe_type_has_thirteen_categories():
    assert len(MweType) == 13
    assert MweType.parse("MW compounds") is MweType.MW_COMPOUND
    with pytest.raises(ValueError):
        MweType.parse("mw compound")


@pytest.mark.parametrize("raw,expected", [
    ("MW compound", MweType.MW_COMPOUND),
    ("mw_compounds", MweType.MW_COMPOUND),
    ("MW_COMPOUND", MweType.MW_COMPOUND),
    ("not MWE but contains MWE", MweType.NOT_MWE_CONTAINS_MWE),
    ("Not MWE", MweType.NOT_MWE),
    ("verb-particle", MweType.VERB_PARTICLE),
    ("semi-fixed VP", MweType.SEMI_FIXED_VP),
    ("support verbs", MweType.SUPPORT_VERB),
])
def test_alias_parsing(raw, expected):
    assert MweType.from_alias(raw) is expected


def test_alias_parsing_rejects_unknown():
    with pytest.raises(ValueError):
        MweType.from_alias("idiom")


def test_tokenize_lowercases_and_strips_punctuation():
    assert tokenize("The  Sledge-hammers, (big)") == ["the", "sledge-hammers", "big"]
    assert normalize_phrase(" Property  Sector ") == "property sector"


def test_round_trip(tmp_path, small_synthetic):
    inst_path, lab_path = tmp_path / "i.tsv", tmp_path / "l.tsv"
    save_dataset(small_synthetic, inst_path, lab_path)
    loaded = load_dataset(inst_path, lab_path)
    assert loaded == small_synthetic


def test_header_only_file_gives_empty_dataset(tmp_path):
    inst_path, lab_path = write_pair(tmp_path, [])
    assert len(load_dataset(inst_path, lab_path)) == 0


def test_span_typo_reported_on_its_row_only(tmp_path):
    rows = [make_instance(id=f"r{k}") for k in range(3)]
    inst_path, lab_path = write_pair(tmp_path, rows)
    lines = inst_path.read_text().splitlines()
    fields = lines[2].split("\t")
    fields[6] = "property sectr"          # phrase typo on the second data row
    lines[2] = "\t".join(fields)
    inst_path.write_text("\n".join(lines) + "\n")

    # oracle: slice the sentences straight from the raw file
    with open(inst_path, newline="") as fh:
        raw = list(csv.DictReader(fh, delimiter="\t", quoting=csv.QUOTE_NONE))
    bad = [k + 2 for k, r in enumerate(raw)
           if r["sentence"][int(r["start"]):int(r["end"])] != r["phrase"]]
    assert bad == [3]

    good, errors = scan_instances(inst_path)
    assert [ln for ln, _ in errors] == bad
    assert isinstance(errors[0][1], SpanMismatch)
    assert [i.id for i in good] == ["r0", "r2"]
    # labels live in the other file, so compare everything but the type
    assert good[0].sentence == rows[0].sentence and good[1].phrase == rows[2].phrase
    with pytest.raises(SpanMismatch):
        load_dataset(inst_path, lab_path)


def test_end_inclusive_offsets(tmp_path):
    inst = make_instance()
    inst_path, lab_path = write_pair(tmp_path, [inst])
    text = inst_path.read_text().replace(f"\t{inst.end}\t", f"\t{inst.end - 1}\t")
    inst_path.write_text(text)
    with pytest.raises(SpanMismatch):
        load_dataset(inst_path, lab_path)
    assert load_dataset(inst_path, lab_path, end_inclusive=True)[0] == inst


def test_missing_and_unknown_labels(tmp_path):
    a, b = make_instance(id="a"), make_instance(id="b")
    inst_path, lab_path = write_pair(tmp_path, [a, b], labels=[("a", "MW compounds")])
    with pytest.raises(MissingLabel):
        load_dataset(inst_path, lab_path)
    write_pair(tmp_path, [a, b], labels=[("a", "MW compounds"), ("b", "idiom")])
    with pytest.raises(UnknownMweType):
        load_dataset(inst_path, lab_path)


def test_bad_header_and_field_count(tmp_path):
    inst_path, lab_path = write_pair(tmp_path, [make_instance()])
    inst_path.write_text("id\tgenre\n")
    with pytest.raises(MalformedRow):
        load_dataset(inst_path, lab_path)
    inst_path.write_text("\t".join(INSTANCE_COLUMNS) + "\nx\ty\n")
    with pytest.raises(MalformedRow) as err:
        load_dataset(inst_path, lab_path)
    assert err.value.line == 2


@pytest.mark.parametrize("kw", [
    dict(prob=0.5),                          # prob disagrees with marks
    dict(native=11),                         # more marks than annotators
    dict(phrase="sector"),                   # single token
    dict(phrase="a " * 30 + "b"),            # longer than 50 chars
])
def test_invariant_violations_rejected(tmp_path, kw):
    inst_path, lab_path = write_pair(tmp_path, [make_instance(**kw)])
    with pytest.raises(DataError):
        load_dataset(inst_path, lab_path)


def test_duplicate_ids_keep_label_order(tmp_path):
    a1 = make_instance(id="dup", mwe=MweType.MW_COMPOUND)
    a2 = make_instance(id="dup", mwe=MweType.FIXED_PHRASE, native=3)
    inst_path, lab_path = write_pair(tmp_path, [a1, a2])
    d = load_dataset(inst_path, lab_path)
    assert [i.mwe_type for i in d] == [MweType.MW_COMPOUND, MweType.FIXED_PHRASE]


def mixed_ten():
    types = [MweType.NOT_MWE, MweType.MW_COMPOUND, MweType.NOT_MWE, MweType.FIXED_PHRASE,
             MweType.NOT_MWE_CONTAINS_MWE, MweType.NOT_MWE, MweType.MW_NAMED_ENTITY,
             MweType.MW_COMPOUND, MweType.NOT_MWE, MweType.SUPPORT_VERB]
    marks = [0, 2, 1, 0, 3, 0, 0, 5, 2, 1]
    return dataset(*(make_instance(id=f"m{k}", mwe=t, native=n)
                     for k, (t, n) in enumerate(zip(types, marks))))


def test_modeling_subset_drops_not_mwe_only():
    d = mixed_ten()
    m = modeling_subset(d)
    assert len(m) == 6        # 10 rows minus 4 NotMwe rows, counted by hand
    assert all(i.mwe_type is not MweType.NOT_MWE for i in m)
    assert sum(1 for i in m if i.prob == 0) == 2
    assert len(modeling_subset(dataset(make_instance(mwe=MweType.NOT_MWE)))) == 0


def test_complex_only():
    d = dataset(*(make_instance(id=f"c{k}", native=n) for k, n in enumerate([0, 1, 0, 2, 3])))
    assert [i.id for i in complex_only(d)] == ["c1", "c3", "c4"]
    zeros = dataset(make_instance(native=0), make_instance(id="z", native=0))
    assert len(complex_only(zeros)) == 0


def test_filters_commute():
    d = mixed_ten()
    assert complex_only(modeling_subset(d)) == modeling_subset(complex_only(d))


def test_split_and_genre_selection():
    d = dataset(make_instance(id="a", split=SplitTag.TEST, genre=Genre.WIKINEWS),
                make_instance(id="b"), make_instance(id="c", split=SplitTag.DEV))
    assert [i.id for i in select_splits(d, [SplitTag.TRAIN, SplitTag.DEV])] == ["b", "c"]
    assert [i.id for i in select_genre(d, Genre.WIKINEWS)] == ["a"]


def test_group_score():
    inst = make_instance(native=3, non=0)
    assert group_score(inst, Group.NATIVE) == pytest.approx(0.3)
    assert group_score(inst, Group.NON_NATIVE) == 0.0
    with pytest.raises(ZeroAnnotators):
        group_score(make_instance(native=0, nonnative_seen=0), Group.NON_NATIVE)


def test_phrase_conflict_proposes_majority():
    d = dataset(
        make_instance(id="x1", mwe=MweType.MW_COMPOUND),
        make_instance(id="x2", mwe=MweType.MW_COMPOUND, left="A "),
        make_instance(id="x3", mwe=MweType.FIXED_PHRASE, left="Our "),
        make_instance(id="y1", phrase="interest rate", mwe=MweType.MW_COMPOUND),
    )
    records = [AnnotationRecord("x3", "A1", 1, MweType.FIXED_PHRASE),
               AnnotationRecord("x3", "A2", 1, MweType.MW_COMPOUND)]
    report = check_phrase_label_consistency(d, records)
    assert len(report) == 1
    c = report.conflicts[0]
    assert c.phrase == "property sector"
    assert c.proposed is MweType.MW_COMPOUND
    assert c.dissenting_instances == ("x3",)
    assert c.dissenting_records == (records[0],)


def test_phrase_conflict_without_majority():
    d = dataset(make_instance(id="a", mwe=MweType.MW_COMPOUND),
                make_instance(id="b", mwe=MweType.FIXED_PHRASE))
    assert check_phrase_label_consistency(d).conflicts[0].proposed is None


def test_no_conflicts_and_duplicates_kept():
    same = make_instance(id="d")
    d = dataset(same, same, make_instance(id="e", phrase="interest rate"))
    assert not check_phrase_label_consistency(d)
    assert len(d) == 3


def test_upgrade_contains_mwe():
    d = dataset(
        make_instance(id="n1", phrase="collapsed property sector", mwe=MweType.NOT_MWE),
        make_instance(id="c1", phrase="property sector", mwe=MweType.MW_COMPOUND),
        make_instance(id="n2", phrase="big house", mwe=MweType.NOT_MWE),
    )
    upgraded, changed = upgrade_contains_mwe(d)
    assert changed == ["n1"]
    assert upgraded[0].mwe_type is MweType.NOT_MWE_CONTAINS_MWE
    assert upgraded[2].mwe_type is MweType.NOT_MWE
    again, changed2 = upgrade_contains_mwe(upgraded)
    assert changed2 == [] and again == upgraded


def test_upgrade_without_not_mwe_is_noop():
    d = dataset(make_instance(id="c1"), make_instance(id="c2", phrase="interest rate"))
    out, changed = upgrade_contains_mwe(d)
    assert out == d and changed == []


def test_records_round_trip_and_duplicates(tmp_path):
    recs = [AnnotationRecord("a", "A1", 1, MweType.MW_COMPOUND),
            AnnotationRecord("a", "A2", 1, MweType.NOT_MWE)]
    path = tmp_path / "r.tsv"
    save_records(recs, path)
    assert load_records(path) == recs
    save_records(recs + recs[:1], path)
    with pytest.raises(MalformedRow):
        load_records(path)


def test_dataset_provenance_not_compared():
    a = Dataset((make_instance(),), {"x": 1})
    b = Dataset((make_instance(),), {"y": 2})
    assert a == b
