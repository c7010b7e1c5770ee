import math

import numpy as np
import pytest

from conftest import make_instance
from mwe_complexity.corpus import Genre, MweType, modeling_subset
from mwe_complexity.errors import ResourceError, TooShort
from mwe_complexity.features import (
    ALL_GROUPS,
    BigramFrequencyTable,
    FeatureGroup,
    FeatureResources,
    FeatureVector,
    HeuristicScorer,
    LexiconScorer,
    UnigramTable,
    encode,
    encode_many,
    extract_features,
    fit_encoder,
    scorer_from_dict,
)

FLAT = LexiconScorer({}, default=0.5)


def vec(length=2, freq=0.0, mx=0.5, mean=0.5, mwe=MweType.MW_COMPOUND, genre=Genre.NEWS):
    return FeatureVector(mwe, length, freq, mx, mean, genre)


def test_sledge_hammers_row():
    inst = make_instance(phrase="sledge hammers", mwe=MweType.MW_COMPOUND)
    bigrams = BigramFrequencyTable({("sledge", "hammers"): 39})
    scorer = LexiconScorer({"sledge": 0.70, "hammers": 0.50})
    v = extract_features(inst, bigrams, scorer)
    assert v == FeatureVector(MweType.MW_COMPOUND, 2, 39.0, 0.70, pytest.approx(0.60),
                              Genre.NEWS)


def test_missing_bigram_counts_zero():
    inst = make_instance(phrase="sledge hammers")
    assert extract_features(inst, BigramFrequencyTable({}), FLAT).frequency == 0.0
    smoothed = extract_features(inst, BigramFrequencyTable({}), FLAT, smoothing=1.0)
    assert smoothed.frequency == 1.0


def test_three_token_frequency_is_mean_of_bigrams():
    inst = make_instance(phrase="a b c")
    table = BigramFrequencyTable({("a", "b"): 10, ("b", "c"): 20})
    assert extract_features(inst, table, FLAT).frequency == 15.0


def test_frequency_is_order_sensitive():
    table = BigramFrequencyTable({("interest", "rate"): 12})
    fwd = extract_features(make_instance(phrase="interest rate"), table, FLAT)
    rev = extract_features(make_instance(phrase="rate interest"), table, FLAT)
    assert fwd.frequency == 12.0 and rev.frequency == 0.0


def test_single_token_is_too_short():
    bad = make_instance(phrase="x y")
    object.__setattr__(bad, "phrase", "sector")
    with pytest.raises(TooShort):
        extract_features(bad, BigramFrequencyTable({}), FLAT)


def test_every_modeling_instance_extracts(synthetic):
    res = FeatureResources.from_texts({i.sentence for i in synthetic})
    for inst in modeling_subset(synthetic):
        v = res.extract(inst)
        assert v.mean_cw <= v.max_cw + 1e-15


def test_heuristic_scorer_formula():
    uni = UnigramTable({"the": 99, "rare": 9})
    s = HeuristicScorer(uni)
    expected = 0.04 * 4 + 0.5 * (1 - math.log1p(9) / math.log1p(99))
    assert s.score("rare") == pytest.approx(expected)
    assert s.score("the") == pytest.approx(0.12)
    assert s.score("unseen") == pytest.approx(0.04 * 6 + 0.5)
    assert s.score("x" * 40) == 1.0


def test_lexicon_scorer_validation(tmp_path):
    with pytest.raises(ResourceError):
        LexiconScorer({"a": 1.5})
    p = tmp_path / "lex.tsv"
    p.write_text("word\tscore\nSledge\t0.7\n")
    lex = LexiconScorer.load(p)
    assert lex.score("sledge") == 0.7 and lex.score("other") == 0.5
    p.write_text("a\t2\n")
    with pytest.raises(ResourceError):
        LexiconScorer.load(p)


def test_bigram_table_io(tmp_path):
    t = BigramFrequencyTable.from_texts(["The cat sat.", "the cat ran"])
    assert t.count("the", "cat") == 2
    p = tmp_path / "b.tsv"
    t.save(p)
    loaded = BigramFrequencyTable.load(p)
    assert loaded.counts == t.counts and loaded.fingerprint() == t.fingerprint()
    p.write_text("a\tb\n")
    with pytest.raises(ResourceError):
        BigramFrequencyTable.load(p)
    p.write_text("a\tb\t-1\n")
    with pytest.raises(ResourceError):
        BigramFrequencyTable.load(p)


def test_resources_round_trip():
    res = FeatureResources.from_texts(["one two three", "two three four"], smoothing=0.5)
    back = FeatureResources.from_dict(res.to_dict())
    assert back.fingerprints() == res.fingerprints()
    assert back.smoothing == 0.5
    assert scorer_from_dict(FLAT.to_dict()).score("x") == 0.5


def test_encoder_mean_std_hand_arithmetic():
    s = fit_encoder([vec(length=2), vec(length=4)])
    assert s.means[0] == 3.0 and s.stds[0] == 1.0
    assert s.constant == (False, True, True, True)
    assert fit_encoder([vec(length=2), vec(length=4)]) == s


def test_constant_feature_encodes_to_zero():
    s = fit_encoder([vec(length=3, freq=1.0), vec(length=3, freq=5.0)])
    assert s.constant[0]
    assert encode(vec(length=7), s)[0] == 0.0


def test_encode_layout_and_masks():
    train = [vec(length=2, freq=3, mx=0.2, mean=0.1), vec(length=5, freq=9, mx=0.8, mean=0.4)]
    s = fit_encoder(train)
    x = encode(vec(length=3, genre=Genre.WIKINEWS, mwe=MweType.FIXED_PHRASE), s)
    assert x.shape == (4 + 3 + 12,)
    assert x[4:7].sum() == 1.0 and x[7:].sum() == 1.0
    assert x[4 + list(Genre).index(Genre.WIKINEWS)] == 1.0
    no_mwe = ALL_GROUPS - {FeatureGroup.MWE_TYPE}
    assert encode(train[0], s, no_mwe).shape[0] == x.shape[0] - 12
    assert s.dim(no_mwe) == 7


def test_encode_training_mean_gives_zeros():
    train = [vec(length=2, freq=3, mx=0.2, mean=0.1), vec(length=4, freq=15, mx=0.6, mean=0.3)]
    s = fit_encoder(train)
    mean_vec = vec(length=3, freq=math.expm1(s.means[1]), mx=0.4, mean=0.2)
    assert np.allclose(encode(mean_vec, s)[:4], 0.0, atol=1e-12)


def test_not_mwe_cannot_be_encoded():
    s = fit_encoder([vec()])
    with pytest.raises(ValueError):
        encode(vec(mwe=MweType.NOT_MWE), s)


def test_encoding_deterministic(small_synthetic):
    res = FeatureResources.from_texts(i.sentence for i in small_synthetic)
    vecs = [res.extract(i) for i in modeling_subset(small_synthetic)]
    a = encode_many(vecs, fit_encoder(vecs))
    b = encode_many(vecs, fit_encoder(vecs))
    assert a.tobytes() == b.tobytes()


def test_parse_feature_list():
    assert FeatureGroup.parse_list("all") == ALL_GROUPS
    assert FeatureGroup.parse_list("mwe, genre") == {FeatureGroup.MWE_TYPE, FeatureGroup.GENRE}
    assert FeatureGroup.parse_list("all,-mwe") == ALL_GROUPS - {FeatureGroup.MWE_TYPE}
    with pytest.raises(ValueError):
        FeatureGroup.parse_list("mwe,colour")
