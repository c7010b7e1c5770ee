"""Synthetic stand-in for the MWE-annotated CWI phrase data.

Used by the test-suite and for trying the CLI without the real release.
The generator mimics the real data's shape: the 13 MWE types at their
observed relative frequencies, three genres, Train/Dev/Test splits, 10
native plus 10 non-native annotators per phrase, phrases that recur across
contexts, and complexity that depends on MWE type, word rarity, length and
genre. Nothing here is meant to reproduce published numbers.

Run ``python -m mwe_complexity.synthetic OUTDIR`` to write canonical
instances, labels and annotation-record files.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .corpus import (
    AnnotatedInstance,
    AnnotationRecord,
    Dataset,
    Genre,
    MweType,
    SplitTag,
    save_dataset,
    save_records,
)
from .seeding import rng_for

# counts in the full released data, used as sampling weights
TYPE_WEIGHTS = {
    MweType.NOT_MWE: 2181,
    MweType.MW_COMPOUND: 1272,
    MweType.MW_NAMED_ENTITY: 497,
    MweType.NOT_MWE_CONTAINS_MWE: 436,
    MweType.VERB_PARTICLE: 119,
    MweType.FIXED_PHRASE: 72,
    MweType.SEMI_FIXED_VP: 39,
    MweType.VERB_PREPOSITION: 34,
    MweType.PP_MODIFIER: 33,
    MweType.CONJUNCTION_CONNECTIVE: 16,
    MweType.VERB_NOUN_PREPOSITION: 15,
    MweType.COORDINATED_PHRASE: 11,
    MweType.SUPPORT_VERB: 7,
}

# per-type logit offsets for the chance that one annotator marks the phrase
TYPE_EFFECT = {
    MweType.NOT_MWE: -2.3,
    MweType.MW_COMPOUND: -1.8,
    MweType.MW_NAMED_ENTITY: -2.75,
    MweType.NOT_MWE_CONTAINS_MWE: -2.55,
    MweType.VERB_PARTICLE: -1.9,
    MweType.FIXED_PHRASE: -1.95,
    MweType.SEMI_FIXED_VP: -2.5,
    MweType.VERB_PREPOSITION: -2.7,
    MweType.PP_MODIFIER: -2.5,
    MweType.CONJUNCTION_CONNECTIVE: -3.1,
    MweType.VERB_NOUN_PREPOSITION: -1.9,
    MweType.COORDINATED_PHRASE: -1.8,
    MweType.SUPPORT_VERB: -2.8,
}

BASE_LOGIT = -1.3
GENRE_EFFECT = {Genre.NEWS: 0.15, Genre.WIKIPEDIA: 0.1, Genre.WIKINEWS: -0.6}
GENRE_WEIGHTS = {Genre.NEWS: 0.45, Genre.WIKINEWS: 0.25, Genre.WIKIPEDIA: 0.30}
SPLIT_WEIGHTS = {SplitTag.TRAIN: 0.75, SplitTag.DEV: 0.1, SplitTag.TEST: 0.15}

_ONSETS = ["b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t",
           "v", "w", "br", "cl", "dr", "gr", "pl", "st", "tr", "sh", "ch", "th"]
_NUCLEI = ["a", "e", "i", "o", "u", "ai", "ea", "ou", "io"]
_CODAS = ["", "", "n", "r", "s", "t", "l", "m", "nd", "st", "ck"]


def _vocabulary(rng, size):
    words = set()
    out = []
    while len(out) < size:
        n_syll = 1 + int(rng.integers(0, 4))
        w = "".join(
            _ONSETS[rng.integers(len(_ONSETS))] + _NUCLEI[rng.integers(len(_NUCLEI))]
            + _CODAS[rng.integers(len(_CODAS))]
            for _ in range(n_syll))
        if w not in words and len(w) <= 12:
            words.add(w)
            out.append(w)
    # shorter words are more common, as in real text
    out.sort(key=lambda w: (len(w), w))
    return out


def _pick(rng, mapping):
    keys = list(mapping)
    w = np.array([mapping[k] for k in keys], dtype=np.float64)
    return keys[int(rng.choice(len(keys), p=w / w.sum()))]


def _sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


def make_synthetic_dataset(n: int = 4732, seed: int = 0, vocab_size: int = 1500,
                           pool_ratio: float = 0.45) -> Dataset:
    """Generate ``n`` annotated phrase instances.

    ``pool_ratio`` sets how many distinct phrases exist per instance; phrases
    are reused across contexts the way recurring expressions are in news
    and encyclopedia text.
    """
    rng = rng_for(seed, "synthetic")
    vocab = _vocabulary(rng, vocab_size)
    ranks = np.arange(1, vocab_size + 1)
    zipf = 1.0 / ranks
    zipf /= zipf.sum()
    rarity = {w: r / vocab_size for w, r in zip(vocab, ranks)}

    cdfs = {}

    def sample_word(hardness):
        # hardness in [0, 1] tilts sampling toward rarer words
        if hardness not in cdfs:
            p = zipf ** (1.0 - 0.7 * hardness)
            cdfs[hardness] = np.cumsum(p / p.sum())
        k = int(np.searchsorted(cdfs[hardness], rng.random(), side="right"))
        return vocab[min(k, vocab_size - 1)]

    pools: dict[MweType, list[tuple[str, ...]]] = {t: [] for t in MweType}
    total_w = sum(TYPE_WEIGHTS.values())

    def phrase_for(t):
        pool = pools[t]
        target = max(1, int(pool_ratio * n * TYPE_WEIGHTS[t] / total_w))
        if pool and (len(pool) >= target or rng.random() < 0.4):
            return pool[int(rng.integers(len(pool)))]
        if t in (MweType.NOT_MWE, MweType.NOT_MWE_CONTAINS_MWE):
            length = 2 + int(rng.integers(0, 4))
        else:
            length = 2 + int(rng.random() < 0.25)
        hard = {MweType.MW_COMPOUND: 0.8, MweType.FIXED_PHRASE: 0.7,
                MweType.VERB_PARTICLE: 0.6}.get(t, 0.35)
        words = tuple(sample_word(hard) for _ in range(length))
        if t is MweType.NOT_MWE_CONTAINS_MWE and pools[MweType.MW_COMPOUND]:
            inner = pools[MweType.MW_COMPOUND][int(rng.integers(len(pools[MweType.MW_COMPOUND])))]
            words = (sample_word(0.3),) + inner
        if len(" ".join(words)) > 50:
            words = words[:2]
        pool.append(words)
        return words

    instances = []
    counters = {}
    for _ in range(n):
        t = _pick(rng, TYPE_WEIGHTS)
        genre = _pick(rng, GENRE_WEIGHTS)
        split = _pick(rng, SPLIT_WEIGHTS)
        words = phrase_for(t)
        phrase = " ".join(words)
        if len(phrase) > 50:
            words = words[:2]
            phrase = " ".join(words)

        left = [sample_word(0.1) for _ in range(int(rng.integers(3, 9)))]
        right = [sample_word(0.1) for _ in range(int(rng.integers(3, 9)))]
        prefix = " ".join(left).capitalize() + " "
        sentence = prefix + phrase + " " + " ".join(right) + "."
        start = len(prefix)
        end = start + len(phrase)

        rare = float(np.mean([rarity[w] for w in words]))
        longest = max(len(w) for w in words)
        z = (BASE_LOGIT + TYPE_EFFECT[t] + GENRE_EFFECT[genre] + 2.2 * rare
             + 0.08 * (longest - 6) + 0.12 * (len(words) - 2)
             + float(rng.normal(0.0, 0.35)))
        p_native = _sigmoid(z + 0.2 * (t is MweType.MW_COMPOUND))
        p_non = _sigmoid(z - 0.35 + 0.9 * rare - 0.25 * (len(words) - 2)
                         + 0.5 * (t in (MweType.VERB_PARTICLE, MweType.VERB_PREPOSITION)))
        native = int(rng.binomial(10, min(p_native, 0.95)))
        non = int(rng.binomial(10, min(p_non, 0.8)))
        marked = native + non

        key = (genre, split)
        counters[key] = counters.get(key, 0) + 1
        instances.append(AnnotatedInstance(
            id=f"{genre.value}_{split.value}_{counters[key]:05d}",
            genre=genre, split=split, sentence=sentence, start=start, end=end,
            phrase=phrase, native_seen=10, nonnative_seen=10,
            native_marked=native, nonnative_marked=non,
            binary=int(marked > 0), prob=marked / 20, mwe_type=t,
        ))
    return Dataset(tuple(instances), {"synthetic_seed": seed, "n": n})


def make_synthetic_records(d: Dataset, rounds=(100, 200, 300, 400), seed: int = 0,
                           noise: float = 0.15, annotators=("A1", "A2", "A3")
                           ) -> list[AnnotationRecord]:
    """Three-annotator labels for consecutive chunks of ``d``.

    Each annotator copies the gold label, except with probability ``noise``
    when they pick a uniformly random type.
    """
    rng = rng_for(seed, "synthetic")
    types = list(MweType)
    records = []
    pos = 0
    for rnd, size in enumerate(rounds, start=1):
        for inst in d.instances[pos:pos + size]:
            for ann in annotators:
                label = inst.mwe_type
                if rng.random() < noise:
                    label = types[int(rng.integers(len(types)))]
                records.append(AnnotationRecord(inst.id, ann, rnd, label))
        pos += size
    return records


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    ap.add_argument("-n", type=int, default=4732)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    d = make_synthetic_dataset(args.n, args.seed)
    save_dataset(d, args.outdir / "instances.tsv", args.outdir / "mwe_labels.tsv")
    save_records(make_synthetic_records(d, seed=args.seed), args.outdir / "records.tsv")
    print(f"wrote {len(d)} instances to {args.outdir}", file=sys.stderr)


if __name__ == "__main__":
    main()
