"""Seeded toy corpora and lexicons for tests and demos.

Targets are affine functions of the hash-embedder vector of each text, so a
model that sees those embeddings can recover them almost exactly. Nothing
here resembles real annotations.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import SCALES, EssaySample, TurnSample, write_essays, write_turns
from .embed import HashEmbeddingProvider

TOY_NRC = """\
# toy NRC word-emotion file
abandon\tanger\t0
abandon\tfear\t1
abandon\tnegative\t1
abandon\tsadness\t1
happy\tjoy\t1
happy\tpositive\t1
happy\ttrust\t1
sad\tsadness\t1
sad\tnegative\t1
run\tanticipation\t1
help\tpositive\t1
help\ttrust\t1
"""

TOY_MPQA = """\
type=strongsubj len=1 word1=abandon pos1=verb stemmed1=y priorpolarity=negative
type=weaksubj len=1 word1=help pos1=verb stemmed1=y priorpolarity=positive
type=weaksubj len=1 word1=help pos1=anypos stemmed1=y priorpolarity=positive
type=strongsubj len=1 word1=good pos1=adj stemmed1=n priorpolarity=positive
type=strongsubj len=1 word1=sad pos1=adj stemmed1=n priorpolarity=negative
type=weaksubj len=1 word1=feel pos1=verb stemmed1=y priorpolarity=neutral
type=weaksubj len=1 word1=really pos1=adverb stemmed1=n priorpolarity=both
"""

TOY_VAD = """\
Word\tValence\tArousal\tDominance
happy\t1.000\t0.735\t0.772
sad\t0.225\t0.333\t0.149
dog\t0.750\t0.510\t0.500
run\t0.542\t0.740\t0.618
"""

TOY_SHIFTERS = """\
abandon,shifter
help,nonshifter
lack,shifter
"""

VOCABULARY = ("abandon happy sad run help good feel really dog lack the people news story "
              "family children water storm city lost home hope worried afraid").split()


def write_toy_lexicons(directory) -> dict:
    """Write the four toy lexicon files; returns paths keyed like ``load_lexicons``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {}
    for key, text in (("nrc", TOY_NRC), ("mpqa", TOY_MPQA), ("vad", TOY_VAD), ("shifters", TOY_SHIFTERS)):
        paths[key] = d / f"{key}.txt"
        paths[key].write_text(text, encoding="utf-8")
    return paths


def random_texts(n, seed=0, min_words=6, max_words=18) -> list:
    rng = np.random.default_rng(seed)
    texts = []
    for i in range(n):
        words = rng.choice(VOCABULARY, size=int(rng.integers(min_words, max_words + 1)))
        # the trailing tag keeps every text distinct
        texts.append(" ".join(words) + f" item{seed}x{i}.")
    return texts


def _affine(vectors, rng, scale):
    """Map ``w . v`` onto ``scale``; hash vectors lie in [-1, 1] so the bound is ``|w|_1``."""
    w = rng.normal(size=vectors.shape[1])
    s = vectors @ w / np.abs(w).sum()
    lo, hi = scale
    return (lo + hi) / 2 + (hi - lo) / 2 * s


def linear_essays(n, dimension=16, seed=0, embed_seed=0, first_id=0) -> list:
    """Essays whose empathy and distress are affine in their hash embedding.

    ``embed_seed`` must match the seed of the hash provider the pipeline uses.
    """
    texts = random_texts(n, seed)
    vectors = HashEmbeddingProvider(dimension, embed_seed).embed_batch(texts)
    rng = np.random.default_rng(10_000 + embed_seed)  # same target weights for every split
    empathy = _affine(vectors, rng, SCALES["empathy"])
    distress = _affine(vectors, rng, SCALES["distress"])
    return [EssaySample(f"m{first_id + i}", t, float(e), float(d))
            for i, (t, e, d) in enumerate(zip(texts, empathy, distress))]


def linear_conversations(n_conversations, turns=6, dimension=16, seed=0, embed_seed=0) -> list:
    """Conversations whose turn targets are affine in the turn's hash embedding."""
    rng_text = np.random.default_rng(seed)
    out = []
    for c in range(n_conversations):
        texts = random_texts(turns + 2, seed=int(rng_text.integers(2**31)))
        essays = {"A": texts[-2], "B": texts[-1]}
        vectors = HashEmbeddingProvider(dimension, embed_seed).embed_batch(texts[:turns])
        rng = np.random.default_rng(20_000 + embed_seed)
        emp = _affine(vectors, rng, SCALES["turn_empathy"])
        pol = _affine(vectors, rng, SCALES["emotion_polarity"])
        inten = _affine(vectors, rng, SCALES["emotion_intensity"])
        for i in range(turns):
            speaker = "A" if i % 2 == 0 else "B"
            out.append(TurnSample(f"s{seed}c{c}", i, speaker, texts[i], essays[speaker],
                                  float(emp[i]), float(pol[i]), float(inten[i])))
    return out


def write_primary_corpus(directory, n_train=300, n_dev=80, n_test=80, dimension=16, embed_seed=0) -> dict:
    """Write train/dev/test essay files (the test file has no gold columns)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {}
    offset = 0
    for name, n, seed in (("train", n_train, 1), ("dev", n_dev, 2), ("test", n_test, 3)):
        samples = linear_essays(n, dimension, seed, embed_seed, first_id=offset)
        offset += n
        paths[name] = d / f"{name}.tsv"
        if name == "test":
            samples = [EssaySample(s.id, s.essay) for s in samples]
        write_essays(paths[name], samples)
    return paths


def write_conversation_corpus(directory, n_train=30, n_dev=8, n_test=8, turns=6, dimension=16,
                              embed_seed=0) -> dict:
    """Write train/dev/test turn files (the test file has no gold columns)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, n, seed in (("train", n_train, 1), ("dev", n_dev, 2), ("test", n_test, 3)):
        samples = linear_conversations(n, turns, dimension, seed, embed_seed)
        if name == "test":
            samples = [TurnSample(t.conversation_id, t.turn_index, t.speaker_id, t.text, t.essay_text)
                       for t in samples]
        paths[name] = d / f"{name}.tsv"
        write_turns(paths[name], samples)
    return paths
