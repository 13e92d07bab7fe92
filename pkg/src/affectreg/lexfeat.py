"""Word-level lexicon features.

Four resources feed a fixed 48-value vector per text:

* NRC emotion lexicon: counts of the 8 basic emotions plus 2 polarities,
  followed by the same 10 counts divided by token count (20 values)
* MPQA subjectivity lexicon: 12 category counts then 12 ratios (24 values)
* NRC VAD lexicon: mean valence, arousal, dominance over hits (3 values)
* verbal polarity shifters: number of shifter tokens (1 value)
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

NRC_CATEGORIES = (
    "anger", "anticipation", "disgust", "fear", "joy",
    "sadness", "surprise", "trust", "positive", "negative",
)
MPQA_CATEGORIES = (
    "strongsubj", "weaksubj", "positive", "negative", "neutral", "both",
    "adj", "adverb", "noun", "verb", "anypos", "any",
)
VAD_DIMENSIONS = ("valence", "arousal", "dominance")

FEATURE_NAMES = (
    tuple(f"nrc_{c}_count" for c in NRC_CATEGORIES)
    + tuple(f"nrc_{c}_ratio" for c in NRC_CATEGORIES)
    + tuple(f"mpqa_{c}_count" for c in MPQA_CATEGORIES)
    + tuple(f"mpqa_{c}_ratio" for c in MPQA_CATEGORIES)
    + tuple(f"vad_{d}_mean" for d in VAD_DIMENSIONS)
    + ("shifter_count",)
)
N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 48

STD_FLOOR = 1e-8
CLAMP = 3.0

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# MPQA spellings seen across releases
_MPQA_POLARITY = {
    "positive": "positive", "negative": "negative", "neutral": "neutral",
    "both": "both", "weakpos": "positive", "weakneg": "negative",
    "strongpos": "positive", "strongneg": "negative",
}
_MPQA_POS = {
    "adj": "adj", "adjective": "adj", "adverb": "adverb", "noun": "noun",
    "verb": "verb", "anypos": "anypos",
}


@dataclass(frozen=True)
class MpqaEntry:
    subjectivity: str  # "strongsubj" or "weaksubj"
    polarity: str
    pos: str


@dataclass(frozen=True)
class LexiconSet:
    nrc_emotion: Mapping[str, frozenset] = field(default_factory=dict)
    mpqa: Mapping[str, MpqaEntry] = field(default_factory=dict)
    vad: Mapping[str, tuple] = field(default_factory=dict)
    shifters: Mapping[str, bool] = field(default_factory=dict)

    def __contains__(self, word):
        return (
            word in self.nrc_emotion or word in self.mpqa
            or word in self.vad or word in self.shifters
        )

    def sizes(self) -> dict:
        return {
            "nrc_emotion": len(self.nrc_emotion), "mpqa": len(self.mpqa),
            "vad": len(self.vad), "shifters": len(self.shifters),
        }


def _data_lines(path):
    with Path(path).open(encoding="utf-8", errors="replace") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                yield line


def load_nrc_emotion(path) -> dict[str, frozenset]:
    """Read the word-level NRC file (``word<TAB>category<TAB>0|1``)."""
    assoc: dict[str, set] = {}
    for line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 3 or parts[2] not in ("0", "1"):
            continue
        word, category, flag = parts
        entry = assoc.setdefault(word.lower(), set())
        if flag == "1" and category in NRC_CATEGORIES:
            entry.add(category)
    return {w: frozenset(c) for w, c in assoc.items()}


def load_mpqa(path) -> dict[str, MpqaEntry]:
    """Read the MPQA ``key=value`` clue file.

    A word listed more than once keeps its ``anypos`` entry when one
    exists, otherwise its first entry in file order.
    """
    entries: dict[str, MpqaEntry] = {}
    duplicates = set()
    for line in _data_lines(path):
        fields_ = dict(kv.split("=", 1) for kv in line.split() if "=" in kv)
        word = fields_.get("word1")
        subj = fields_.get("type")
        polarity = _MPQA_POLARITY.get(fields_.get("priorpolarity", ""))
        pos = _MPQA_POS.get(fields_.get("pos1", ""))
        if not word or subj not in ("strongsubj", "weaksubj") or polarity is None or pos is None:
            continue
        word = word.lower()
        entry = MpqaEntry(subj, polarity, pos)
        if word in entries:
            duplicates.add(word)
            if pos == "anypos" and entries[word].pos != "anypos":
                entries[word] = entry
        else:
            entries[word] = entry
    for word in sorted(duplicates):
        logger.debug("mpqa: multiple entries for %r, kept %s", word, entries[word])
    return entries


def load_vad(path) -> dict[str, tuple]:
    """Read ``word<TAB>valence<TAB>arousal<TAB>dominance``; a header row is skipped."""
    vad = {}
    for line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 4:
            continue
        try:
            values = tuple(float(p) for p in parts[1:])
        except ValueError:
            continue  # header
        vad[parts[0].lower()] = values
    return vad


def load_shifters(path) -> dict[str, bool]:
    """Read ``lemma,label`` (comma or tab separated); label ``shifter`` marks a shifter."""
    shifters = {}
    for line in _data_lines(path):
        parts = re.split(r"[,\t]", line)
        if len(parts) < 2:
            continue
        lemma, label = parts[0].strip().lower(), parts[1].strip().lower()
        if label in ("shifter", "yes", "true", "1"):
            shifters[lemma] = True
        elif label in ("nonshifter", "non-shifter", "no", "false", "0"):
            shifters[lemma] = False
    return shifters


def load_lexicons(nrc=None, mpqa=None, vad=None, shifters=None) -> LexiconSet:
    lex = LexiconSet(
        nrc_emotion=load_nrc_emotion(nrc) if nrc else {},
        mpqa=load_mpqa(mpqa) if mpqa else {},
        vad=load_vad(vad) if vad else {},
        shifters=load_shifters(shifters) if shifters else {},
    )
    for name, size in lex.sizes().items():
        logger.info("lexicon %s: %d entries", name, size)
    return lex


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; punctuation and apostrophes act as separators."""
    return _TOKEN_RE.findall(text.lower())


def _candidates(token):
    # rule order: plural -s, plural -es/-ies, -ing, -ed
    out = []
    if token.endswith("s") and not token.endswith("ss") and len(token) > 3:
        out.append(token[:-1])
    if token.endswith("ies") and len(token) > 4:
        out.append(token[:-3] + "y")
    if token.endswith("es") and len(token) > 3:
        out.append(token[:-2])
    for suffix in ("ing", "ed"):
        if token.endswith(suffix) and len(token) > len(suffix) + 2:
            stem = token[: -len(suffix)]
            if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in "aeiouls":
                out.append(stem[:-1])
            out.append(stem)
            out.append(stem + "e")
    return out


def lemmatize(token: str, vocabulary=None) -> str:
    """Suffix-stripping lemmatizer.

    With a vocabulary (any container, e.g. a ``LexiconSet``) the first rule
    candidate present in it wins and the token itself is kept when it is
    already a member or nothing matches. Without one, the first candidate
    the rules produce is returned.
    """
    candidates = _candidates(token)
    if vocabulary is None:
        return candidates[0] if candidates else token
    if token in vocabulary:
        return token
    for cand in candidates:
        if cand in vocabulary:
            return cand
    return token


def lemmas(text: str, lex: LexiconSet) -> list[str]:
    return [lemmatize(t, lex) for t in tokenize(text)]


def extract_nrc(tokens: Sequence[str], lex: LexiconSet) -> np.ndarray:
    counts = np.zeros(len(NRC_CATEGORIES))
    index = {c: i for i, c in enumerate(NRC_CATEGORIES)}
    for tok in tokens:
        for cat in lex.nrc_emotion.get(tok, ()):
            counts[index[cat]] += 1
    return np.concatenate([counts, _ratios(counts, len(tokens))])


def extract_mpqa(tokens: Sequence[str], lex: LexiconSet) -> np.ndarray:
    counts = np.zeros(len(MPQA_CATEGORIES))
    index = {c: i for i, c in enumerate(MPQA_CATEGORIES)}
    for tok in tokens:
        entry = lex.mpqa.get(tok)
        if entry is None:
            continue
        counts[index[entry.subjectivity]] += 1
        counts[index[entry.polarity]] += 1
        counts[index[entry.pos]] += 1
        counts[index["any"]] += 1
    return np.concatenate([counts, _ratios(counts, len(tokens))])


def extract_vad(tokens: Sequence[str], lex: LexiconSet) -> np.ndarray:
    hits = [lex.vad[t] for t in tokens if t in lex.vad]
    if not hits:
        return np.zeros(3)
    # fsum is correctly rounded, so the mean does not depend on token order
    return np.array([math.fsum(col) / len(hits) for col in zip(*hits)])


def extract_shifters(tokens: Sequence[str], lex: LexiconSet) -> np.ndarray:
    return np.array([float(sum(1 for t in tokens if lex.shifters.get(t, False)))])


def _ratios(counts, n_tokens):
    if n_tokens == 0:
        return np.zeros_like(counts)
    return counts / n_tokens


def extract_tokens(tokens: Sequence[str], lex: LexiconSet) -> np.ndarray:
    """48 features from an already lemmatized token list."""
    return np.concatenate([
        extract_nrc(tokens, lex),
        extract_mpqa(tokens, lex),
        extract_vad(tokens, lex),
        extract_shifters(tokens, lex),
    ])


def extract_all(text: str, lex: LexiconSet) -> np.ndarray:
    return extract_tokens(lemmas(text, lex), lex)


def extract_batch(texts: Iterable[str], lex: LexiconSet) -> np.ndarray:
    rows = [extract_all(t, lex) for t in texts]
    return np.vstack(rows) if rows else np.zeros((0, N_FEATURES))


@dataclass
class FeatureScaler:
    """Training-set standardization followed by clamp-and-rescale to [-1, 1]."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, vectors) -> "FeatureScaler":
        x = np.asarray(vectors, dtype=float)
        if x.ndim != 2 or x.shape[0] < 2:
            raise ValueError("fitting a scaler needs at least 2 training vectors")
        return cls(mean=x.mean(axis=0), std=np.maximum(x.std(axis=0), STD_FLOOR))

    def transform(self, vectors) -> np.ndarray:
        z = (np.asarray(vectors, dtype=float) - self.mean) / self.std
        return np.clip(z, -CLAMP, CLAMP) / CLAMP


def fit_scaler(train_vectors) -> FeatureScaler:
    return FeatureScaler.fit(train_vectors)


def apply_scaler(scaler: FeatureScaler, vectors) -> np.ndarray:
    return scaler.transform(vectors)


def features_markdown() -> str:
    """Markdown table documenting the feature order."""
    lines = [
        "# Lexicon features",
        "",
        f"Schema version {SCHEMA_VERSION}. Ratios divide a count by the text's token count.",
        "",
        "| # | name |",
        "|---|------|",
    ]
    lines += [f"| {i} | {name} |" for i, name in enumerate(FEATURE_NAMES)]
    return "\n".join(lines) + "\n"
