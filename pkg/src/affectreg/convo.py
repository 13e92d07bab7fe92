"""Turn-level features for conversations.

A turn is described by three equal-length blocks: the speaker's essay, the
turn text itself, and the centroid of every earlier turn in the same
conversation (zeros for the first turn).
"""

from __future__ import annotations

from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .corpus import DataError, TurnSample, group_conversations
from .neural import DropoutSpec, FfnModel, TrainConfig, train

ADAPTATION_TARGETS = ("empathy", "emotion_polarity", "emotion_intensity")
ADAPTATION_LR = {"empathy": 1e-5, "emotion_polarity": 2e-5, "emotion_intensity": 2e-5}

# maps a list of texts to an (n, block_length) matrix
Featurizer = Callable[[Sequence[str]], np.ndarray]


def centroid(blocks, length: Optional[int] = None) -> np.ndarray:
    """Componentwise mean of equal-length vectors; zeros for an empty list."""
    blocks = [np.asarray(b, dtype=np.float64) for b in blocks]
    if not blocks:
        if length is None:
            raise ValueError("length is required for an empty centroid")
        return np.zeros(length)
    first = blocks[0].shape
    if any(b.shape != first for b in blocks):
        raise ValueError("centroid of vectors with different lengths")
    return np.mean(blocks, axis=0)


class ConversationContext:
    """Running centroid of the blocks seen so far in one conversation."""

    def __init__(self, length: int):
        self.length = length
        self.blocks: list = []
        self.speakers: list = []
        self._mean = np.zeros(length)

    def centroid(self) -> np.ndarray:
        return self._mean.copy()

    def speaker_centroid(self, speaker, same=True) -> np.ndarray:
        chosen = [b for b, s in zip(self.blocks, self.speakers) if (s == speaker) == same]
        return centroid(chosen, self.length)

    def add(self, block, speaker=None) -> None:
        block = np.asarray(block, dtype=np.float64)
        if block.shape != (self.length,):
            raise ValueError(f"block length {block.shape} != {self.length}")
        k = len(self.blocks)
        self._mean = (k * self._mean + block) / (k + 1)
        self.blocks.append(block)
        self.speakers.append(speaker)


def build_turn_features(
    conversation: Sequence[TurnSample],
    featurizer: Featurizer,
    two_centroids: bool = False,
) -> np.ndarray:
    """One row per turn: essay block, turn block, context block(s).

    With ``two_centroids`` the context is split into the current speaker's
    earlier turns and the other speaker's earlier turns.
    """
    turns = list(conversation)
    if any(a.turn_index >= b.turn_index for a, b in zip(turns, turns[1:])):
        raise ValueError("turns must be sorted by strictly increasing turn_index")
    if not turns:
        return np.zeros((0, 0))
    for t in turns:
        if not t.essay_text.strip():
            raise DataError(
                f"conversation {t.conversation_id!r} turn {t.turn_index}: "
                f"no essay for speaker {t.speaker_id!r}"
            )
    turn_blocks = np.asarray(featurizer([t.text for t in turns]), dtype=np.float64)
    essay_blocks = np.asarray(featurizer([t.essay_text for t in turns]), dtype=np.float64)
    length = turn_blocks.shape[1]
    if essay_blocks.shape[1] != length:
        raise ValueError("featurizer returned blocks of different lengths")

    ctx = ConversationContext(length)
    rows = []
    for t, essay, block in zip(turns, essay_blocks, turn_blocks):
        if two_centroids:
            context = [ctx.speaker_centroid(t.speaker_id, True),
                       ctx.speaker_centroid(t.speaker_id, False)]
        else:
            context = [ctx.centroid()]
        rows.append(np.concatenate([essay, block, *context]))
        ctx.add(block, t.speaker_id)
    return np.vstack(rows)


def build_dataset_features(turns: Sequence[TurnSample], featurizer: Featurizer,
                           two_centroids: bool = False) -> np.ndarray:
    """Features for every turn, rows aligned with ``turns``' order."""
    position = {(t.conversation_id, t.turn_index): i for i, t in enumerate(turns)}
    out = None
    for conv in group_conversations(turns).values():
        feats = build_turn_features(conv, featurizer, two_centroids)
        if out is None:
            out = np.zeros((len(turns), feats.shape[1]))
        for t, row in zip(conv, feats):
            out[position[(t.conversation_id, t.turn_index)]] = row
    return out if out is not None else np.zeros((0, 0))


def adaptation_configs(epochs: int = 100, seed: int = 0, **overrides) -> dict:
    return {
        target: TrainConfig(learning_rate=lr, min_lr=1e-6, epochs=epochs, seed=seed, **overrides)
        for target, lr in ADAPTATION_LR.items()
    }


def train_adaptation(
    x_train,
    y_train: Mapping[str, np.ndarray],
    x_dev,
    y_dev: Mapping[str, np.ndarray],
    configs: Optional[Mapping[str, TrainConfig]] = None,
    hidden=(256, 128),
    dropout: Optional[DropoutSpec] = None,
    seed: int = 0,
) -> dict:
    """Train one network per adaptation target on the full training set.

    The dev set is only used to pick the best epoch. Returns
    ``{target: (model, trace)}``.
    """
    configs = dict(configs or adaptation_configs(seed=seed))
    x_train = np.asarray(x_train, dtype=np.float64)
    out = {}
    for target in ADAPTATION_TARGETS:
        spec = DropoutSpec(**vars(dropout)) if dropout else DropoutSpec(mode="adaptive", p=0.5)
        model = FfnModel.create(x_train.shape[1], hidden, "gelu", spec, seed=seed)
        out[target] = train(model, x_train, y_train[target], x_dev, y_dev[target], configs[target])
    return out
