"""Dataset loading and stratified splitting.

Essay-level files carry one essay per row with optional empathy/distress
gold scores. Turn-level files carry one conversation turn per row with the
speaker's essay text attached.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

# Gold scale per target, inclusive.
SCALES = {
    "empathy": (1.0, 7.0),
    "distress": (1.0, 7.0),
    "turn_empathy": (0.0, 5.0),
    "emotion_polarity": (0.0, 2.0),
    "emotion_intensity": (0.0, 5.0),
}


class DataError(ValueError):
    """Raised for malformed or missing dataset content."""


@dataclass(frozen=True)
class EssayLayout:
    id: str = "message_id"
    essay: str = "essay"
    empathy: str = "empathy"
    distress: str = "distress"


@dataclass(frozen=True)
class TurnLayout:
    conversation_id: str = "conversation_id"
    turn_index: str = "turn_id"
    speaker_id: str = "speaker_id"
    text: str = "text"
    essay_text: str = "essay"
    empathy: str = "Empathy"
    emotion_polarity: str = "EmotionalPolarity"
    emotion_intensity: str = "Emotion"


@dataclass(frozen=True)
class EssaySample:
    id: str
    essay: str
    empathy: Optional[float] = None
    distress: Optional[float] = None

    def __post_init__(self):
        if not self.essay.strip():
            raise DataError(f"essay {self.id!r} is empty")
        for name in ("empathy", "distress"):
            _check_range(getattr(self, name), name, SCALES[name])

    def gold(self, target: str) -> Optional[float]:
        return getattr(self, target)


@dataclass(frozen=True)
class TurnSample:
    conversation_id: str
    turn_index: int
    speaker_id: str
    text: str
    essay_text: str = ""
    empathy: Optional[float] = None
    emotion_polarity: Optional[float] = None
    emotion_intensity: Optional[float] = None

    def __post_init__(self):
        if self.turn_index < 0:
            raise DataError(f"negative turn index {self.turn_index}")
        _check_range(self.empathy, "empathy", SCALES["turn_empathy"])
        _check_range(self.emotion_polarity, "emotion_polarity", SCALES["emotion_polarity"])
        _check_range(self.emotion_intensity, "emotion_intensity", SCALES["emotion_intensity"])

    @property
    def id(self) -> str:
        return f"{self.conversation_id}:{self.turn_index}"

    def gold(self, target: str) -> Optional[float]:
        return getattr(self, target)


@dataclass(frozen=True)
class SplitSpec:
    validation_fraction: float = 0.2
    seed: int = 0
    stratify_target: str = "none"
    bin_width: float = 1.0
    scale: tuple = (1.0, 7.0)

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")


def _check_range(value, name, scale):
    if value is None:
        return
    lo, hi = scale
    if not (lo <= value <= hi):
        raise DataError(f"{name} value {value} outside [{lo}, {hi}]")


def _read_tsv(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = reader.fieldnames or []
        rows = list(reader)
    return header, rows


def _require_columns(header, columns, path):
    missing = [c for c in columns if c not in header]
    if missing:
        raise DataError(f"{path}: missing column(s) {missing}; header is {header}")


def _parse_gold(raw, column, row_number, scale):
    # row_number is 1-based counting the header as row 1
    if raw is None or raw.strip() == "":
        raise DataError(f"row {row_number}: empty value in column {column!r}")
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"row {row_number}: non-numeric {column!r} value {raw!r}") from None
    if not math.isfinite(value) or not scale[0] <= value <= scale[1]:
        raise DataError(
            f"row {row_number}: {column!r} value {value} outside [{scale[0]}, {scale[1]}]"
        )
    return value


def parse_essays(path, has_gold: bool, layout: EssayLayout = EssayLayout()) -> list[EssaySample]:
    """Read an essay-level TSV file.

    Rows without an id column get their 0-based row position as id.
    """
    header, rows = _read_tsv(path)
    required = [layout.essay]
    if has_gold:
        required += [layout.empathy, layout.distress]
    _require_columns(header, required, path)

    samples = []
    for i, row in enumerate(rows):
        row_number = i + 2
        essay = row.get(layout.essay) or ""
        if not essay.strip():
            raise DataError(f"row {row_number}: empty essay")
        sid = row.get(layout.id) if layout.id in header else str(i)
        empathy = distress = None
        if has_gold:
            empathy = _parse_gold(row[layout.empathy], layout.empathy, row_number, SCALES["empathy"])
            distress = _parse_gold(row[layout.distress], layout.distress, row_number, SCALES["distress"])
        samples.append(EssaySample(id=sid, essay=essay, empathy=empathy, distress=distress))
    return samples


def parse_turns(path, has_gold: bool, layout: TurnLayout = TurnLayout()) -> list[TurnSample]:
    """Read a turn-level TSV file, returned sorted by (conversation, turn)."""
    header, rows = _read_tsv(path)
    required = [layout.conversation_id, layout.turn_index, layout.speaker_id, layout.text]
    gold_cols = [
        ("empathy", layout.empathy, SCALES["turn_empathy"]),
        ("emotion_polarity", layout.emotion_polarity, SCALES["emotion_polarity"]),
        ("emotion_intensity", layout.emotion_intensity, SCALES["emotion_intensity"]),
    ]
    if has_gold:
        required += [col for _, col, _ in gold_cols]
    _require_columns(header, required, path)

    seen = {}
    samples = []
    for i, row in enumerate(rows):
        row_number = i + 2
        conv = row[layout.conversation_id]
        try:
            turn = int(row[layout.turn_index])
        except (TypeError, ValueError):
            raise DataError(
                f"row {row_number}: non-integer turn index {row[layout.turn_index]!r}"
            ) from None
        key = (conv, turn)
        if key in seen:
            raise DataError(
                f"row {row_number}: duplicate turn {turn} in conversation {conv!r} "
                f"(first seen at row {seen[key]})"
            )
        seen[key] = row_number
        gold = {}
        if has_gold:
            for name, col, scale in gold_cols:
                gold[name] = _parse_gold(row[col], col, row_number, scale)
        essay = row.get(layout.essay_text) or "" if layout.essay_text in header else ""
        samples.append(
            TurnSample(
                conversation_id=conv,
                turn_index=turn,
                speaker_id=row[layout.speaker_id],
                text=row[layout.text] or "",
                essay_text=essay,
                **gold,
            )
        )
    samples.sort(key=lambda s: (s.conversation_id, s.turn_index))
    return samples


def _clean(text):
    # tabs and newlines would break the row structure
    return " ".join(text.replace("\t", " ").splitlines())


def _write_tsv(path, header, rows):
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_clean(v) for v in row) + "\n")


def _fmt(value):
    return "" if value is None else repr(float(value))


def write_essays(path, samples: Sequence[EssaySample], layout: EssayLayout = EssayLayout()):
    has_gold = any(s.empathy is not None for s in samples)
    header = [layout.id, layout.essay]
    if has_gold:
        header += [layout.empathy, layout.distress]
    rows = []
    for s in samples:
        row = [s.id, s.essay]
        if has_gold:
            row += [_fmt(s.empathy), _fmt(s.distress)]
        rows.append(row)
    _write_tsv(path, header, rows)


def write_turns(path, samples: Sequence[TurnSample], layout: TurnLayout = TurnLayout()):
    has_gold = any(s.empathy is not None for s in samples)
    header = [layout.conversation_id, layout.turn_index, layout.speaker_id,
              layout.text, layout.essay_text]
    if has_gold:
        header += [layout.empathy, layout.emotion_polarity, layout.emotion_intensity]
    rows = []
    for s in samples:
        row = [s.conversation_id, str(s.turn_index), s.speaker_id, s.text, s.essay_text]
        if has_gold:
            row += [_fmt(s.empathy), _fmt(s.emotion_polarity), _fmt(s.emotion_intensity)]
        rows.append(row)
    _write_tsv(path, header, rows)


def bin_target(value: float, bin_width: float = 1.0, scale=(1.0, 7.0)) -> int:
    """Map a continuous score to a bin index; the top edge joins the last bin."""
    lo, hi = scale
    if not lo <= value <= hi:
        raise ValueError(f"value {value} outside scale [{lo}, {hi}]")
    n_bins = max(1, math.ceil((hi - lo) / bin_width - 1e-12))
    return min(int(math.floor((value - lo) / bin_width)), n_bins - 1)


def split_indices(n: int, spec: SplitSpec, values=None) -> tuple[list, list]:
    """Index form of :func:`stratified_split`; ``values`` are the stratification scores."""
    rng = np.random.default_rng(spec.seed)
    if values is None:
        order = rng.permutation(n)
        n_val = int(round(spec.validation_fraction * n))
        val = set(order[:n_val].tolist())
        return [i for i in range(n) if i not in val], sorted(val)

    if len(values) != n:
        raise ValueError("one stratification value per sample is required")
    bins: dict[int, list[int]] = {}
    for i, v in enumerate(values):
        bins.setdefault(bin_target(v, spec.bin_width, spec.scale), []).append(i)

    train_counts = _apportion_train(
        {b: len(m) for b, m in bins.items()}, n - int(round(spec.validation_fraction * n))
    )
    val = set()
    for b in sorted(bins):
        members = bins[b]
        if len(members) == 1:
            warnings.warn(f"bin {b} has a single member; assigned to train", stacklevel=3)
            continue
        chosen = rng.permutation(len(members))[: len(members) - train_counts[b]]
        val.update(members[c] for c in chosen)
    return [i for i in range(n) if i not in val], sorted(val)


def _apportion_train(sizes: dict, n_train: int) -> dict:
    """Largest-remainder allocation of training seats to bins.

    Each bin receives floor or ceil of its exact share ``size * T / N``, so
    its training proportion stays within ``1 / T`` of its full-data
    proportion. Singleton bins must land in train; if they need more
    rounding-up than the remainder allows, ``T`` grows until they fit.
    """
    total = sum(sizes.values())
    order = sorted(sizes)
    for t in range(max(n_train, 1), total + 1):
        quota = {b: sizes[b] * t / total for b in order}
        counts = {b: int(math.floor(quota[b])) for b in order}
        spare = t - sum(counts.values())
        forced = [b for b in order if sizes[b] == 1 and counts[b] == 0]
        if len(forced) > spare:
            continue
        for b in forced:
            counts[b] = 1
        spare -= len(forced)
        rest = sorted((b for b in order if b not in forced and counts[b] < sizes[b]),
                      key=lambda b: (-(quota[b] - counts[b]), b))
        for b in rest[:spare]:
            counts[b] += 1
        return counts
    return dict(sizes)


def stratified_split(samples: Sequence, spec: SplitSpec) -> tuple[list, list]:
    """Split samples into (train, validation) preserving per-bin proportions.

    Each bin sends ``round(fraction * bin_size)`` members to validation,
    chosen by a seeded shuffle. A bin with a single member stays in train
    and a warning is emitted. ``stratify_target="none"`` falls back to a
    plain seeded shuffle split.
    """
    samples = list(samples)
    values = None
    if spec.stratify_target not in (None, "none"):
        values = []
        for s in samples:
            gold = s.gold(spec.stratify_target)
            if gold is None:
                raise DataError(
                    f"sample {s.id!r} has no {spec.stratify_target} value to stratify on"
                )
            values.append(gold)
    train_idx, val_idx = split_indices(len(samples), spec, values)
    return [samples[i] for i in train_idx], [samples[i] for i in val_idx]


def distribution_table(values, bin_width: float = 1.0, scale=(1.0, 7.0)) -> list[tuple]:
    """Rows of (bin index, lower edge, upper edge, count, proportion)."""
    lo, hi = scale
    n_bins = bin_target(hi, bin_width, scale) + 1
    counts = [0] * n_bins
    for v in values:
        counts[bin_target(v, bin_width, scale)] += 1
    total = max(len(values), 1)
    return [
        (b, lo + b * bin_width, min(lo + (b + 1) * bin_width, hi), c, c / total)
        for b, c in enumerate(counts)
    ]


def group_conversations(turns: Sequence[TurnSample]) -> dict[str, list[TurnSample]]:
    """Group turns by conversation id, each list ordered by turn index."""
    grouped: dict[str, list[TurnSample]] = {}
    for t in turns:
        grouped.setdefault(t.conversation_id, []).append(t)
    for conv in grouped.values():
        conv.sort(key=lambda t: t.turn_index)
    return grouped

