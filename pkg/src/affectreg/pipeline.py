"""End-to-end runs: featurize, train, predict, evaluate, analyze.

All functions take a config dict produced by :func:`affectreg.config.load_config`.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from . import lexfeat
from .config import dump_config
from .convo import ADAPTATION_TARGETS, build_dataset_features
from .corpus import (
    SCALES, DataError, EssayLayout, SplitSpec, TurnLayout, distribution_table,
    parse_essays, parse_turns, split_indices,
)
from .embed import (
    EmbeddingCache, HashEmbeddingProvider, PrecomputedProvider, RemoteProvider,
    assemble_features, embed_many,
)
from .ensemble import EnsembleModel
from .evaluation import evaluate as evaluate_predictions
from .neural import DropoutSpec, FfnModel, TrainConfig, train as train_ffn
from .svr import SvrConfig, fit as fit_svr, sample_weight

logger = logging.getLogger(__name__)

PRIMARY_TARGETS = ("empathy", "distress")
SPLITS = ("train", "dev", "test")


def targets_for(task: str) -> tuple:
    return PRIMARY_TARGETS if task == "primary" else ADAPTATION_TARGETS


def scale_for(task: str, target: str) -> tuple:
    if task == "primary":
        return SCALES[target]
    return SCALES["turn_empathy" if target == "empathy" else target]


def make_provider(config: dict):
    emb = config["embedding"]
    kind = emb["provider"]
    if kind == "hash":
        return HashEmbeddingProvider(emb["dimension"], seed=emb["seed"])
    if kind == "precomputed":
        return PrecomputedProvider.from_npz(emb["path"])
    return RemoteProvider(model=emb["model"], dimension=emb["dimension"],
                          max_tokens=emb["max_tokens"])


def make_lexicons(config: dict) -> Optional[lexfeat.LexiconSet]:
    lex = config["lexicons"]
    if not lex["enabled"]:
        return None
    return lexfeat.load_lexicons(lex["nrc"], lex["mpqa"], lex["vad"], lex["shifters"])


def read_split(config: dict, path, has_gold: bool):
    data = config["data"]
    if config["task"] == "primary":
        return parse_essays(path, has_gold, EssayLayout(**data["essay_layout"]))
    return parse_turns(path, has_gold, TurnLayout(**data["turn_layout"]))


def _has_gold_columns(config, path) -> bool:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
    if config["task"] == "primary":
        layout = EssayLayout(**config["data"]["essay_layout"])
        return layout.empathy in header and layout.distress in header
    layout = TurnLayout(**config["data"]["turn_layout"])
    return all(c in header for c in (layout.empathy, layout.emotion_polarity, layout.emotion_intensity))


class Featurizer:
    """Text -> embedding block, optionally followed by scaled lexicon features."""

    def __init__(self, config, provider=None, lexicons=None, scaler=None):
        self.config = config
        self.provider = provider or make_provider(config)
        self.lexicons = lexicons
        self.scaler = scaler
        cache_path = config["embedding"]["cache"]
        self.cache = EmbeddingCache(cache_path)
        self._lex_memo: dict = {}

    def raw_lexicon(self, texts) -> np.ndarray:
        rows = []
        for t in texts:
            if t not in self._lex_memo:
                self._lex_memo[t] = lexfeat.extract_all(t, self.lexicons)
            rows.append(self._lex_memo[t])
        return np.vstack(rows) if rows else np.zeros((0, lexfeat.N_FEATURES))

    def fit_scaler(self, texts) -> None:
        if self.lexicons is not None:
            self.scaler = lexfeat.fit_scaler(self.raw_lexicon(texts))

    def embeddings(self, texts) -> np.ndarray:
        emb = self.config["embedding"]
        return embed_many(self.provider, list(texts), self.cache,
                          batch_size=emb["batch_size"], parallelism=emb["parallelism"])

    def __call__(self, texts) -> np.ndarray:
        texts = list(texts)
        vectors = self.embeddings(texts)
        if self.lexicons is None:
            return assemble_features(vectors)
        if self.scaler is None:
            raise RuntimeError("lexicon scaler has not been fitted")
        return assemble_features(vectors, self.scaler.transform(self.raw_lexicon(texts)))

    @property
    def dimension(self) -> int:
        return self.provider.dimension + (lexfeat.N_FEATURES if self.lexicons is not None else 0)


def _texts_for_scaler(task, samples):
    if task == "primary":
        return [s.essay for s in samples]
    essays = list(dict.fromkeys(s.essay_text for s in samples if s.essay_text.strip()))
    return [s.text for s in samples] + essays


def featurize_samples(config, featurizer: Featurizer, samples) -> np.ndarray:
    if not samples:
        return np.zeros((0, featurizer.dimension * (1 if config["task"] == "primary" else 3)))
    if config["task"] == "primary":
        return featurizer([s.essay for s in samples])
    return build_dataset_features(samples, featurizer, config["adaptation"]["two_centroids"])


def save_scaler(scaler, path) -> None:
    np.savez(path, mean=scaler.mean, std=scaler.std)


def load_scaler(path) -> lexfeat.FeatureScaler:
    data = np.load(path)
    return lexfeat.FeatureScaler(data["mean"], data["std"])


def features_dir(config) -> Path:
    return Path(config["output_dir"]) / "features"


def featurize(config: dict, featurizer: Optional[Featurizer] = None) -> dict:
    """Write ``features/<split>.npz`` for every configured split.

    The lexicon scaler is fitted on the training split only. Returns the
    written paths keyed by split.
    """
    task = config["task"]
    out = features_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    if featurizer is None:
        featurizer = Featurizer(config, lexicons=make_lexicons(config))
    if config["data"]["train"] is None:
        raise DataError("data.train is required for featurize")

    splits = {}
    for name in SPLITS:
        path = config["data"][name]
        if path is not None:
            splits[name] = read_split(config, path, _has_gold_columns(config, path))

    if featurizer.lexicons is not None:
        featurizer.fit_scaler(_texts_for_scaler(task, splits["train"]))
        save_scaler(featurizer.scaler, out / "scaler.npz")
        (out / "features.md").write_text(lexfeat.features_markdown(), encoding="utf-8")

    written = {}
    for name, samples in splits.items():
        x = featurize_samples(config, featurizer, samples)
        arrays = {"ids": np.asarray([s.id for s in samples], dtype=str), "X": x}
        for target in targets_for(task):
            gold = [s.gold(target) for s in samples]
            if samples and all(g is not None for g in gold):
                arrays[f"gold_{target}"] = np.asarray(gold, dtype=np.float64)
        path = out / f"{name}.npz"
        np.savez(path, **arrays)
        written[name] = path
        if featurizer.lexicons is not None:
            texts = [s.essay if task == "primary" else s.text for s in samples]
            _write_lexicon_tsv(out / f"lexicon_{name}.tsv", arrays["ids"], featurizer.raw_lexicon(texts))
        logger.info("featurized %s: %s", name, x.shape)
    return written


def _write_lexicon_tsv(path, ids, matrix):
    lines = ["id\t" + "\t".join(lexfeat.FEATURE_NAMES)]
    for sid, row in zip(ids, matrix):
        lines.append(str(sid) + "\t" + "\t".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_features(path) -> dict:
    with np.load(path, allow_pickle=False) as data:
        return {k: data[k] for k in data.files}


def run_id(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def _train_config(config, **overrides) -> TrainConfig:
    fields = dict(config["train"])
    fields.update(overrides)
    fields.setdefault("seed", config["seed"])
    return TrainConfig(**fields)


def _new_model(config, input_dim) -> FfnModel:
    m = config["model"]
    return FfnModel.create(input_dim, tuple(m["hidden"]), m["activation"],
                           DropoutSpec(**m["dropout"]), seed=config["seed"])


def train(config: dict) -> Path:
    """Train all models for the configured task and return the run directory."""
    task = config["task"]
    feats_dir = features_dir(config)
    train_path = feats_dir / "train.npz"
    if not train_path.exists():
        raise DataError(f"{train_path} not found; run featurize first")
    data = load_features(train_path)
    x = data["X"]
    run_dir = Path(config["output_dir"]) / f"run_{run_id(config)}"
    run_dir.mkdir(parents=True, exist_ok=True)
    dump_config(config, run_dir / "config.json")
    scaler = None
    if (feats_dir / "scaler.npz").exists() and config["lexicons"]["enabled"]:
        scaler = load_scaler(feats_dir / "scaler.npz")
        save_scaler(scaler, run_dir / "scaler.npz")

    manifests = {}
    if task == "primary":
        split = config["split"]
        for target in PRIMARY_TARGETS:
            y = data[f"gold_{target}"]
            strat = split["stratify"]
            strat = target if strat == "target" else strat
            spec = SplitSpec(split["validation_fraction"], config["seed"], strat,
                             split["bin_width"], SCALES[target])
            values = None if strat == "none" else data[f"gold_{strat}"]
            tr, va = split_indices(len(y), spec, values)
            model, trace = train_ffn(_new_model(config, x.shape[1]), x[tr], y[tr], x[va], y[va],
                                     _train_config(config))
            manifests[target] = _save_members(config, run_dir, target, model, trace, scaler, x, y)
    else:
        dev_path = feats_dir / "dev.npz"
        if not dev_path.exists():
            raise DataError("adaptation training needs a dev split for checkpoint selection")
        dev = load_features(dev_path)
        ad = config["adaptation"]
        for target in ADAPTATION_TARGETS:
            cfg = _train_config(config, learning_rate=ad["learning_rates"][target], epochs=ad["epochs"])
            model, trace = train_ffn(_new_model(config, x.shape[1]), x, data[f"gold_{target}"],
                                     dev["X"], dev[f"gold_{target}"], cfg)
            manifests[target] = _save_members(config, run_dir, target, model, trace, scaler,
                                              x, data[f"gold_{target}"], allow_svr=False)

    run = {"task": task, "input_dim": int(x.shape[1]), "targets": manifests,
           "scaler": "scaler.npz" if scaler is not None else None}
    (run_dir / "run.json").write_text(json.dumps(run, indent=2) + "\n", encoding="utf-8")
    return run_dir


def _save_members(config, run_dir, target, model, trace, scaler, x, y, allow_svr=True):
    model.scaler = scaler
    ffn_path = run_dir / f"{target}_ffn.bin"
    model.save(ffn_path)
    trace.to_tsv(run_dir / f"{target}_trace.tsv")
    members, paths = [model], [ffn_path]
    if allow_svr and config["model"]["kind"] == "ensemble":
        lo, hi = scale_for(config["task"], target)
        weights = sample_weight(y, (lo + hi) / 2.0)
        svr = config["model"]["svr"]
        for kernel in ("poly3", "rbf"):
            cfg = SvrConfig(kernel=kernel, C=svr["C"], epsilon=svr["epsilon"], tolerance=svr["tolerance"])
            fitted = fit_svr(cfg, x, y, weights)
            path = run_dir / f"{target}_svr_{kernel}.bin"
            fitted.save(path)
            members.append(fitted)
            paths.append(path)
    clip = config["model"]["clip"]
    ensemble = EnsembleModel(members, target, tuple(clip) if clip else None)
    manifest = run_dir / f"{target}_manifest.json"
    ensemble.save_manifest(manifest, paths)
    return manifest.name


def predict(config: dict, run_dir, input_path, output=None, featurizer: Optional[Featurizer] = None) -> Path:
    """Write a headerless submission file, one row per input row, in input order."""
    run_dir = Path(run_dir)
    run = json.loads((run_dir / "run.json").read_text(encoding="utf-8"))
    task = run["task"]
    if task != config["task"]:
        raise DataError(f"run was trained for task {task!r}, config says {config['task']!r}")
    samples = read_split(config, input_path, has_gold=False)
    output = Path(output) if output else run_dir / config["submission"][task]
    if not samples:
        output.write_text("", encoding="utf-8")
        return output

    if featurizer is None:
        lexicons = make_lexicons(config) if run["scaler"] else None
        scaler = load_scaler(run_dir / run["scaler"]) if run["scaler"] else None
        featurizer = Featurizer(config, lexicons=lexicons, scaler=scaler)
    x = featurize_samples(config, featurizer, samples)
    if x.shape[1] != run["input_dim"]:
        raise DataError(f"feature dimension {x.shape[1]} does not match the model's {run['input_dim']}")

    columns = []
    for target in targets_for(task):
        ensemble = EnsembleModel.load_manifest(run_dir / run["targets"][target])
        columns.append(ensemble.predict(x))
    preds = np.column_stack(columns)
    output.write_text("".join("\t".join(repr(float(v)) for v in row) + "\n" for row in preds),
                      encoding="utf-8")
    return output


def read_prediction_file(path, n_columns=None) -> np.ndarray:
    rows = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split("\t")])
        except ValueError:
            raise DataError(f"{path} row {i}: non-numeric value") from None
    arr = np.asarray(rows, dtype=np.float64).reshape(len(rows), -1) if rows else np.zeros((0, n_columns or 0))
    if n_columns is not None and rows and arr.shape[1] != n_columns:
        raise DataError(f"{path}: expected {n_columns} columns, found {arr.shape[1]}")
    return arr


def read_gold(config: dict, path) -> tuple:
    """Target values as (ids, matrix) from a dataset file with a header or a headerless numeric file."""
    targets = targets_for(config["task"])
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline().rstrip("\n")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    try:
        [float(v) for v in first.split("\t")]
        numeric = True
    except ValueError:
        numeric = not first.strip()  # an empty file is an empty numeric table
    if numeric:
        arr = read_prediction_file(path, len(targets))
        return [str(i) for i in range(len(arr))], arr
    samples = read_split(config, path, has_gold=True)
    arr = np.asarray([[s.gold(t) for t in targets] for s in samples], dtype=np.float64)
    return [s.id for s in samples], arr.reshape(len(samples), len(targets))


def evaluate(config: dict, predictions, gold):
    """Build an evaluation report for aligned prediction and gold files.

    Either file may be a headerless numeric table or a dataset with gold columns.
    """
    task = config["task"]
    targets = targets_for(task)
    ids, g = read_gold(config, gold)
    _, p = read_gold(config, predictions)
    if len(p) != len(g):
        raise DataError(f"row count mismatch: {len(p)} predictions vs {len(g)} gold rows")
    midpoints = {t: sum(scale_for(task, t)) / 2.0 for t in targets}
    return evaluate_predictions(
        {t: g[:, i] for i, t in enumerate(targets)},
        {t: p[:, i] for i, t in enumerate(targets)},
        midpoints, ids,
    )


def describe_data(config: dict, path, bin_width: float = 1.0) -> str:
    """Per-target bin distribution of a gold-annotated dataset, as TSV."""
    task = config["task"]
    samples = read_split(config, path, has_gold=True)
    lines = ["target\tbin\tlower\tupper\tcount\tproportion"]
    for target in targets_for(task):
        values = [s.gold(target) for s in samples]
        for b, lo, hi, count, prop in distribution_table(values, bin_width, scale_for(task, target)):
            lines.append(f"{target}\t{b}\t{lo:g}\t{hi:g}\t{count}\t{prop:.4f}")
    return "\n".join(lines) + "\n"
