"""Run configuration: a single JSON file, with command-line overrides on top.

Precedence, lowest to highest: built-in defaults, the config file,
``--set section.key=value`` flags, then dedicated flags such as ``--seed``.
API keys are never read from the config; see ``EMBED_API_KEY``.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

DEFAULTS = {
    "task": "primary",
    "seed": 0,
    "output_dir": "runs",
    "data": {
        "train": None,
        "dev": None,
        "test": None,
        "essay_layout": {},
        "turn_layout": {},
    },
    "lexicons": {
        "enabled": True,
        "nrc": None,
        "mpqa": None,
        "vad": None,
        "shifters": None,
    },
    "embedding": {
        "provider": "hash",  # hash | precomputed | remote
        "seed": 0,  # hash provider only; independent of the run seed
        "model": "text-embedding-ada-002",
        "dimension": 1536,
        "path": None,
        "cache": None,
        "batch_size": 16,
        "parallelism": 1,
        "max_tokens": 8191,
    },
    "model": {
        "kind": "ensemble",  # ffn | ensemble
        "activation": "gelu",
        "hidden": [256, 128],
        "dropout": {"mode": "adaptive", "p": 0.5, "eta": 0.01},
        "svr": {"C": 1.0, "epsilon": 0.1, "tolerance": 1e-3},
        "clip": None,
    },
    "train": {
        "learning_rate": 1e-4,
        "min_lr": 1e-6,
        "epochs": 200,
        "batch_size": 64,
        "weight_decay": 0.01,
        "factor": 0.8,
        "patience": 3,
    },
    "adaptation": {
        "learning_rates": {"empathy": 1e-5, "emotion_polarity": 2e-5, "emotion_intensity": 2e-5},
        "epochs": 100,
        "two_centroids": False,
    },
    "split": {
        "validation_fraction": 0.2,
        "stratify": "target",  # target | none | empathy | distress
        "bin_width": 1.0,
    },
    "submission": {
        "primary": "predictions_EMP.tsv",
        "adaptation": "predictions_CONV.tsv",
    },
}


class ConfigError(ValueError):
    pass


def _merge(base, update, path=""):
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict) and key not in ("essay_layout", "turn_layout"):
            _merge(base[key], value, where + ".")
        else:
            base[key] = value
    return base


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_override(config: dict, assignment: str) -> None:
    """Apply one ``a.b.c=value`` override; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    dotted, raw = assignment.split("=", 1)
    keys = dotted.strip().split(".")
    node = config
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"unknown config section {dotted!r}")
        node = node[k]
    free_form = keys[:-1] in (["data", "essay_layout"], ["data", "turn_layout"])
    if keys[-1] not in node and not free_form:
        raise ConfigError(f"unknown config key {dotted!r}")
    node[keys[-1]] = _parse_value(raw)


def load_config(source=None, overrides=(), **flags) -> dict:
    """Build a validated config from a JSON file path or a plain dict.

    Relative paths in a config file are taken relative to the file.
    """
    config = copy.deepcopy(DEFAULTS)
    if isinstance(source, dict):
        _merge(config, copy.deepcopy(source))
    elif source is not None:
        path = Path(source)
        try:
            _merge(config, json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        _resolve_paths(config, path.parent)
    for assignment in overrides:
        apply_override(config, assignment)
    for key, value in flags.items():
        if value is not None:
            config[key] = value
    validate(config)
    return config


def _resolve_paths(config, base_dir):
    def fix(section, key):
        value = section.get(key)
        if value and not Path(value).is_absolute():
            section[key] = str((base_dir / value).resolve())

    for key in ("train", "dev", "test"):
        fix(config["data"], key)
    for key in ("nrc", "mpqa", "vad", "shifters"):
        fix(config["lexicons"], key)
    fix(config["embedding"], "path")
    fix(config["embedding"], "cache")
    fix(config, "output_dir")


def validate(config: dict) -> None:
    if config["task"] not in ("primary", "adaptation"):
        raise ConfigError(f"task must be primary or adaptation, not {config['task']!r}")
    if not isinstance(config["seed"], int):
        raise ConfigError("seed must be an integer")
    if config["model"]["kind"] not in ("ffn", "ensemble"):
        raise ConfigError("model.kind must be ffn or ensemble")
    if config["embedding"]["provider"] not in ("hash", "precomputed", "remote"):
        raise ConfigError("embedding.provider must be hash, precomputed or remote")
    for key in ("train", "dev", "test"):
        p = config["data"][key]
        if p is not None and not Path(p).is_file():
            raise ConfigError(f"data.{key}: no such file {p}")
    if config["lexicons"]["enabled"]:
        for key in ("nrc", "mpqa", "vad", "shifters"):
            p = config["lexicons"][key]
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"lexicons.{key}: no such file {p}")


def dump_config(config: dict, path) -> None:
    Path(path).write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
