"""Equal-weight averaging over heterogeneous regressors."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .container import peek_tag
from .neural import FFN_TAG, FfnModel
from .svr import SVR_TAG, SvrModel

_LOADERS = {FFN_TAG: ("ffn", FfnModel.load), SVR_TAG: ("svr", SvrModel.load)}


@dataclass
class EnsembleModel:
    members: list
    target: str = "empathy"
    clip: Optional[tuple] = None
    weights: list = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        k = len(self.members)
        if not self.weights:
            self.weights = [1.0 / k] * k
        if len(self.weights) != k or not np.allclose(self.weights, 1.0 / k, rtol=0, atol=1e-12):
            raise ValueError("ensemble members must carry equal weights summing to 1")

    def member_predictions(self, features) -> np.ndarray:
        return np.vstack([np.asarray(m.predict(features), dtype=np.float64).ravel()
                          for m in self.members])

    def predict(self, features) -> np.ndarray:
        preds = self.member_predictions(features)
        out = np.asarray(self.weights) @ preds
        if self.clip is not None:
            out = np.clip(out, *self.clip)
        return out

    def save_manifest(self, path, member_paths) -> None:
        if len(member_paths) != len(self.members):
            raise ValueError("one path per member is required")
        root = Path(path).parent
        manifest = {
            "target": self.target,
            "clip": list(self.clip) if self.clip is not None else None,
            "members": [
                {"path": os.path.relpath(Path(p).resolve(), root.resolve()), "weight": w}
                for p, w in zip(member_paths, self.weights)
            ],
        }
        Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load_manifest(cls, path) -> "EnsembleModel":
        path = Path(path)
        manifest = json.loads(path.read_text(encoding="utf-8"))
        members, weights = [], []
        for entry in manifest["members"]:
            member_path = Path(entry["path"])
            if not member_path.is_absolute():
                member_path = path.parent / member_path
            _, loader = _LOADERS[peek_tag(member_path)]
            members.append(loader(member_path))
            weights.append(float(entry["weight"]))
        clip = tuple(manifest["clip"]) if manifest.get("clip") else None
        return cls(members, manifest.get("target", "empathy"), clip, weights)


def predict(ensemble: EnsembleModel, features) -> np.ndarray:
    return ensemble.predict(features)
