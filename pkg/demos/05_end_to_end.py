"""
The whole pipeline through the command-line entry point
=======================================================

A synthetic corpus whose scores are linear in the deterministic hash
embedding; featurize, train (ensemble), predict the dev split and score it.
"""

import json
import tempfile
from pathlib import Path

from affectreg import cli
from affectreg.synthetic import write_primary_corpus, write_toy_lexicons

root = Path(tempfile.mkdtemp())
data = write_primary_corpus(root / "data", n_train=300, n_dev=80, n_test=60)
lex = write_toy_lexicons(root / "lexicons")

config = {
    "seed": 1,
    "output_dir": "runs",
    "data": {k: str(v.relative_to(root)) for k, v in data.items()},
    "lexicons": {k: str(v.relative_to(root)) for k, v in lex.items()},
    "embedding": {"provider": "hash", "dimension": 16, "cache": "embeddings.cache"},
    "model": {"kind": "ensemble", "hidden": [64, 32]},
    "train": {"learning_rate": 3e-3, "min_lr": 1e-5, "epochs": 60, "batch_size": 32},
}
(root / "config.json").write_text(json.dumps(config, indent=2))
cfg = str(root / "config.json")

cli.run(["featurize", "-c", cfg])
cli.run(["train", "-c", cfg])
run_dir = next((root / "runs").glob("run_*"))
print(sorted(p.name for p in run_dir.iterdir()))

cli.run(["predict", "-c", cfg, str(run_dir), str(data["test"])])  # -> predictions_EMP.tsv
cli.run(["predict", "-c", cfg, str(run_dir), str(data["dev"]), "-o", str(root / "dev.tsv")])
cli.run(["evaluate", "-c", cfg, str(root / "dev.tsv"), str(data["dev"])])
