import json
from pathlib import Path

import numpy as np
import pytest

from affectreg import cli
from affectreg.config import ConfigError, load_config
from affectreg.synthetic import write_conversation_corpus, write_primary_corpus, write_toy_lexicons

FAST_TRAIN = {"learning_rate": 3e-3, "min_lr": 1e-5, "epochs": 8, "batch_size": 32}
SMALL_MODEL = {"hidden": [16, 8], "dropout": {"mode": "fixed", "p": 0.1}}


def make_config(tmp_path, task="primary", kind="ffn", lexicons=True, **extra):
    if task == "primary":
        data = write_primary_corpus(tmp_path / "data", n_train=60, n_dev=20, n_test=20)
    else:
        data = write_conversation_corpus(tmp_path / "data", n_train=6, n_dev=3, n_test=3, turns=4)
    lex = write_toy_lexicons(tmp_path / "lex")
    cfg = {
        "task": task,
        "output_dir": "out",
        "data": {k: str(v.relative_to(tmp_path)) for k, v in data.items()},
        "lexicons": {"enabled": lexicons, **{k: str(v.relative_to(tmp_path)) for k, v in lex.items()}},
        "embedding": {"dimension": 16, "cache": "cache.bin"},
        "model": {**SMALL_MODEL, "kind": kind},
        "train": FAST_TRAIN,
        "adaptation": {"epochs": 4},
    }
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def run(capsys, *argv):
    code = cli.run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def train_run(capsys, config):
    assert run(capsys, "featurize", "-c", config)[0] == 0
    code, out, _ = run(capsys, "train", "-c", config)
    assert code == 0
    return Path(out.strip())


class TestFeaturize:
    def test_shapes_and_files(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        code, out, _ = run(capsys, "featurize", "-c", cfg)
        assert code == 0 and "train" in out
        feats = tmp_path / "out" / "features"
        with np.load(feats / "train.npz") as d:
            assert d["X"].shape == (60, 16 + 48)
            assert "gold_empathy" in d.files
        with np.load(feats / "test.npz") as d:
            assert d["X"].shape == (20, 64) and "gold_empathy" not in d.files
        assert (feats / "scaler.npz").exists() and (feats / "features.md").exists()

    def test_warm_cache_is_byte_identical(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        run(capsys, "featurize", "-c", cfg)
        first = (tmp_path / "out/features/train.npz").read_bytes()
        cache_size = (tmp_path / "cache.bin").stat().st_size
        run(capsys, "featurize", "-c", cfg)
        assert (tmp_path / "out/features/train.npz").read_bytes() == first
        assert (tmp_path / "cache.bin").stat().st_size == cache_size

    def test_lexicons_off(self, tmp_path, capsys):
        cfg = make_config(tmp_path, lexicons=False)
        run(capsys, "featurize", "-c", cfg)
        with np.load(tmp_path / "out/features/train.npz") as d:
            assert d["X"].shape == (60, 16)

    def test_adaptation_width(self, tmp_path, capsys):
        cfg = make_config(tmp_path, task="adaptation")
        run(capsys, "featurize", "-c", cfg)
        with np.load(tmp_path / "out/features/train.npz") as d:
            assert d["X"].shape == (24, 3 * 64)


@pytest.mark.filterwarnings("ignore:bin .* single member")
class TestTrainPredict:
    def test_ffn_only(self, tmp_path, capsys):
        run_dir = train_run(capsys, make_config(tmp_path))
        assert sorted(p.name for p in run_dir.glob("empathy_*.bin")) == ["empathy_ffn.bin"]
        assert json.loads((run_dir / "config.json").read_text())["seed"] == 0

    def test_ensemble(self, tmp_path, capsys):
        run_dir = train_run(capsys, make_config(tmp_path, kind="ensemble"))
        models = sorted(p.name for p in run_dir.glob("distress_*.bin"))
        assert models == ["distress_ffn.bin", "distress_svr_poly3.bin", "distress_svr_rbf.bin"]
        manifest = json.loads((run_dir / "distress_manifest.json").read_text())
        assert [m["weight"] for m in manifest["members"]] == [pytest.approx(1 / 3)] * 3

    def test_predict_rows_and_order(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        run_dir = train_run(capsys, cfg)
        out = tmp_path / "pred.tsv"
        code, _, _ = run(capsys, "predict", "-c", cfg, run_dir, tmp_path / "data/test.tsv", "-o", out)
        assert code == 0
        rows = [line.split("\t") for line in out.read_text().splitlines()]
        assert len(rows) == 20 and all(len(r) == 2 for r in rows)
        # predicting a reversed file gives the reversed rows
        lines = (tmp_path / "data/test.tsv").read_text().splitlines()
        (tmp_path / "rev.tsv").write_text("\n".join([lines[0]] + lines[1:][::-1]) + "\n")
        run(capsys, "predict", "-c", cfg, run_dir, tmp_path / "rev.tsv", "-o", tmp_path / "rev_pred.tsv")
        assert (tmp_path / "rev_pred.tsv").read_text().splitlines() == out.read_text().splitlines()[::-1]

    def test_default_submission_name(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        run_dir = train_run(capsys, cfg)
        code, out, _ = run(capsys, "predict", "-c", cfg, run_dir, tmp_path / "data/test.tsv")
        assert code == 0 and out.strip().endswith("predictions_EMP.tsv")

    def test_empty_input(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        run_dir = train_run(capsys, cfg)
        (tmp_path / "empty.tsv").write_text("message_id\tessay\n")
        code, _, _ = run(capsys, "predict", "-c", cfg, run_dir, tmp_path / "empty.tsv", "-o", tmp_path / "e.tsv")
        assert code == 0 and (tmp_path / "e.tsv").read_text() == ""

    def test_dimension_mismatch(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        run_dir = train_run(capsys, cfg)
        code, _, err = run(capsys, "predict", "-c", cfg, "--set", "embedding.dimension=8",
                            run_dir, tmp_path / "data/test.tsv")
        assert code == 2 and "dimension" in err

    def test_same_config_same_artifacts(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        a = train_run(capsys, cfg)
        first = {p.name: p.read_bytes() for p in a.iterdir()}
        b = train_run(capsys, cfg)
        assert a == b
        assert {p.name: p.read_bytes() for p in b.iterdir()} == first

    def test_adaptation(self, tmp_path, capsys):
        cfg = make_config(tmp_path, task="adaptation")
        run_dir = train_run(capsys, cfg)
        assert len(list(run_dir.glob("*_ffn.bin"))) == 3
        code, out, _ = run(capsys, "predict", "-c", cfg, run_dir, tmp_path / "data/test.tsv")
        rows = (run_dir / "predictions_CONV.tsv").read_text().splitlines()
        assert code == 0 and len(rows) == 12 and all(len(r.split("\t")) == 3 for r in rows)


class TestEvaluate:
    def test_gold_vs_gold(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        dev = tmp_path / "data/dev.tsv"
        code, out, _ = run(capsys, "evaluate", "-c", cfg, dev, dev)
        assert code == 0
        assert out.splitlines() == ["empathy\t1.000000", "distress\t1.000000", "mean\t1.000000"]

    def test_toy_predictions(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        (tmp_path / "g.tsv").write_text("1\t5\n2\t1\n3\t7\n4\t4\n")
        (tmp_path / "p.tsv").write_text("1\t4\n3\t2\n2\t6\n4\t3\n")
        code, out, _ = run(capsys, "analyze", "-c", cfg, tmp_path / "p.tsv", tmp_path / "g.tsv",
                           "--report-dir", tmp_path / "rep")
        assert code == 0
        summary = (tmp_path / "rep/analysis_summary.tsv").read_text().splitlines()
        emp = dict(zip(summary[0].split("\t"), summary[1].split("\t")))
        assert float(emp["pearson"]) == pytest.approx(0.8, abs=1e-12)
        dis = dict(zip(summary[0].split("\t"), summary[2].split("\t")))
        # gold - pred = (1, -1, 1, 1)
        assert float(dis["positive_deviation"]) == 1.0 and float(dis["negative_deviation"]) == -1.0
        assert (tmp_path / "rep/analysis_samples.tsv").exists()

    def test_misaligned(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        (tmp_path / "p.tsv").write_text("1\t2\n")
        code, _, err = run(capsys, "evaluate", "-c", cfg, tmp_path / "p.tsv", tmp_path / "data/dev.tsv")
        assert code == 2 and "1 predictions" in err and "20 gold" in err

    def test_undefined_correlation(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        (tmp_path / "g.tsv").write_text("1\t2\n2\t3\n3\t4\n")
        (tmp_path / "p.tsv").write_text("4\t2\n4\t3\n4\t5\n")
        code, out, err = run(capsys, "evaluate", "-c", cfg, tmp_path / "p.tsv", tmp_path / "g.tsv")
        assert code == 2 and "empathy\tundefined" in out and "undefined" in err

    def test_analyze_data(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        code, out, _ = run(capsys, "analyze", "-c", cfg, "--data", tmp_path / "data/train.tsv")
        lines = out.splitlines()
        assert code == 0 and lines[0].startswith("target\tbin")
        assert sum(int(l.split("\t")[4]) for l in lines[1:] if l.startswith("empathy")) == 60


class TestExitCodes:
    def test_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.run(["frobnicate"])
        assert exc.value.code == 1

    def test_bad_config_key(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        code, _, err = run(capsys, "featurize", "-c", cfg, "--set", "train.nope=1")
        assert code == 1 and "nope" in err

    def test_missing_data_file(self, tmp_path, capsys):
        cfg = make_config(tmp_path)
        code, _, err = run(capsys, "featurize", "-c", cfg, "--set", "data.dev=/nonexistent.tsv")
        assert code == 1 and "nonexistent" in err

    def test_train_before_featurize(self, tmp_path, capsys):
        code, _, err = run(capsys, "train", "-c", make_config(tmp_path))
        assert code == 2 and "featurize" in err

    def test_provider_failure(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("EMBED_API_URL", raising=False)
        cfg = make_config(tmp_path)
        code, _, err = run(capsys, "featurize", "-c", cfg, "--set", "embedding.provider=remote",
                           "--set", "embedding.cache=null")
        assert code == 3 and "provider error" in err


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg = make_config(tmp_path, seed=5)
        c = load_config(cfg, ["seed=6", "train.epochs=3"], seed=7)
        assert c["seed"] == 7 and c["train"]["epochs"] == 3
        assert load_config(cfg, ["seed=6"])["seed"] == 6
        assert load_config(cfg)["seed"] == 5

    def test_paths_relative_to_file(self, tmp_path):
        c = load_config(make_config(tmp_path))
        assert c["data"]["train"] == str((tmp_path / "data/train.tsv").resolve())

    def test_seed_must_be_integer(self):
        with pytest.raises(ConfigError):
            load_config({"seed": "x"})
