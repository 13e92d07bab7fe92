import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from affectreg.convo import (
    ADAPTATION_LR, ConversationContext, adaptation_configs, build_dataset_features,
    build_turn_features, centroid, train_adaptation,
)
from affectreg.corpus import DataError, TurnSample
from affectreg.evaluation import pearson
from affectreg.neural import DropoutSpec, TrainConfig


def table_featurizer(table):
    return lambda texts: np.array([table[t] for t in texts], dtype=float)


def conversation(cid, texts, speakers=None, essays=None):
    speakers = speakers or ["A" if i % 2 == 0 else "B" for i in range(len(texts))]
    essays = essays or {"A": "essay A", "B": "essay B"}
    return [TurnSample(cid, i, s, t, essays[s]) for i, (s, t) in enumerate(zip(speakers, texts))]


TABLE = {"essay A": [1.0, 0.0], "essay B": [0.0, 1.0],
         "t0": [2.0, 4.0], "t1": [4.0, 8.0], "t2": [9.0, -3.0], "t3": [1.0, 1.0]}


class TestCentroid:
    def test_examples(self):
        assert np.array_equal(centroid([], 4), np.zeros(4))
        assert np.array_equal(centroid([[1.0, 2.0]]), [1.0, 2.0])
        assert np.array_equal(centroid([[1, 2], [3, 4]]), [2.0, 3.0])

    def test_ragged(self):
        with pytest.raises(ValueError):
            centroid([[1, 2], [3]])


class TestBuildTurnFeatures:
    def test_contexts(self):
        rows = build_turn_features(conversation("c", ["t0", "t1", "t2"]), table_featurizer(TABLE))
        assert rows.shape == (3, 6)
        assert np.array_equal(rows[0], [1, 0, 2, 4, 0, 0])
        assert np.array_equal(rows[1], [0, 1, 4, 8, 2, 4])
        assert np.array_equal(rows[2], [1, 0, 9, -3, 3, 6])

    def test_two_centroids(self):
        rows = build_turn_features(conversation("c", ["t0", "t1", "t2", "t3"]),
                                   table_featurizer(TABLE), two_centroids=True)
        assert rows.shape == (4, 8)
        # turn 3 (speaker B): own earlier turn t1, other speaker's t0 and t2
        assert np.array_equal(rows[3, 4:6], [4, 8])
        assert np.array_equal(rows[3, 6:8], [5.5, 0.5])

    def test_missing_essay(self):
        conv = conversation("c", ["t0", "t1"], essays={"A": "essay A", "B": ""})
        with pytest.raises(DataError, match="no essay"):
            build_turn_features(conv, table_featurizer(TABLE))

    def test_unsorted(self):
        conv = conversation("c", ["t0", "t1"])[::-1]
        with pytest.raises(ValueError):
            build_turn_features(conv, table_featurizer(TABLE))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(-100, 100), min_size=3, max_size=3), min_size=1, max_size=12))
def test_prefix_identity(blocks):
    # integer-valued blocks keep every running mean exact enough to compare tightly
    ctx = ConversationContext(3)
    for k, b in enumerate(blocks):
        before = ctx.centroid()
        ctx.add(b)
        expected = (k * before + np.asarray(b, float)) / (k + 1)
        assert np.array_equal(ctx.centroid(), expected)
        np.testing.assert_allclose(ctx.centroid(), np.mean(blocks[:k + 1], axis=0), rtol=1e-12, atol=1e-12)


def test_reordering_conversations(rng):
    table = {f"x{i}": list(rng.normal(size=3)) for i in range(12)}
    table.update({"essay A": [1.0, 1.0, 1.0], "essay B": [0.0, 0.0, 0.0]})
    turns = conversation("c1", [f"x{i}" for i in range(5)]) + conversation("c2", [f"x{i}" for i in range(5, 12)])
    feats = build_dataset_features(turns, table_featurizer(table))
    order = rng.permutation(len(turns))
    shuffled = [turns[i] for i in order]
    feats2 = build_dataset_features(shuffled, table_featurizer(table))
    assert np.array_equal(feats2, feats[order])


def test_feature_length_with_lexicons():
    dim = 1536 + 48
    feat = lambda texts: np.zeros((len(texts), dim))
    rows = build_turn_features(conversation("c", ["a", "b"]), feat)
    assert rows.shape[1] == 3 * dim == 4752


class TestAdaptation:
    def test_configs(self):
        cfg = adaptation_configs()
        assert cfg["empathy"].learning_rate == 1e-5
        assert cfg["emotion_polarity"].learning_rate == 2e-5
        assert cfg["emotion_intensity"].learning_rate == 2e-5
        assert all(c.min_lr == 1e-6 and c.epochs == 100 for c in cfg.values())
        assert set(cfg) == set(ADAPTATION_LR)

    def synthetic(self, seed, n_conv):
        rng = np.random.default_rng(seed)
        table, turns = {"essay A": [0.0] * 4, "essay B": [0.0] * 4}, []
        for c in range(n_conv):
            texts = []
            for i in range(6):
                key = f"c{c}t{i}"
                table[key] = list(rng.normal(size=4))
                texts.append(key)
            turns += conversation(f"c{c}", texts)
        x = build_dataset_features(turns, table_featurizer(table))
        y = x[:, 8]  # first component of the context block
        return x, {t: y for t in ADAPTATION_LR}

    def test_synthetic_context_target(self):
        x_tr, y_tr = self.synthetic(0, 60)
        x_dev, y_dev = self.synthetic(1, 10)
        x_te, y_te = self.synthetic(2, 20)
        cfgs = {t: TrainConfig(learning_rate=3e-3, min_lr=1e-5, epochs=60, batch_size=32, seed=1)
                for t in ADAPTATION_LR}
        out = train_adaptation(x_tr, y_tr, x_dev, y_dev, cfgs, hidden=(32, 16),
                               dropout=DropoutSpec(p=0.05))
        assert set(out) == set(ADAPTATION_LR)
        for target, (model, trace) in out.items():
            assert pearson(model.predict(x_te), y_te[target]) > 0.9

    def test_deterministic(self):
        x, y = self.synthetic(3, 6)
        cfgs = adaptation_configs(epochs=2, batch_size=8)
        a = train_adaptation(x, y, x, y, cfgs, hidden=(8, 4), seed=5)
        b = train_adaptation(x, y, x, y, cfgs, hidden=(8, 4), seed=5)
        for t in ADAPTATION_LR:
            assert all(np.array_equal(p, q) for p, q in zip(a[t][0].parameters(), b[t][0].parameters()))
