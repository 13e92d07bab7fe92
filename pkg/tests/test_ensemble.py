import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from affectreg.ensemble import EnsembleModel, predict
from affectreg.neural import FfnModel
from affectreg.svr import SvrConfig, fit


class Constant:
    def __init__(self, value):
        self.value = value

    def predict(self, x):
        return np.full(len(np.atleast_2d(x)), self.value)


X = np.zeros((2, 3))


class TestPredict:
    @pytest.mark.parametrize("values,expected", [((3, 4, 5), 4.0), ((7,), 7.0), ((1.2, 1.5, 1.8), 1.5)])
    def test_examples(self, values, expected):
        out = predict(EnsembleModel([Constant(v) for v in values]), X)
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError):
            EnsembleModel([])

    def test_unequal_weights_rejected(self):
        with pytest.raises(ValueError, match="equal"):
            EnsembleModel([Constant(1), Constant(2)], weights=[0.7, 0.3])

    def test_clip_is_opt_in(self):
        assert EnsembleModel([Constant(9.0)]).predict(X)[0] == 9.0
        assert EnsembleModel([Constant(9.0)], clip=(1, 7)).predict(X)[0] == 7.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6), st.randoms())
def test_bounds_and_permutation(values, rnd):
    ens = EnsembleModel([Constant(v) for v in values])
    out = ens.predict(X)[0]
    assert min(values) - 1e-9 * max(1, abs(min(values))) <= out
    assert out <= max(values) + 1e-9 * max(1, abs(max(values)))
    shuffled = list(values)
    rnd.shuffle(shuffled)
    other = EnsembleModel([Constant(v) for v in shuffled]).predict(X)[0]
    assert abs(out - other) <= 1e-9 * max(1.0, max(abs(v) for v in values))


def test_manifest_round_trip(tmp_path, rng):
    x = rng.normal(size=(20, 4))
    y = rng.uniform(1, 7, size=20)
    ffn = FfnModel.create(4, hidden=(6, 3), seed=1)
    poly = fit(SvrConfig("poly3"), x, y)
    rbf = fit(SvrConfig("rbf"), x, y)
    paths = []
    for name, m in (("ffn", ffn), ("poly", poly), ("rbf", rbf)):
        p = tmp_path / "models" / f"{name}.bin"
        p.parent.mkdir(exist_ok=True)
        m.save(p)
        paths.append(p)
    ens = EnsembleModel([ffn, poly, rbf], target="distress")
    ens.save_manifest(tmp_path / "manifest.json", paths)
    assert "models/ffn.bin" in (tmp_path / "manifest.json").read_text()
    loaded = EnsembleModel.load_manifest(tmp_path / "manifest.json")
    assert loaded.target == "distress"
    assert np.array_equal(loaded.predict(x), ens.predict(x))
    np.testing.assert_allclose(
        ens.predict(x), (ffn.predict(x) + poly.predict(x) + rbf.predict(x)) / 3, rtol=0, atol=1e-12)
