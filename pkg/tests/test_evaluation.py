import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from affectreg.evaluation import (
    UndefinedCorrelation, centrality_error_correlation, deviation_report, distribution_summary,
    evaluate, pearson, round_score, task_score,
)


class TestPearson:
    def test_examples(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-15)
        assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0, abs=1e-15)
        # deviations (-1.5,-.5,.5,1.5) vs (-1.5,.5,-.5,1.5): 4 / 5
        assert abs(pearson([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) < 1e-15

    def test_constant(self):
        with pytest.raises(UndefinedCorrelation, match="constant"):
            pearson([1, 1, 1], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])


vectors = st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=30)


@settings(max_examples=200, deadline=None)
@given(vectors, st.data(), st.floats(0.01, 100), st.floats(-100, 100), st.booleans())
def test_pearson_properties(x, data, a, b, negate):
    y = data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(x), max_size=len(x)))
    assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
    r = pearson(x, y)
    assert -1.0 <= r <= 1.0
    assert abs(r - pearson(y, x)) < 1e-12
    a = -a if negate else a
    r2 = pearson(a * np.asarray(x) + b, y)
    assert abs(r2 - math.copysign(1, a) * r) < 1e-9


class TestTaskScore:
    def test_reported_values(self):
        assert round_score(task_score([0.488, 0.471])) == 0.480
        assert round_score(task_score([0.701, 0.775, 0.756])) == 0.744
        assert task_score([0.3]) == 0.3

    def test_empty(self):
        with pytest.raises(ValueError):
            task_score([])


class TestDeviation:
    def test_examples(self):
        assert deviation_report([5, 1], [4, 2]) == (1.0, -1.0)
        assert deviation_report([3, 4], [3, 4]) == (None, None)
        assert deviation_report([5, 6], [4, 4]) == (1.5, None)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 7), st.floats(1, 7)), min_size=2, max_size=40))
def test_deviation_classes_partition(pairs):
    gold = np.array([g for g, _ in pairs], float)
    pred = np.array([p for _, p in pairs])
    report = evaluate({"empathy": gold}, {"empathy": pred}).targets[0]
    assert report.n_positive + report.n_negative == int((gold != pred).sum())
    if report.positive_deviation is not None:
        assert report.positive_deviation > 0
    if report.negative_deviation is not None:
        assert report.negative_deviation < 0


class TestCentrality:
    def test_examples(self):
        assert centrality_error_correlation([1, 4, 7], [3, 4, 5]) == pytest.approx(1.0, abs=1e-15)
        assert centrality_error_correlation([1, 2, 6, 7], [4] * 4) == pytest.approx(1.0, abs=1e-15)
        with pytest.raises(UndefinedCorrelation):
            centrality_error_correlation([1, 2, 6], [1, 2, 6])


class TestDistribution:
    def test_examples(self):
        assert distribution_summary([0, 2]) == (1.0, 1.0)
        assert distribution_summary([3, 3, 3]) == (3.0, 0.0)


class TestReport:
    def test_self_consistent(self, tmp_path, rng):
        gold = {"empathy": rng.uniform(1, 7, 30), "distress": rng.uniform(1, 7, 30)}
        pred = {k: v + rng.normal(size=30) for k, v in gold.items()}
        report = evaluate(gold, pred, ids=[f"s{i}" for i in range(30)])
        assert report.mean_r == (report.targets[0].pearson + report.targets[1].pearson) / 2
        paths = report.write(tmp_path)
        # recompute from the per-sample table alone
        rows = [line.split("\t") for line in paths[1].read_text().splitlines()[1:]]
        for t in report.targets:
            g = np.array([float(r[2]) for r in rows if r[1] == t.target])
            p = np.array([float(r[3]) for r in rows if r[1] == t.target])
            assert pearson(g, p) == t.pearson
            assert distribution_summary(p) == (t.pred_mean, t.pred_sd)
        assert "population" in paths[2].read_text()

    def test_undefined_surfaces(self):
        report = evaluate({"empathy": [1.0, 2.0, 3.0]}, {"empathy": [2.0, 2.0, 2.0]})
        assert report.mean_r is None and report.undefined == ["empathy"]
        assert "undefined" in report.summary_tsv() and "undefined" in report.text()
