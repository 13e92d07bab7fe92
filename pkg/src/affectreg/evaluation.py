"""Pearson scoring and error analysis.

Standard deviations use the population convention (divide by n).
"""

from __future__ import annotations

import math
from decimal import ROUND_HALF_UP, Decimal
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np


class UndefinedCorrelation(ValueError):
    """Correlation requested for a constant (zero-variance) input."""


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("pearson needs at least 2 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        which = "x" if sxx == 0.0 else "y"
        raise UndefinedCorrelation(f"pearson undefined: {which} is constant")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def task_score(values: Sequence[float]) -> float:
    values = list(values)
    if not values:
        raise ValueError("no correlations to average")
    return sum(values) / len(values)


def round_score(value: float, places: int = 3) -> float:
    """Half-up rounding of the shortest decimal form, as scores are usually reported."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


def deviation_report(gold, pred) -> tuple:
    """(mean positive deviation, mean negative deviation); ``None`` for an empty class.

    Deviation is gold minus prediction.
    """
    gold = np.asarray(gold, dtype=np.float64).ravel()
    pred = np.asarray(pred, dtype=np.float64).ravel()
    if gold.size != pred.size:
        raise ValueError(f"length mismatch: {gold.size} vs {pred.size}")
    dev = gold - pred
    pos = dev[dev > 0]
    neg = dev[dev < 0]
    return (float(pos.mean()) if pos.size else None,
            float(neg.mean()) if neg.size else None)


def centrality_error_correlation(gold, pred, midpoint: float = 4.0) -> float:
    """Pearson between a gold value's distance from the scale midpoint and the absolute error."""
    gold = np.asarray(gold, dtype=np.float64).ravel()
    pred = np.asarray(pred, dtype=np.float64).ravel()
    return pearson(np.abs(gold - midpoint), np.abs(gold - pred))


def distribution_summary(values) -> tuple:
    """(mean, population standard deviation)."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 2:
        raise ValueError("need at least 2 values")
    return float(v.mean()), float(v.std())


@dataclass
class TargetReport:
    target: str
    pearson: Optional[float]
    gold_mean: float
    gold_sd: float
    pred_mean: float
    pred_sd: float
    positive_deviation: Optional[float]
    negative_deviation: Optional[float]
    n_positive: int
    n_negative: int
    centrality_error: Optional[float]


@dataclass
class EvalReport:
    targets: list
    mean_r: Optional[float]
    ids: list = field(default_factory=list)
    gold: dict = field(default_factory=dict)
    pred: dict = field(default_factory=dict)
    midpoints: dict = field(default_factory=dict)

    @property
    def undefined(self) -> list:
        return [t.target for t in self.targets if t.pearson is None]

    def summary_tsv(self) -> str:
        cols = ["target", "pearson", "gold_mean", "gold_sd", "pred_mean", "pred_sd",
                "positive_deviation", "negative_deviation", "n_positive", "n_negative",
                "centrality_error_r"]
        lines = ["\t".join(cols)]
        for t in self.targets:
            vals = [t.target, t.pearson, t.gold_mean, t.gold_sd, t.pred_mean, t.pred_sd,
                    t.positive_deviation, t.negative_deviation, t.n_positive, t.n_negative,
                    t.centrality_error]
            lines.append("\t".join(_cell(v) for v in vals))
        lines.append("\t".join(["mean", _cell(self.mean_r)] + [""] * (len(cols) - 2)))
        return "\n".join(lines) + "\n"

    def samples_tsv(self) -> str:
        lines = ["id\ttarget\tgold\tprediction\tabs_error\tgold_distance_from_midpoint"]
        for t in self.targets:
            name = t.target
            m = self.midpoints[name]
            for sid, g, p in zip(self.ids, self.gold[name], self.pred[name]):
                lines.append("\t".join([str(sid), name, _cell(g), _cell(p),
                                        _cell(abs(g - p)), _cell(abs(g - m))]))
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        out = ["Evaluation report (standard deviations: population, divide by n)", ""]
        for t in self.targets:
            out.append(f"{t.target}:")
            out.append(f"  pearson r            {_fmt(t.pearson)}")
            out.append(f"  gold mean / sd       {t.gold_mean:.3f} / {t.gold_sd:.3f}")
            out.append(f"  pred mean / sd       {t.pred_mean:.3f} / {t.pred_sd:.3f}")
            out.append(f"  avg positive dev     {_fmt(t.positive_deviation)} (n={t.n_positive})")
            out.append(f"  avg negative dev     {_fmt(t.negative_deviation)} (n={t.n_negative})")
            out.append(f"  centrality-error r   {_fmt(t.centrality_error)}")
        out.append("")
        out.append(f"mean r: {_fmt(self.mean_r)}")
        if self.undefined:
            out.append(f"undefined correlations: {', '.join(self.undefined)}")
        return "\n".join(out) + "\n"

    def write(self, directory, stem="eval") -> list:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = [d / f"{stem}_summary.tsv", d / f"{stem}_samples.tsv", d / f"{stem}_report.txt"]
        for path, content in zip(paths, (self.summary_tsv(), self.samples_tsv(), self.text())):
            path.write_text(content, encoding="utf-8")
        return paths


def _cell(v):
    if v is None:
        return "undefined"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _fmt(v):
    return "undefined" if v is None else f"{v:.3f}"


def evaluate(gold: Mapping[str, Sequence[float]], pred: Mapping[str, Sequence[float]],
             midpoints: Optional[Mapping[str, float]] = None, ids=None) -> EvalReport:
    """Score every target in ``gold``; undefined correlations are kept as ``None``."""
    midpoints = dict(midpoints or {})
    reports = []
    gold_arr, pred_arr = {}, {}
    n = None
    for target, g in gold.items():
        g = np.asarray(g, dtype=np.float64).ravel()
        p = np.asarray(pred[target], dtype=np.float64).ravel()
        if g.size != p.size:
            raise ValueError(f"{target}: {g.size} gold values but {p.size} predictions")
        if n is not None and g.size != n:
            raise ValueError("all targets must have the same number of samples")
        n = g.size
        m = midpoints.setdefault(target, 4.0)
        r = _maybe(pearson, g, p)
        pos, neg = deviation_report(g, p)
        dev = g - p
        gm, gs = distribution_summary(g)
        pm, ps = distribution_summary(p)
        reports.append(TargetReport(
            target, r, gm, gs, pm, ps, pos, neg, int((dev > 0).sum()), int((dev < 0).sum()),
            _maybe(centrality_error_correlation, g, p, m),
        ))
        gold_arr[target] = g
        pred_arr[target] = p
    rs = [t.pearson for t in reports]
    mean_r = task_score(rs) if reports and all(r is not None for r in rs) else None
    ids = list(ids) if ids is not None else [str(i) for i in range(n or 0)]
    return EvalReport(reports, mean_r, ids, gold_arr, pred_arr, midpoints)


def _maybe(fn, *args):
    try:
        return fn(*args)
    except UndefinedCorrelation:
        return None
