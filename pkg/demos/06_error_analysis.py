"""
Error analysis of a prediction set
==================================

Per-target Pearson, spread of predictions against gold, average positive
and negative deviation, and whether errors grow with distance from the
scale midpoint.
"""

import numpy as np

from affectreg.evaluation import evaluate, round_score, task_score

rng = np.random.default_rng(6)
gold = {"empathy": rng.uniform(1, 7, 200), "distress": rng.uniform(1, 7, 200)}
# a model that hedges towards the middle: typical of MSE-trained regressors
pred = {k: 4 + 0.5 * (g - 4) + 0.5 * rng.normal(size=200) for k, g in gold.items()}

report = evaluate(gold, pred, midpoints={"empathy": 4.0, "distress": 4.0})
print(report.text())

# errors here grow with centrality distance, so that correlation comes out positive
print("centrality-error r:", [round(t.centrality_error, 3) for t in report.targets])

# scores are reported to three places, rounding half up
print(round_score(task_score([0.488, 0.471])))
