"""
Weighted SVRs and the three-model average
=========================================

Samples far from the middle of the 1-7 scale get a larger box bound
(weight |4 - g| + 1). Two SVRs (cubic polynomial and RBF kernels) are
averaged with a network, each with weight 1/3.
"""

import numpy as np

from affectreg.ensemble import EnsembleModel
from affectreg.evaluation import pearson
from affectreg.neural import DropoutSpec, FfnModel, TrainConfig, train
from affectreg.svr import SvrConfig, fit, sample_weight

rng = np.random.default_rng(4)
X = rng.normal(size=(300, 6))
gold = np.clip(4 + 1.2 * X[:, 0] - 0.8 * X[:, 1] * X[:, 2] + 0.3 * rng.normal(size=300), 1, 7)

print("weights for gold 1, 4, 5.5, 7:", sample_weight([1, 4, 5.5, 7]))

tr, te = slice(0, 220), slice(220, None)
w = sample_weight(gold[tr])
poly = fit(SvrConfig("poly3"), X[tr], gold[tr], w)
rbf = fit(SvrConfig("rbf"), X[tr], gold[tr], w)
print("support vectors: poly3", len(poly.dual_coef), "rbf", len(rbf.dual_coef))

net = FfnModel.create(6, hidden=(32, 16), dropout=DropoutSpec(p=0.1), seed=0)
net, _ = train(net, X[:180], gold[:180], X[180:220], gold[180:220],
               TrainConfig(learning_rate=3e-3, min_lr=1e-5, epochs=60, batch_size=32))

ens = EnsembleModel([net, poly, rbf], target="empathy")
for name, m in (("ffn", net), ("svr poly3", poly), ("svr rbf", rbf), ("ensemble", ens)):
    print(f"{name:<10} r = {pearson(m.predict(X[te]), gold[te]):.3f}")
