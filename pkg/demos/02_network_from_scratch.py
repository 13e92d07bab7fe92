"""
A regression network written in numpy
=====================================

Forward pass, hand-written backward pass, a gradient check against
central differences, then a short training run with AdamW, a plateau
scheduler and adaptive dropout.
"""

import numpy as np

from affectreg.evaluation import pearson
from affectreg.neural import DropoutSpec, FfnModel, TrainConfig, mse_loss, train

rng = np.random.default_rng(0)

# a tiny 5 -> 4 -> 3 -> 1 network
model = FfnModel.create(5, hidden=(4, 3), activation="gelu", seed=1)
x = rng.normal(size=(6, 5))
y = rng.normal(size=6)

pred, cache = model.forward(x)
grads = model.backward(cache, y)

# central differences on one weight matrix
h = 1e-5
w = model.weights[1]
numeric = np.zeros_like(w)
for idx in np.ndindex(w.shape):
    old = w[idx]
    w[idx] = old + h
    up = mse_loss(model.predict(x), y)
    w[idx] = old - h
    down = mse_loss(model.predict(x), y)
    w[idx] = old
    numeric[idx] = (up - down) / (2 * h)
print("max |analytic - numeric| on W1:", np.abs(grads[2] - numeric).max())

# now learn a noisy linear function
d = 12
w_true = rng.normal(size=d)
X = rng.normal(size=(600, d))
Y = X @ w_true / np.sqrt(d) + 0.1 * rng.normal(size=600)

net = FfnModel.create(d, hidden=(64, 32), dropout=DropoutSpec("adaptive", p=0.2), seed=2)
cfg = TrainConfig(learning_rate=3e-3, min_lr=1e-5, epochs=40, batch_size=32, seed=3)
best, trace = train(net, X[:400], Y[:400], X[400:500], Y[400:500], cfg)

print("best epoch:", trace.best_epoch, "val mse:", round(min(trace.val_loss), 4))
print("lr at start/end:", trace.lr[0], trace.lr[-1])
print("dropout rates at end:", [round(r, 2) for r in trace.dropout_rates[-1]])
print("held-out pearson:", round(pearson(best.predict(X[500:]), Y[500:]), 4))
