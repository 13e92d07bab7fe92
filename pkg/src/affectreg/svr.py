"""Epsilon-insensitive support vector regression with per-sample weights.

The dual is solved by sequential minimal optimization over the stacked
variable vector ``beta = [alpha, alpha_star]`` (length ``2n``)::

    min  0.5 * beta' Q beta + p' beta
    s.t. y' beta = 0,   0 <= beta_t <= C * w_(t mod n)

with ``y = [+1]*n + [-1]*n``, ``Q_st = y_s y_t K(x_s, x_t)`` and
``p = [eps - z, eps + z]``. Working pairs are chosen by maximal violation
plus second-order gain. Sample weights scale each variable's upper bound.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .container import read_container, write_container

logger = logging.getLogger(__name__)

SVR_TAG = b"SVR "
_TAU = 1e-12


class ConvergenceError(RuntimeError):
    pass


def sample_weight(gold, scale_midpoint: float = 4.0):
    """``|m - g| + 1``: samples far from the scale midpoint weigh more."""
    return np.abs(scale_midpoint - np.asarray(gold, dtype=np.float64)) + 1.0


@dataclass
class SvrConfig:
    kernel: str = "rbf"  # "rbf" or "poly3"
    C: float = 1.0
    epsilon: float = 0.1
    tolerance: float = 1e-3
    gamma: Optional[float] = None  # None: 1 / (n_features * X.var())
    degree: int = 3
    coef0: float = 0.0
    max_iter: int = 1_000_000

    def __post_init__(self):
        if self.kernel not in ("rbf", "poly3"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


def scale_gamma(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    var = x.var()
    return 1.0 / (x.shape[1] * var) if var > 0 else 1.0


def kernel_matrix(kind: str, gamma: float, a, b, degree=3, coef0=0.0) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if kind == "rbf":
        sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * (a @ b.T)
        return np.exp(-gamma * np.maximum(sq, 0.0))
    if kind == "poly3":
        return (gamma * (a @ b.T) + coef0) ** degree
    raise ValueError(f"unknown kernel {kind!r}")


def kernel(config: SvrConfig, x, z, gamma: Optional[float] = None) -> float:
    g = gamma if gamma is not None else config.gamma
    if g is None:
        raise ValueError("gamma must be given when the config leaves it unset")
    return float(kernel_matrix(config.kernel, g, x, z, config.degree, config.coef0)[0, 0])


@dataclass
class SvrModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha - alpha_star per support vector
    bias: float
    kernel: str
    gamma: float
    degree: int = 3
    coef0: float = 0.0
    iterations: int = 0
    objective: float = 0.0

    def decision(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.support_vectors.shape[1]:
            raise ValueError(
                f"expected {self.support_vectors.shape[1]} features, got {x.shape[1]}"
            )
        if len(self.dual_coef) == 0:
            return np.full(x.shape[0], self.bias)
        k = kernel_matrix(self.kernel, self.gamma, x, self.support_vectors, self.degree, self.coef0)
        return k @ self.dual_coef + self.bias

    def predict(self, x) -> np.ndarray:
        return self.decision(x)

    def save(self, path) -> None:
        meta = {
            "kernel": self.kernel, "gamma": self.gamma, "degree": self.degree,
            "coef0": self.coef0, "bias": self.bias, "iterations": self.iterations,
            "objective": self.objective,
        }
        write_container(path, SVR_TAG, meta,
                        {"support_vectors": self.support_vectors, "dual_coef": self.dual_coef})

    @classmethod
    def load(cls, path) -> "SvrModel":
        meta, arrays = read_container(path, SVR_TAG)
        return cls(arrays["support_vectors"], arrays["dual_coef"], **meta)


def dual_objective(kmat, targets, epsilon, coef, abs_sum) -> float:
    """Value of ``0.5 c'Kc + eps * sum(alpha + alpha*) - z'c`` for ``c = alpha - alpha*``."""
    return float(0.5 * coef @ kmat @ coef + epsilon * abs_sum - targets @ coef)


def solve_dual(kmat, targets, upper, epsilon, tol=1e-3, max_iter=1_000_000):
    """SMO on the stacked epsilon-SVR dual.

    Returns ``(beta, bias, iterations)``; ``beta`` has length ``2n``.
    """
    n = len(targets)
    y = np.concatenate([np.ones(n), -np.ones(n)])
    cap = np.concatenate([upper, upper])
    beta = np.zeros(2 * n)
    grad = np.concatenate([epsilon - targets, epsilon + targets])
    kdiag = np.diag(kmat)
    qdiag = np.concatenate([kdiag, kdiag])

    def q_column(t):
        col = kmat[:, t % n]
        return y * y[t] * np.concatenate([col, col])

    it = 0
    while it < max_iter:
        up = ((y > 0) & (beta < cap)) | ((y < 0) & (beta > 0))
        low = ((y < 0) & (beta < cap)) | ((y > 0) & (beta > 0))
        score = -y * grad
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        gmax = score[i]
        gmin = np.min(np.where(low, score, np.inf))
        if gmax - gmin < tol:
            break

        qi = q_column(i)
        b = gmax - score
        a = qdiag[i] + qdiag - 2.0 * y[i] * y * qi
        a = np.where(a > 0, a, _TAU)
        cand = low & (b > 0)
        if not cand.any():
            break
        j = int(np.argmin(np.where(cand, -(b * b) / a, np.inf)))
        qj = q_column(j)

        old_i, old_j = beta[i], beta[j]
        ci, cj = cap[i], cap[j]
        if y[i] != y[j]:
            quad = qdiag[i] + qdiag[j] + 2.0 * qi[j]
            if quad <= 0:
                quad = _TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > ci - cj:
                if ai > ci:
                    ai, aj = ci, ci - diff
            elif aj > cj:
                aj, ai = cj, cj + diff
        else:
            quad = qdiag[i] + qdiag[j] - 2.0 * qi[j]
            if quad <= 0:
                quad = _TAU
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > ci:
                if ai > ci:
                    ai, aj = ci, total - ci
            elif aj < 0:
                aj, ai = 0.0, total
            if total > cj:
                if aj > cj:
                    aj, ai = cj, total - cj
            elif ai < 0:
                ai, aj = 0.0, total
        beta[i], beta[j] = ai, aj
        grad += qi * (ai - old_i) + qj * (aj - old_j)
        it += 1
    else:
        raise ConvergenceError(
            f"SMO did not converge in {max_iter} iterations "
            f"(violation {gmax - gmin:.3g}, tolerance {tol:g})"
        )

    return beta, _bias(beta, grad, y, cap), it


def _bias(beta, grad, y, cap):
    yg = y * grad
    at_upper = beta >= cap
    at_lower = beta <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        rho = yg[free].mean()
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb)
    return float(-rho)


def fit(config: SvrConfig, features, targets, weights=None) -> SvrModel:
    """Fit an epsilon-SVR; ``weights`` scale each sample's box bound ``C * w``."""
    x = np.asarray(features, dtype=np.float64)
    z = np.asarray(targets, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != z.shape[0]:
        raise ValueError("features must be (n, d) with one target per row")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
        raise ValueError("non-finite features or targets")
    w = np.ones(len(z)) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    if w.shape != z.shape or np.any(w <= 0):
        raise ValueError("weights must be positive, one per sample")

    gamma = config.gamma if config.gamma is not None else scale_gamma(x)
    kmat = kernel_matrix(config.kernel, gamma, x, x, config.degree, config.coef0)
    beta, bias, iters = solve_dual(kmat, z, config.C * w, config.epsilon,
                                   config.tolerance, config.max_iter)
    n = len(z)
    coef = beta[:n] - beta[n:]
    objective = dual_objective(kmat, z, config.epsilon, coef, beta.sum())
    sv = np.abs(coef) > 0
    logger.debug("svr fit: %d iterations, %d support vectors", iters, int(sv.sum()))
    return SvrModel(x[sv].copy(), coef[sv].copy(), bias, config.kernel, float(gamma),
                    config.degree, config.coef0, iters, objective)


def predict(model: SvrModel, x) -> np.ndarray:
    return model.predict(x)
