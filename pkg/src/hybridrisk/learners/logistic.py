"""L2-penalized logistic regression fitted by Newton's method (IRLS)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import DimensionMismatch, SeparationDetected


@dataclass(frozen=True)
class LogisticModel:
    intercept: float
    coef: np.ndarray
    l2: float = 0.0
    n_iter: int = 0
    grad_norm: float = 0.0

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.coef):
            raise DimensionMismatch(f"expected {len(self.coef)} features, got {X.shape}")
        return self.intercept + X @ self.coef

    def predict_proba(self, X):
        return expit(self.decision_function(X))

    def to_dict(self):
        return {"type": "logistic", "intercept": self.intercept,
                "coef": [float(c) for c in self.coef], "l2": self.l2,
                "n_iter": self.n_iter, "grad_norm": self.grad_norm}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["intercept"]), np.array(d["coef"], dtype=float), float(d["l2"]),
                   int(d["n_iter"]), float(d["grad_norm"]))


def objective(beta, X1, y, l2):
    """Mean negative log-likelihood plus ``l2/2 * ||coef||^2`` (intercept free)."""
    z = X1 @ beta
    nll = np.mean(np.logaddexp(0.0, z) - y * z)
    return nll + 0.5 * l2 * np.dot(beta[1:], beta[1:])


def gradient(beta, X1, y, l2):
    p = expit(X1 @ beta)
    g = X1.T @ (p - y) / len(y)
    g[1:] += l2 * beta[1:]
    return g


def train_logistic(X, y, l2: float = 1e-4, tol: float = 1e-8, max_iter: int = 100,
                   divergence: float = 1e6) -> LogisticModel:
    """Newton iterations with step halving until ``||grad|| <= tol``.

    The objective is averaged over rows so ``tol`` does not scale with N.
    Without a penalty, separable data drive the coefficients to infinity;
    that is reported as :class:`SeparationDetected`.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    X1 = np.hstack([np.ones((n, 1)), X])
    beta = np.zeros(p + 1)
    ridge = np.full(p + 1, l2)
    ridge[0] = 0.0
    f = objective(beta, X1, y, l2)
    g = gradient(beta, X1, y, l2)
    it = 0
    while np.linalg.norm(g) > tol and it < max_iter:
        it += 1
        mu = expit(X1 @ beta)
        w = mu * (1.0 - mu)
        H = (X1.T * w) @ X1 / n + np.diag(ridge)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        while True:
            cand = beta - t * step
            fc = objective(cand, X1, y, l2)
            if fc <= f or t < 1e-10:
                break
            t *= 0.5
        if not np.all(np.isfinite(cand)) or np.abs(cand).max() > divergence:
            raise SeparationDetected(
                "coefficients diverging; the classes look separable (use l2 > 0)")
        beta, f = cand, fc
        g = gradient(beta, X1, y, l2)
        if t < 1e-10:
            break
    if l2 == 0.0 and _separated(X1 @ beta, y):
        raise SeparationDetected("the classes are separable; maximum likelihood diverges")
    return LogisticModel(float(beta[0]), beta[1:].copy(), l2, it, float(np.linalg.norm(g)))


def _separated(z, y):
    pos, neg = z[y == 1], z[y == 0]
    return len(pos) > 0 and len(neg) > 0 and (pos.min() > neg.max() or pos.max() < neg.min())


def predict_logistic(m: LogisticModel, X):
    return m.predict_proba(X)
