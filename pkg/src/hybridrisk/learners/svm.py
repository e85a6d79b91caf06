"""RBF-kernel SVM trained by SMO with second-order working-set selection."""

from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch

TAU = 1e-12


def default_gamma(X) -> float:
    """``1 / (p * mean per-feature variance)``; 1.0 if the features are constant."""
    X = np.asarray(X, dtype=float)
    v = X.var(axis=0).mean()
    return 1.0 / (X.shape[1] * v) if v > 0 else 1.0


def rbf_kernel(A, B, gamma):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d = (np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :]
         - 2.0 * A @ B.T)
    return np.exp(-gamma * np.maximum(d, 0.0))


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    gamma: float
    C: float
    n_iter: int = 0
    converged: bool = True

    @property
    def alpha(self):
        return np.abs(self.dual_coef)

    def decision_function(self, X, block=4096):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.support_vectors.shape[1]:
            raise DimensionMismatch(
                f"expected {self.support_vectors.shape[1]} features, got {X.shape}")
        out = np.empty(len(X))
        for s in range(0, len(X), block):
            K = rbf_kernel(X[s:s + block], self.support_vectors, self.gamma)
            out[s:s + block] = K @ self.dual_coef + self.bias
        return out

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, 1, 0)

    def to_dict(self):
        return {"type": "svm", "support_vectors": self.support_vectors.tolist(),
                "dual_coef": self.dual_coef.tolist(), "bias": self.bias,
                "gamma": self.gamma, "C": self.C, "n_iter": self.n_iter,
                "converged": self.converged}

    @classmethod
    def from_dict(cls, d):
        sv = np.array(d["support_vectors"], dtype=float)
        return cls(sv.reshape(len(d["dual_coef"]), -1), np.array(d["dual_coef"], dtype=float),
                   float(d["bias"]), float(d["gamma"]), float(d["C"]), int(d["n_iter"]),
                   bool(d["converged"]))


class _KernelRows:
    """Kernel columns on demand: a full matrix when small, else an LRU cache."""

    def __init__(self, X, gamma, full_limit=6000, cache_rows=1024):
        self.X = X
        self.gamma = gamma
        self.sq = np.einsum("ij,ij->i", X, X)
        self.full = None
        if len(X) <= full_limit:
            self.full = rbf_kernel(X, X, gamma)
        self.cache = OrderedDict()
        self.cache_rows = cache_rows

    def __getitem__(self, i):
        if self.full is not None:
            return self.full[i]
        row = self.cache.get(i)
        if row is not None:
            self.cache.move_to_end(i)
            return row
        d = self.sq[i] + self.sq - 2.0 * (self.X @ self.X[i])
        row = np.exp(-self.gamma * np.maximum(d, 0.0))
        self.cache[i] = row
        if len(self.cache) > self.cache_rows:
            self.cache.popitem(last=False)
        return row


def train_svm(X, y, C: float = 1.0, gamma: float | None = None, tol: float = 1e-3,
              max_passes: int = 100) -> SvmModel:
    """Solve the soft-margin dual with SMO.

    Labels may be given as {0, 1} or {-1, +1}. Each step picks the maximal
    violating index ``i`` and the partner ``j`` with the largest second-order
    decrease of the dual, then moves the pair analytically inside the box
    ``0 <= alpha <= C`` along ``sum(alpha * y) = const``. Training stops when
    the KKT gap ``m(alpha) - M(alpha)`` drops below ``tol``, or after
    ``max_passes * n`` steps with a warning (the last iterate is returned).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    y = np.where(y > 0, 1.0, -1.0)
    n = len(y)
    gamma = default_gamma(X) if gamma is None else float(gamma)
    K = _KernelRows(X, gamma)
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of 1/2 a'Qa - e'a
    max_iter = max(1, max_passes) * n
    it = 0
    converged = False
    pos = y > 0
    while it < max_iter:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        score = -y * G
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        m_val = s_up[i]
        s_low = np.where(low, score, np.inf)
        M_val = s_low.min()
        if m_val - M_val < tol:
            converged = True
            break
        Ki = K[i]
        b = m_val - score
        cand = low & (b > 0)
        # RBF diagonal is 1, so the curvature along (i, t) is 2 - 2 K_it
        curv = np.maximum(2.0 - 2.0 * Ki, TAU)
        obj = np.where(cand, -(b * b) / curv, np.inf)
        j = int(np.argmin(obj))
        Kj = K[j]
        step = b[j] / curv[j]
        # feasible step along alpha_i += y_i d, alpha_j -= y_j d
        d_i = C - alpha[i] if y[i] > 0 else alpha[i]
        d_j = alpha[j] if y[j] > 0 else C - alpha[j]
        d = min(step, d_i, d_j)
        alpha[i] += y[i] * d
        alpha[j] -= y[j] * d
        # snap to the box to keep the index sets exact
        for t in (i, j):
            if alpha[t] < 1e-14 * C:
                alpha[t] = 0.0
            elif alpha[t] > C * (1 - 1e-14):
                alpha[t] = C
        G += d * y * (Ki - Kj)
        it += 1
    if not converged:
        warnings.warn(f"SMO did not converge within {max_iter} steps; returning last iterate",
                      RuntimeWarning, stacklevel=2)
    score = -y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(score[free].mean())
    else:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        ends = [v for v in (score[up].max() if up.any() else None,
                            score[low].min() if low.any() else None) if v is not None]
        bias = float(np.mean(ends)) if ends else 0.0
    sv = alpha > 0
    return SvmModel(X[sv].copy(), (alpha * y)[sv], bias, gamma, float(C), it, converged)


def svm_decision_value(m: SvmModel, X):
    return m.decision_function(X)
