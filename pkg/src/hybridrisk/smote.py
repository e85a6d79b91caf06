"""SMOTE oversampling of the minority class, restricted to training folds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, LeakageError, MinorityTooSmall
from .preprocess import Features


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ConfigError("k_neighbors must be >= 1")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ConfigError("target_ratio must lie in (0, 1]")


def nearest_neighbors(X: np.ndarray, k: int, block: int = 2048) -> np.ndarray:
    """Exact Euclidean k-NN within ``X`` (self excluded), ties to lower index."""
    n = len(X)
    sq = np.einsum("ij,ij->i", X, X)
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, block):
        stop = min(n, start + block)
        d = sq[start:stop, None] + sq[None, :] - 2.0 * X[start:stop] @ X.T
        np.maximum(d, 0.0, out=d)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        kth = np.partition(d, k - 1, axis=1)[:, k - 1:k]
        # everything closer than the k-th distance, then the lowest-index ties
        less = d < kth
        tie = d == kth
        need = k - less.sum(axis=1, keepdims=True)
        keep = less | (tie & (np.cumsum(tie, axis=1) <= need))
        cand = np.nonzero(keep)[1].reshape(stop - start, k)
        cd = np.take_along_axis(d, cand, axis=1)
        order = np.lexsort((cand, cd), axis=1)
        out[start:stop] = np.take_along_axis(cand, order, axis=1)
    return out


def smote_oversample(X, y, cfg: SmoteConfig = SmoteConfig(), return_origin: bool = False):
    """Append synthetic minority rows until minority >= ceil(ratio * majority).

    Each synthetic row is ``x + u * (x_nn - x)`` with ``u ~ U[0, 1)``, ``x`` a
    minority row taken round-robin and ``x_nn`` one of its ``k`` nearest
    minority neighbours. The draws for synthetic rows of minority row ``r``
    come from a generator seeded with ``(seed, r)``. Original rows come first,
    unchanged.

    With ``return_origin`` a third element maps each synthetic row to the
    indices of its parent and neighbour in ``X``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    counts = {c: int(np.sum(y == c)) for c in (0, 1)}
    minority = 1 if counts[1] <= counts[0] else 0
    majority = 1 - minority
    idx_min = np.flatnonzero(y == minority)
    n_min = len(idx_min)
    if n_min < 2:
        raise MinorityTooSmall(f"minority class has {n_min} rows; SMOTE needs >= 2")
    k = cfg.k_neighbors
    if k >= n_min:
        warnings.warn(f"k_neighbors={k} >= minority count {n_min}; using k={n_min - 1}",
                      RuntimeWarning, stacklevel=2)
        k = n_min - 1
    target = math.ceil(cfg.target_ratio * counts[majority])
    n_syn = max(0, target - n_min)
    empty = np.empty(0, dtype=np.int64)
    if n_syn == 0:
        origin = {"parent": empty, "neighbor": empty}
        return (X.copy(), y.copy(), origin) if return_origin else (X.copy(), y.copy())

    Xm = X[idx_min]
    nn = nearest_neighbors(Xm, k)
    parent = np.arange(n_syn) % n_min
    pick = np.empty(n_syn, dtype=np.int64)
    u = np.empty(n_syn)
    # one stream per minority row, keyed by (seed, row), so any partition of
    # the rows across workers reproduces the serial draws
    for r in range(min(n_min, n_syn)):
        rows = slice(r, n_syn, n_min)
        m = len(range(r, n_syn, n_min))
        rng = np.random.default_rng([cfg.seed, r])
        pick[rows] = rng.integers(0, k, size=m)
        u[rows] = rng.random(m)
    neighbor = nn[parent, pick]
    synth = Xm[parent] + u[:, None] * (Xm[neighbor] - Xm[parent])
    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(n_syn, minority, dtype=y.dtype)])
    if return_origin:
        return X_out, y_out, {"parent": idx_min[parent], "neighbor": idx_min[neighbor]}
    return X_out, y_out


def smote_fold(fold: Features, cfg: SmoteConfig = SmoteConfig()) -> Features:
    """Oversample a training fold; any other partition is a leakage error."""
    if fold.partition != "train" or fold.provenance != "primary":
        raise LeakageError(
            f"SMOTE may only see primary training rows, got {fold.provenance}/{fold.partition}")
    Xr, yr = smote_oversample(fold.X, fold.y, cfg)
    meta = dict(fold.meta)
    meta["n_synthetic"] = int(len(yr) - len(fold.y))
    return Features(Xr, yr, fold.names, fold.provenance, "train", meta)
