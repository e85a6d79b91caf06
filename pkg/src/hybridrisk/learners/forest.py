"""Random forest of Gini CART trees on bootstrap samples."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .tree import GiniCriterion, Tree, grow_tree, presort


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[Tree, ...]
    mtry: int
    seed: int

    def predict_proba(self, X):
        """Mean class-1 leaf frequency over trees (soft aggregation)."""
        X = np.asarray(X, dtype=float)
        acc = np.zeros(len(X))
        for t in self.trees:
            acc += t.predict(X)
        return acc / len(self.trees)

    def predict(self, X, tau=0.5):
        # majority vote of the trees is recovered by thresholding the mean at 0.5
        return (self.predict_proba(X) >= tau).astype(int)

    def to_dict(self):
        return {"type": "random_forest", "mtry": self.mtry, "seed": self.seed,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Tree.from_dict(t) for t in d["trees"]), int(d["mtry"]), int(d["seed"]))


def default_mtry(p: int) -> int:
    return max(1, int(math.floor(math.sqrt(p))))


def train_random_forest(X, y, n_trees: int = 300, mtry: int | None = None, seed: int = 0,
                        max_depth: int | None = None, min_leaf: int = 2,
                        bootstrap: bool = True) -> RandomForestModel:
    """Grow ``n_trees`` trees, each on N draws with replacement.

    Every tree gets its own generator spawned from ``seed``, so the forest
    does not depend on the order in which trees are grown.
    """
    if n_trees < 1:
        raise ConfigError("a forest needs at least one tree")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, p = X.shape
    mtry = default_mtry(p) if mtry is None else int(mtry)
    order = presort(X)
    crit = GiniCriterion(min_leaf)
    is0, is1 = (y == 0).astype(float), (y == 1).astype(float)
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        if bootstrap:
            w = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
        else:
            w = np.ones(n)
        stats = np.column_stack([is0 * w, is1 * w, np.ones(n)])
        trees.append(grow_tree(X, stats, crit, order=order, active=w > 0,
                               max_depth=max_depth, mtry=mtry, rng=rng))
    return RandomForestModel(tuple(trees), mtry, seed)


def predict_rf_proba(m: RandomForestModel, X):
    return m.predict_proba(X)
