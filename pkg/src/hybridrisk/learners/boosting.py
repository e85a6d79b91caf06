"""Gradient-boosted trees for the logistic loss with Newton leaf weights."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import ConfigError
from .tree import NewtonCriterion, Tree, grow_tree, presort


def logistic_loss(y, margin):
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


@dataclass(frozen=True)
class GradientBoostingModel:
    trees: tuple[Tree, ...]
    learning_rate: float
    base_score: float
    reg_lambda: float
    gamma: float
    train_loss: tuple[float, ...] = field(default=(), compare=False)

    def margin(self, X):
        X = np.asarray(X, dtype=float)
        out = np.full(len(X), self.base_score)
        for t in self.trees:
            out += self.learning_rate * t.predict(X)
        return out

    def predict_proba(self, X):
        return expit(self.margin(X))

    def to_dict(self):
        return {"type": "gbt", "learning_rate": self.learning_rate,
                "base_score": self.base_score, "reg_lambda": self.reg_lambda,
                "gamma": self.gamma, "train_loss": list(self.train_loss),
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Tree.from_dict(t) for t in d["trees"]), float(d["learning_rate"]),
                   float(d["base_score"]), float(d["reg_lambda"]), float(d["gamma"]),
                   tuple(d.get("train_loss", ())))


def train_gbt(X, y, n_rounds: int = 300, learning_rate: float = 0.1, max_depth: int = 6,
              reg_lambda: float = 1.0, gamma: float = 0.0, seed: int = 0,
              min_child_weight: float = 1.0, subsample: float = 1.0) -> GradientBoostingModel:
    """Boost ``n_rounds`` regression trees on the logistic loss.

    Round ``t`` fits a tree to gradients ``p - y`` and hessians ``p(1 - p)``
    at the current margins; leaves hold ``-G / (H + lambda)`` and the margin
    moves by ``learning_rate`` times the tree output. The starting margin is
    the log-odds of the training prevalence. ``train_loss[t]`` is the mean
    training log-loss after ``t`` rounds.
    """
    if n_rounds < 1 or learning_rate <= 0:
        raise ConfigError("boosting needs n_rounds >= 1 and learning_rate > 0")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    prev = np.clip(y.mean(), 1e-12, 1 - 1e-12)
    base = float(np.log(prev / (1 - prev)))
    margin = np.full(n, base)
    order = presort(X)
    crit = NewtonCriterion(reg_lambda, gamma, min_child_weight)
    rng = np.random.default_rng(seed)
    losses = [logistic_loss(y, margin)]
    trees = []
    for _ in range(n_rounds):
        p = expit(margin)
        g = p - y
        h = p * (1.0 - p)
        active = rng.random(n) < subsample if subsample < 1.0 else None
        stats = np.column_stack([g, h, np.ones(n)])
        tree = grow_tree(X, stats, crit, order=order, active=active, max_depth=max_depth)
        trees.append(tree)
        margin = margin + learning_rate * tree.predict(X)
        losses.append(logistic_loss(y, margin))
    return GradientBoostingModel(tuple(trees), learning_rate, base, reg_lambda, gamma,
                                 tuple(losses))


def predict_gbt_proba(m: GradientBoostingModel, X):
    return m.predict_proba(X)
