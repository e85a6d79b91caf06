"""Weighted soft voting over members that emit class-1 probabilities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class VotingEnsemble:
    members: tuple[Any, ...]
    weights: tuple[float, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.members) < 2:
            raise ConfigError("a voting ensemble needs at least two members")
        if len(self.weights) != len(self.members):
            raise ConfigError("one weight per member is required")
        w = np.asarray(self.weights, dtype=float)
        if (w < 0).any() or w.sum() <= 0:
            raise ConfigError("weights must be non-negative with a positive sum")
        object.__setattr__(self, "weights", tuple(float(x) for x in w / w.sum()))

    def member_probas(self, X) -> np.ndarray:
        return np.column_stack([m.predict_proba(X) for m in self.members])

    def predict_proba(self, X) -> np.ndarray:
        return combine(self.member_probas(X), self.weights)

    def classify(self, X, tau: float = 0.5) -> np.ndarray:
        return classify(self.predict_proba(X), tau)


def combine(probas, weights: Sequence[float]) -> np.ndarray:
    """``p(x) = sum_m w_m p_m(x)`` with weights renormalized to sum to one."""
    P = np.asarray(probas, dtype=float)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    return P @ w


def predict_proba(e: VotingEnsemble, X) -> np.ndarray:
    return e.predict_proba(X)


def classify(p, tau: float = 0.5) -> np.ndarray:
    """Label 1 iff ``p >= tau``; at 0.5 this is the argmax of the soft vote."""
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {tau}")
    return (np.asarray(p) >= tau).astype(np.int64)
