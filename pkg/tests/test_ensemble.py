from dataclasses import dataclass

import numpy as np
import pytest

from hybridrisk.ensemble import VotingEnsemble, classify, combine, predict_proba
from hybridrisk.errors import ConfigError


@dataclass
class Fixed:
    p: np.ndarray

    def predict_proba(self, X):
        return self.p[: len(X)]


def test_equal_weights_mean():
    e = VotingEnsemble((Fixed(np.array([0.2])), Fixed(np.array([0.6]))), (0.5, 0.5))
    assert predict_proba(e, [[0]])[0] == pytest.approx(0.4)


def test_degenerate_weight_returns_first_member(rng):
    a, b = rng.random(30), rng.random(30)
    e = VotingEnsemble((Fixed(a), Fixed(b)), (1.0, 0.0))
    assert np.array_equal(e.predict_proba(np.zeros((30, 1))), a)


def test_convex_combination_and_scale_invariance(rng):
    P = rng.random((100, 3))
    w = rng.random(3) + 0.01
    p = combine(P, w)
    assert (p >= P.min(axis=1) - 1e-15).all() and (p <= P.max(axis=1) + 1e-15).all()
    assert np.array_equal(classify(combine(P, 7.5 * w)), classify(p))


def test_classify_tie_and_threshold_monotone(rng):
    assert classify(np.array([0.5]), 0.5)[0] == 1
    assert classify(np.full(5, 0.99), 0.999).sum() == 0
    p = rng.random(200)
    lo, hi = classify(p, 0.3), classify(p, 0.7)
    assert (hi <= lo).all()
    for tau in (0.0, 1.0, -0.1):
        with pytest.raises(ConfigError):
            classify(p, tau)


def test_ensemble_validation():
    with pytest.raises(ConfigError):
        VotingEnsemble((Fixed(np.zeros(1)),), (1.0,))
    with pytest.raises(ConfigError):
        VotingEnsemble((Fixed(np.zeros(1)), Fixed(np.zeros(1))), (1.0, -1.0))
    e = VotingEnsemble((Fixed(np.zeros(1)), Fixed(np.zeros(1))), (2.0, 6.0))
    assert e.weights == (0.25, 0.75)
