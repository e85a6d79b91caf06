import math
import warnings

import numpy as np
import pytest

from hybridrisk.errors import ConfigError, LeakageError, MinorityTooSmall
from hybridrisk.preprocess import Features
from hybridrisk.smote import SmoteConfig, nearest_neighbors, smote_fold, smote_oversample


def test_two_point_minority_segment():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 5.0], [5.0, 6.0]])
    y = np.array([1, 1, 0, 0, 0])
    Xr, yr = smote_oversample(X, y, SmoteConfig(k_neighbors=1, target_ratio=1.0, seed=3))
    syn = Xr[5:]
    assert len(syn) == 1 and yr[5] == 1
    assert syn[0, 0] == syn[0, 1]
    assert 0.0 <= syn[0, 0] < 1.0


def test_counts_and_originals_preserved(rng):
    X = rng.random((200, 4))
    y = (rng.random(200) < 0.15).astype(int)
    Xr, yr = smote_oversample(X, y, SmoteConfig(seed=1))
    assert np.array_equal(Xr[:200], X) and np.array_equal(yr[:200], y)
    assert np.sum(yr == 1) == np.sum(yr == 0) == np.sum(y == 0)
    assert (yr[200:] == 1).all()
    Xh, yh = smote_oversample(X, y, SmoteConfig(target_ratio=0.5, seed=1))
    assert np.sum(yh == 1) == math.ceil(0.5 * np.sum(y == 0))


def test_geometry_against_origin(rng):
    X = rng.normal(size=(150, 3))
    y = (rng.random(150) < 0.2).astype(int)
    Xr, yr, origin = smote_oversample(X, y, SmoteConfig(k_neighbors=3, seed=8),
                                      return_origin=True)
    a, b = X[origin["parent"]], X[origin["neighbor"]]
    s = Xr[len(X):]
    assert ((s >= np.minimum(a, b)) & (s <= np.maximum(a, b))).all()
    assert (y[origin["parent"]] == 1).all() and (y[origin["neighbor"]] == 1).all()
    # the neighbour is one of the parent's k nearest minority rows
    idx_min = np.flatnonzero(y == 1)
    nn = nearest_neighbors(X[idx_min], 3)
    pos = {r: i for i, r in enumerate(idx_min)}
    for par, nb in zip(origin["parent"], origin["neighbor"]):
        assert pos[nb] in nn[pos[par]]


def test_nearest_neighbors_brute_force(rng):
    X = rng.integers(0, 4, size=(40, 2)).astype(float)
    nn = nearest_neighbors(X, 4, block=7)
    for i in range(len(X)):
        d = [(float(np.sum((X[i] - X[j]) ** 2)), j) for j in range(len(X)) if j != i]
        assert [j for _, j in sorted(d)[:4]] == nn[i].tolist()


def test_deterministic(rng):
    X = rng.random((80, 2))
    y = (np.arange(80) < 12).astype(int)
    a = smote_oversample(X, y, SmoteConfig(seed=4))
    b = smote_oversample(X, y, SmoteConfig(seed=4))
    assert np.array_equal(a[0], b[0])


def test_small_minority_and_k_clamp():
    X = np.arange(10, dtype=float)[:, None]
    with pytest.raises(MinorityTooSmall):
        smote_oversample(X, (np.arange(10) == 0).astype(int))
    y = (np.arange(10) < 3).astype(int)
    with pytest.warns(RuntimeWarning):
        Xr, yr = smote_oversample(X, y, SmoteConfig(k_neighbors=5))
    assert np.sum(yr == 1) == 7


def test_config_validation():
    with pytest.raises(ConfigError):
        SmoteConfig(k_neighbors=0)
    with pytest.raises(ConfigError):
        SmoteConfig(target_ratio=1.5)


def test_fold_guard(rng):
    X = rng.random((30, 2))
    y = (np.arange(30) < 6).astype(int)
    train = Features(X, y, ("a", "b"), "primary", "train", {})
    out = smote_fold(train, SmoteConfig())
    assert out.meta["n_synthetic"] == 18
    for prov, part in (("primary", "test"), ("external", "full"), ("external", "train")):
        with pytest.raises(LeakageError):
            smote_fold(Features(X, y, ("a", "b"), prov, part, {}), SmoteConfig())
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        smote_fold(train, SmoteConfig())


def test_synthetic_draws_come_from_per_row_streams():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(40, 3))
    y = np.r_[np.ones(7, int), np.zeros(33, int)]
    k, seed = 3, 99
    Xr, _, origin = smote_oversample(X, y, SmoteConfig(k_neighbors=k, seed=seed),
                                     return_origin=True)
    n_min, n_syn = 7, 26
    Xm = X[:n_min]
    d = ((Xm[:, None] - Xm[None]) ** 2).sum(-1)
    np.fill_diagonal(d, np.inf)
    nn = np.argsort(d, axis=1, kind="stable")[:, :k]
    expected = np.empty((n_syn, 3))
    for r in range(n_min):
        js = list(range(r, n_syn, n_min))
        g = np.random.default_rng([seed, r])
        pick, u = g.integers(0, k, size=len(js)), g.random(len(js))
        for j, p, w in zip(js, pick, u):
            expected[j] = Xm[r] + w * (Xm[nn[r, p]] - Xm[r])
    np.testing.assert_array_equal(Xr[40:], expected)
