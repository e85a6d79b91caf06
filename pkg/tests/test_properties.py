import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hybridrisk.ensemble import classify, combine
from hybridrisk.metrics import auprc, auroc, brier, roc_curve
from hybridrisk.smote import SmoteConfig, smote_oversample
from hybridrisk.stats import delong_test, mcnemar_from_counts, mcnemar_test
from oracles import brute_ap

grid = st.integers(0, 8).map(lambda k: k / 8)


@st.composite
def scored(draw, min_size=2, max_size=60):
    n = draw(st.integers(min_size, max_size))
    s = draw(st.lists(grid, min_size=n, max_size=n))
    y = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    y[0], y[1] = 0, 1
    return np.array(s), np.array(y)


@given(scored())
def test_auroc_rank_equals_trapezoid(case):
    s, y = case
    a = auroc(s, y)
    assert 0.0 <= a <= 1.0
    assert abs(roc_curve(s, y).area - a) <= 1e-12


@given(scored())
def test_ap_equals_enumeration(case):
    s, y = case
    assert auprc(s, y) == brute_ap(s, y)


@given(scored())
def test_constant_score_identities(case):
    _, y = case
    c = np.full(len(y), 0.25)
    assert auroc(c, y) == 0.5
    assert auprc(c, y) == brute_ap(c, y)
    assert abs(auprc(c, y) - y.mean()) <= 1e-15
    assert abs(brier(c, y) - (0.0625 + y.mean() * 0.5)) <= 1e-15


@given(st.integers(0, 200), st.integers(0, 200), st.sampled_from([None, True, False]))
def test_mcnemar_p_in_unit_interval(b, c, exact):
    r = mcnemar_from_counts(b, c, exact)
    assert 0.0 <= r.p_value <= 1.0
    assert r.p_value == mcnemar_from_counts(c, b, exact).p_value


@settings(max_examples=50)
@given(scored(min_size=4), st.integers(0, 2**31 - 1))
def test_delong_p_in_unit_interval(case, seed):
    s, y = case
    other = np.random.default_rng(seed).permutation(s)
    r = delong_test(s, other, y)
    assert 0.0 <= r.p_value <= 1.0
    pa, pb = classify(s, 0.5), classify(other, 0.5)
    assert 0.0 <= mcnemar_test(pa, pb, y).p_value <= 1.0


@given(arrays(float, (20, 3), elements=st.floats(0, 1)),
       st.lists(st.floats(0, 5), min_size=3, max_size=3).filter(lambda w: sum(w) > 0.01))
def test_soft_vote_is_convex(P, w):
    p = combine(P, w)
    assert np.all(p >= P.min(axis=1) - 1e-12) and np.all(p <= P.max(axis=1) + 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 15), st.integers(1, 6))
def test_smote_points_between_parent_and_neighbor(seed, n_min, k):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_min + 25, 3))
    y = np.r_[np.ones(n_min, int), np.zeros(25, int)]
    cfg = SmoteConfig(k_neighbors=min(k, n_min - 1), seed=seed)
    Xr, yr, o = smote_oversample(X, y, cfg, return_origin=True)
    a, b = X[o["parent"]], X[o["neighbor"]]
    s = Xr[len(X):]
    assert np.all((s >= np.minimum(a, b)) & (s <= np.maximum(a, b)))
    assert np.sum(yr == 1) == np.sum(yr == 0)
