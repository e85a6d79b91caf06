import math
import warnings

import numpy as np
import pytest
from scipy.optimize import approx_fprime, minimize_scalar
from scipy.special import expit

from hybridrisk.errors import DimensionMismatch, SeparationDetected
from hybridrisk.learners import (CalibratedSvm, GradientBoostingModel, LogisticModel,
                                 PlattCalibrator, RandomForestModel, SvmModel, apply_platt,
                                 fit_platt, model_from_dict, predict_logistic, rbf_kernel,
                                 svm_decision_value, train_gbt, train_logistic,
                                 train_random_forest, train_svm, train_tree)
from hybridrisk.learners.boosting import logistic_loss
from hybridrisk.learners.logistic import gradient, objective
from hybridrisk.metrics import auroc
from oracles import brute_gini_tree

# --- logistic regression ---


def test_logistic_uninformative_balanced():
    X = np.tile([[0.0], [1.0]], (50, 1))
    y = np.tile([0, 1, 1, 0], 25)
    m = train_logistic(X, y)
    assert abs(m.intercept) < 1e-8 and np.abs(m.coef).max() < 1e-8
    assert np.allclose(m.predict_proba(X), 0.5)


def test_logistic_perfectly_predictive_with_penalty():
    x = np.array([0.0, 0.0, 1.0, 1.0, 0.0, 1.0])[:, None]
    y = x[:, 0].astype(int)
    m = train_logistic(x, y, l2=0.1)
    assert m.coef[0] > 0
    assert auroc(m.predict_proba(x), y) == 1.0


def test_logistic_gradient_matches_finite_differences(rng):
    X = rng.normal(size=(300, 3))
    y = (rng.random(300) < expit(X @ [1.0, -0.5, 0.2])).astype(float)
    l2 = 0.05
    m = train_logistic(X, y, l2=l2)
    assert m.grad_norm <= 1e-8
    X1 = np.hstack([np.ones((300, 1)), X])
    beta = np.r_[m.intercept, m.coef]
    # at a generic point the analytic gradient matches finite differences
    b0 = beta + 0.3
    fd = approx_fprime(b0, objective, 1e-7, X1, y, l2)
    an = gradient(b0, X1, y, l2)
    assert np.allclose(an, fd, rtol=1e-6, atol=1e-7)
    fd_opt = approx_fprime(beta, objective, 1e-7, X1, y, l2)
    assert np.abs(fd_opt).max() < 1e-6


def test_logistic_prediction_formula_and_dimensions():
    m = LogisticModel(0.0, np.array([1.0]))
    assert predict_logistic(m, [[1.0]])[0] == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)
    assert LogisticModel(0.0, np.zeros(2)).predict_proba([[3.0, -2.0]])[0] == 0.5
    probs = [LogisticModel(b, np.zeros(1)).predict_proba([[0.0]])[0] for b in (1, 5, 20)]
    assert probs[0] < probs[1] < probs[2] <= 1.0
    with pytest.raises(DimensionMismatch):
        m.predict_proba([[1.0, 2.0]])


def test_logistic_separation_detected_without_penalty():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    with pytest.raises(SeparationDetected):
        train_logistic(x, [0, 0, 1, 1], l2=0.0)


# --- SVM ---


def test_rbf_kernel_properties(rng):
    A, B = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
    assert np.array_equal(rbf_kernel(A, B, 0.7), rbf_kernel(B, A, 0.7).T)
    assert np.allclose(np.diag(rbf_kernel(A, A, 0.7)), 1.0)


def test_svm_two_points():
    m = train_svm([[0.0], [1.0]], [-1, 1], C=10.0, gamma=0.5)
    assert (svm_decision_value(m, [[0.0], [1.0]]) * [-1, 1] > 0).all()


def test_svm_xor():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    m = train_svm(X, y, C=10.0, gamma=2.0)
    assert (m.predict(X) == y).all()


def test_svm_dual_feasibility(rng):
    X = rng.normal(size=(300, 2))
    y = (X[:, 0] * X[:, 1] > 0).astype(int)
    C = 2.0
    m = train_svm(X, y, C=C, gamma=1.0, tol=1e-4)
    assert m.converged
    assert abs(m.dual_coef.sum()) <= 1e-6
    assert (m.alpha > 0).all() and (m.alpha <= C + 1e-12).all()
    assert (m.predict(X) == y).mean() > 0.9


def test_svm_single_support_vector_margin():
    m = SvmModel(np.array([[0.0, 0.0], [50.0, 50.0]]), np.array([1.0, -1.0]), 0.0, 1.0, 1.0)
    assert svm_decision_value(m, [[0.0, 0.0]])[0] > 0
    with pytest.raises(DimensionMismatch):
        m.decision_function([[0.0]])


def test_svm_nonconvergence_warns(rng):
    X = rng.normal(size=(60, 2))
    y = (rng.random(60) < 0.5).astype(int)
    with pytest.warns(RuntimeWarning):
        m = train_svm(X, y, C=100.0, gamma=5.0, tol=1e-12, max_passes=0)
    assert not m.converged


def test_svm_large_problem_uses_row_cache(rng):
    X = rng.normal(size=(6100, 2))
    y = (X[:, 0] + 0.3 * rng.normal(size=6100) > 0).astype(int)
    m = train_svm(X, y, C=1.0, tol=1e-2)
    assert abs(m.dual_coef.sum()) <= 1e-6
    assert (m.predict(X) == y).mean() > 0.85


# --- Platt ---


def test_platt_separated_margins():
    f = np.r_[np.full(50, -8.0), np.full(50, 8.0)] + np.linspace(0, 0.1, 100)
    y = np.r_[np.zeros(50), np.ones(50)]
    c = fit_platt(f, y)
    p = apply_platt(c, f)
    assert ((p > 0) & (p < 1)).all()
    assert np.mean((p - y) ** 2) < 1e-3


def test_platt_constant_margins_give_prevalence():
    with pytest.warns(RuntimeWarning):
        c = fit_platt(np.ones(10), [1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
    assert np.allclose(c(np.array([-5.0, 0.0, 9.0])), 0.3)


def test_platt_recovers_slope(rng):
    f = rng.normal(size=5000)
    y = (rng.random(5000) < expit(2.0 * f)).astype(int)
    c = fit_platt(f, y)
    assert abs(c.slope - 2.0) <= 0.15


# --- trees ---


def test_tree_pure_node_is_leaf():
    t = train_tree(np.arange(5.0)[:, None], np.ones(5, dtype=int))
    assert t.n_nodes == 1 and t.value[0] == 1.0


def test_tree_one_dimensional_split():
    t = train_tree(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0, 0, 1, 1]))
    assert t.n_nodes == 3 and t.feature[0] == 0
    assert 2.0 < t.threshold[0] <= 3.0
    assert list(t.predict([[1.5], [3.5]])) == [0.0, 1.0]


def test_tree_tie_goes_to_lower_feature(rng):
    x = rng.random(40)
    X = np.column_stack([rng.random(40), x, x])
    y = (x > 0.5).astype(int)
    t = train_tree(X, y, max_depth=1)
    assert t.feature[0] == 1


def test_tree_matches_brute_force_cart(rng):
    for _ in range(15):
        X = rng.integers(0, 5, size=(120, 3)).astype(float)
        y = (rng.random(120) < 0.4).astype(int)
        for depth, min_leaf in ((3, 1), (4, 3)):
            t = train_tree(X, y, max_depth=depth, min_leaf=min_leaf)
            oracle = brute_gini_tree(X, y, depth, min_leaf)
            assert np.array_equal(t.predict(X), oracle(X))


def test_tree_serialization(rng):
    X = rng.random((50, 2))
    t = train_tree(X, (X[:, 0] > 0.4).astype(int))
    from hybridrisk.learners import Tree
    back = Tree.from_dict(t.to_dict())
    assert np.array_equal(back.predict(X), t.predict(X))


# --- random forest ---


def test_forest_single_tree_equals_cart(rng):
    X = rng.random((200, 3))
    y = (X[:, 0] + 0.3 * rng.random(200) > 0.6).astype(int)
    f = train_random_forest(X, y, n_trees=1, mtry=3, bootstrap=False, min_leaf=1)
    t = train_tree(X, y, min_leaf=1)
    Z = rng.random((100, 3))
    assert np.array_equal(f.predict_proba(Z), t.predict(Z))


def test_forest_probabilities_determinism_and_round_trip(rng):
    X = rng.normal(size=(300, 4))
    y = (X[:, 0] - X[:, 1] + rng.normal(size=300) > 0).astype(int)
    a = train_random_forest(X, y, n_trees=20, seed=3)
    b = train_random_forest(X, y, n_trees=20, seed=3)
    Z = rng.normal(size=(200, 4))
    pa = a.predict_proba(Z)
    assert ((pa >= 0) & (pa <= 1)).all()
    assert np.array_equal(pa, b.predict_proba(Z))
    back = model_from_dict(a.to_dict())
    assert isinstance(back, RandomForestModel)
    assert np.array_equal(back.predict_proba(Z), pa)
    assert a.mtry == 2
    assert not np.array_equal(pa, train_random_forest(X, y, n_trees=20, seed=4).predict_proba(Z))


# --- boosting ---


def test_gbt_one_round_root_leaf_is_newton_step(rng):
    y = (rng.random(100) < 0.3).astype(float)
    X = rng.random((100, 2))
    m = train_gbt(X, y, n_rounds=1, learning_rate=1.0, max_depth=0, reg_lambda=0.0)
    p0 = expit(m.base_score)
    g, h = (p0 - y).sum(), (p0 * (1 - p0)) * len(y)
    assert m.trees[0].value[0] == pytest.approx(-g / h, abs=1e-12)
    assert np.allclose(m.margin(X), m.base_score - g / h)


def test_gbt_leaf_weight_minimizes_round_objective(rng):
    y = (rng.random(80) < 0.4).astype(float)
    margin = rng.normal(size=80)
    p = expit(margin)
    g, h = p - y, p * (1 - p)
    lam = 1.0
    from hybridrisk.learners.tree import NewtonCriterion
    T = np.array([[g.sum(), h.sum(), 80.0]])
    w = NewtonCriterion(lam).leaf_value(T)[0]
    res = minimize_scalar(lambda v: g.sum() * v + 0.5 * (h.sum() + lam) * v * v,
                          bracket=(-5, 5), tol=1e-12)
    assert w == pytest.approx(res.x, abs=1e-8)


def test_gbt_training_loss_non_increasing(rng):
    X = rng.normal(size=(400, 3))
    y = (X[:, 0] ** 2 + X[:, 1] + rng.normal(size=400) > 1).astype(int)
    m = train_gbt(X, y, n_rounds=40, learning_rate=0.3, max_depth=3)
    losses = np.array(m.train_loss)
    assert np.all(np.diff(losses) <= 1e-12)
    assert losses[-1] == pytest.approx(logistic_loss(y, m.margin(X)))
    p = m.predict_proba(X)
    assert ((p > 0) & (p < 1)).all()
    back = model_from_dict(m.to_dict())
    assert isinstance(back, GradientBoostingModel)
    assert np.array_equal(back.predict_proba(X), p)


def test_calibrated_svm_wrapper(rng):
    X = rng.normal(size=(200, 2))
    y = (X[:, 0] > 0).astype(int)
    svm = train_svm(X, y)
    cal = CalibratedSvm(svm, fit_platt(svm.decision_function(X), y))
    p = cal.predict_proba(X)
    assert ((p > 0) & (p < 1)).all()
    assert auroc(p, y) == auroc(svm.decision_function(X), y)
    back = model_from_dict(svm.to_dict())
    assert np.allclose(back.decision_function(X), svm.decision_function(X))
    assert PlattCalibrator.from_dict(cal.platt.to_dict()) == cal.platt
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        model_from_dict(LogisticModel(0.1, np.array([1.0, 2.0])).to_dict())
