"""The four base learners and the two soft-voting hybrids on two Gaussian classes.

The classes differ by 0.5 per coordinate in 4 dimensions, so no scorer can
beat ``Phi(0.5 * sqrt(4) / sqrt(2)) ~ 0.760`` AUROC. Fully grown trees chase
noise here; shallower ones do not.

Run with ``python demos/02_learners_on_gaussians.py`` (about a minute).
"""

import time

from hybridrisk.ensemble import VotingEnsemble
from hybridrisk.learners import (CalibratedSvm, fit_platt, train_gbt, train_logistic,
                                 train_random_forest, train_svm)
from hybridrisk.metrics import auroc, brier
from hybridrisk.synthetic import bayes_auroc, gaussian_cohort

X, y = gaussian_cohort(4000, 4, 0.5, seed=0)
Xt, yt = gaussian_cohort(20000, 4, 0.5, seed=1)
print(f"Bayes AUROC {bayes_auroc(4, 0.5):.4f}")


def show(name, model, t0):
    p = model.predict_proba(Xt)
    print(f"{name:22s} AUROC {auroc(p, yt):.4f}  Brier {brier(p, yt):.4f}  "
          f"({time.perf_counter() - t0:.1f}s)")


# %% linear models
t0 = time.perf_counter()
lr = train_logistic(X, y)
show("logistic", lr, t0)

t0 = time.perf_counter()
svm = train_svm(X, y)
# raw margins are not probabilities; Platt maps them through a fitted sigmoid
svm_cal = CalibratedSvm(svm, fit_platt(svm.decision_function(X), y))
show("RBF SVM + Platt", svm_cal, t0)

# %% tree ensembles at their defaults
t0 = time.perf_counter()
rf = train_random_forest(X, y, seed=3)
show("random forest", rf, t0)
t0 = time.perf_counter()
gbt = train_gbt(X, y, seed=4)
show("boosted trees", gbt, t0)

# %% hybrids: weighted mean of member probabilities
show("XGB-RF vote", VotingEnsemble((gbt, rf), (0.5, 0.5)), time.perf_counter())
show("SVM-LR vote", VotingEnsemble((svm_cal, lr), (0.5, 0.5)), time.perf_counter())

# %% the same trees with capacity matched to a weak signal
t0 = time.perf_counter()
show("forest, min_leaf=50", train_random_forest(X, y, n_trees=200, min_leaf=50, seed=3), t0)
t0 = time.perf_counter()
show("boosting, depth 2",
     train_gbt(X, y, n_rounds=150, max_depth=2, learning_rate=0.05, seed=4), t0)
