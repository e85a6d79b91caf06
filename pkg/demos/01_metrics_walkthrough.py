"""Metrics walkthrough: ranking, precision-recall, calibration and paired tests.

Run with ``python demos/01_metrics_walkthrough.py``.
"""

import numpy as np
from scipy.special import expit

from hybridrisk.metrics import (ScoredPredictions, auprc, auroc, brier, calibration_fit,
                                pr_curve, reliability_bins, roc_curve)
from hybridrisk.stats import bootstrap_ci, delong_test, mcnemar_test

# %% four cases, two of each class
scores = np.array([0.1, 0.4, 0.35, 0.8])
labels = np.array([0, 0, 1, 1])
print("AUROC", auroc(scores, labels))  # 3 of 4 positive/negative pairs ordered correctly

# the rank statistic equals the area under the step ROC
roc = roc_curve(scores, labels)
print("ROC points", list(zip(roc.x, roc.y)), "area", roc.area)

# %% average precision is a step sum, not a trapezoid
s, y = np.array([0.9, 0.8, 0.7]), np.array([1, 0, 1])
pr = pr_curve(s, y)
print("precision", pr.y, "recall", pr.x, "AP", auprc(s, y))  # 1*1/2 + 2/3*1/2

# %% a noisy cohort at 9% prevalence
rng = np.random.default_rng(0)
n = 3000
y = (rng.random(n) < 0.09).astype(int)
z = 1.4 * y + rng.normal(size=n)
# posterior logit: log(0.09 / 0.91) + 1.4 z - 1.4^2 / 2
p_good = expit(1.4 * z - 3.29)
p_sharp = expit(2.5 * (1.4 * z - 3.29))  # same ranking, overconfident
sp = ScoredPredictions(p_good, y)
print("prevalence", sp.prevalence, "PR baseline for a random ranker")
for name, p in (("calibrated", p_good), ("overconfident", p_sharp)):
    slope, intercept = calibration_fit(p, y)
    print(f"{name:14s} AUROC {auroc(p, y):.4f} AUPRC {auprc(p, y):.4f} "
          f"Brier {brier(p, y):.4f} slope {slope:.2f} intercept {intercept:.2f}")
# monotone transforms leave AUROC and AUPRC alone and move every calibration number

bins = reliability_bins(p_sharp, 10, y)
print("reliability (mean predicted, observed, count)")
for mp, ob, c in zip(bins.mean_predicted, bins.observed, bins.counts):
    print(f"  {mp:.3f} {ob:.3f} {c}")

# %% uncertainty and paired comparisons
ci = bootstrap_ci(auroc, sp, B=500, seed=1)
print(f"AUROC {ci.point:.4f} 95% CI [{ci.lower:.4f}, {ci.upper:.4f}]")

p_weak = expit(0.6 * y + rng.normal(size=n) - 2.5)
d = delong_test(p_good, p_weak, y)
print(f"DeLong delta {d.effect['delta_auc']:.4f} z {d.statistic:.2f} p {d.p_value:.2e}")
m = mcnemar_test(p_good >= 0.5, p_weak >= 0.5, y)
print(f"McNemar b {m.effect['b']} c {m.effect['c']} statistic {m.statistic:.3f} "
      f"p {m.p_value:.3f} ({m.method})")
