"""Bootstrap confidence intervals and paired tests (DeLong, McNemar)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as _st

from .errors import MetricUndefinedOnResample, SingleClass
from .metrics import ScoredPredictions, auroc, midranks


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    lower: float
    upper: float
    B: int
    seed: int
    redraws: int = 0
    replicates: np.ndarray = field(default=None, repr=False, compare=False)

    def to_list(self):
        return [self.lower, self.upper]


@dataclass(frozen=True)
class PairedTestResult:
    statistic: float
    p_value: float
    method: str
    effect: dict


def _stratified_draw(rng, idx_pos, idx_neg):
    return np.concatenate([idx_pos[rng.integers(0, len(idx_pos), len(idx_pos))],
                           idx_neg[rng.integers(0, len(idx_neg), len(idx_neg))]])


def bootstrap_replicates(statistic: Callable[[np.ndarray], float], labels, B: int = 1000,
                         seed: int = 0, stratified: bool = True,
                         max_redraw_fraction: float = 0.10):
    """Evaluate ``statistic(rows)`` on ``B`` resamples of row indices.

    Resample ``b`` draws from its own generator spawned from ``seed``, so the
    replicates do not depend on evaluation order. A statistic raising
    ``ValueError`` on a resample triggers a redraw from the same stream; more
    than ``max_redraw_fraction * B`` redraws aborts.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    y = np.asarray(labels)
    idx_pos = np.flatnonzero(y == 1)
    idx_neg = np.flatnonzero(y != 1)
    n = len(y)
    out = np.empty(B)
    redraws = 0
    limit = max_redraw_fraction * B
    for b, child in enumerate(np.random.SeedSequence(seed).spawn(B)):
        rng = np.random.default_rng(child)
        while True:
            if stratified and len(idx_pos) and len(idx_neg):
                rows = _stratified_draw(rng, idx_pos, idx_neg)
            else:
                rows = rng.integers(0, n, n)
            try:
                out[b] = statistic(rows)
                break
            except ValueError:
                redraws += 1
                if redraws > limit:
                    raise MetricUndefinedOnResample(
                        f"metric undefined on {redraws} resamples (> {limit:.0f})")
    return out, redraws


def bootstrap_ci(metric: Callable[[ScoredPredictions], float], sp: ScoredPredictions,
                 B: int = 1000, seed: int = 0, level: float = 0.95) -> BootstrapResult:
    """Percentile bootstrap interval for ``metric`` with label-stratified resampling."""
    point = metric(sp)

    def stat(rows):
        return metric(ScoredPredictions(sp.scores[rows], sp.labels[rows], sp.cohort))

    reps, redraws = bootstrap_replicates(stat, sp.labels, B, seed)
    a = (1 - level) / 2
    lo, hi = np.quantile(reps, [a, 1 - a])
    return BootstrapResult(float(point), float(lo), float(hi), B, seed, redraws, reps)


def delong_components(scores, labels):
    """Structural components (V10 over positives, V01 over negatives) via midranks."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    pos, neg = s[y == 1], s[y != 1]
    m, n = len(pos), len(neg)
    tz = midranks(np.r_[pos, neg])
    tx = midranks(pos)
    ty = midranks(neg)
    v10 = (tz[:m] - tx) / n
    v01 = 1.0 - (tz[m:] - ty) / m
    return v10, v01


def delong_test(scores_a, scores_b, labels) -> PairedTestResult:
    """Two-sided DeLong test of ``AUC_a - AUC_b`` on the same cases."""
    y = np.asarray(labels)
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    m = int(np.sum(y == 1))
    n = len(y) - m
    if m == 0 or n == 0:
        raise SingleClass("DeLong needs both classes")
    auc_a, auc_b = auroc(a, y), auroc(b, y)
    delta = auc_a - auc_b
    var = delong_variance(a, b, y)
    effect = {"auc_a": auc_a, "auc_b": auc_b, "delta_auc": delta, "variance": var}
    if np.array_equal(a, b) or var <= 0.0:
        p = 1.0 if delta == 0.0 else 0.0
        return PairedTestResult(0.0 if delta == 0.0 else math.copysign(math.inf, delta),
                                p, "delong", effect)
    z = delta / math.sqrt(var)
    p = float(min(1.0, 2.0 * _st.norm.sf(abs(z))))
    return PairedTestResult(float(z), p, "delong", effect)


def delong_variance(a, b, labels) -> float:
    """Variance of ``AUC_a - AUC_b`` from the paired structural components."""
    y = np.asarray(labels)
    a10, a01 = delong_components(a, y)
    b10, b01 = delong_components(b, y)
    m, n = len(a10), len(a01)
    s10 = np.cov(np.vstack([a10, b10])) if m > 1 else np.zeros((2, 2))
    s01 = np.cov(np.vstack([a01, b01])) if n > 1 else np.zeros((2, 2))
    c = np.array([1.0, -1.0])
    return float(c @ s10 @ c / m + c @ s01 @ c / n)


def mcnemar_from_counts(b: int, c: int, exact: bool | None = None) -> PairedTestResult:
    """McNemar test on discordant counts.

    ``statistic`` is always the continuity-corrected chi-square
    ``(|b - c| - 1)^2 / (b + c)``. The p-value uses that statistic with one
    degree of freedom when ``b + c >= 25`` and the exact two-sided binomial
    test otherwise (``exact`` forces either path).
    """
    b, c = int(b), int(c)
    nd = b + c
    effect = {"b": b, "c": c}
    if nd == 0:
        return PairedTestResult(0.0, 1.0, "mcnemar", effect)
    stat = (abs(b - c) - 1) ** 2 / nd
    if exact is None:
        exact = nd < 25
    if exact:
        p = min(1.0, 2.0 * _st.binom.cdf(min(b, c), nd, 0.5))
        method = "mcnemar-exact"
    else:
        p = float(_st.chi2.sf(stat, 1))
        method = "mcnemar-chi2"
    return PairedTestResult(float(stat), float(p), method, effect)


def mcnemar_test(pred_a, pred_b, labels, exact: bool | None = None) -> PairedTestResult:
    """Paired accuracy comparison. ``b``: A right and B wrong; ``c``: the reverse."""
    pa, pb, y = np.asarray(pred_a), np.asarray(pred_b), np.asarray(labels)
    if not (pa.shape == pb.shape == y.shape):
        raise ValueError("predictions and labels must have equal length")
    ra, rb = pa == y, pb == y
    return mcnemar_from_counts(int(np.sum(ra & ~rb)), int(np.sum(~ra & rb)), exact)
