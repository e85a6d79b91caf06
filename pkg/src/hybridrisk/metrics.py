"""Thresholded metrics, ROC/PR curves, Brier score and calibration summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logit

from .errors import DegenerateScores, NoPositives, SingleClass


@dataclass(frozen=True)
class ScoredPredictions:
    scores: np.ndarray
    labels: np.ndarray
    cohort: str = ""

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        y = np.asarray(self.labels).astype(np.int64)
        if s.shape != y.shape or s.ndim != 1 or len(s) == 0:
            raise ValueError("scores and labels must be equal-length non-empty vectors")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0/1")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return len(self.labels)

    @property
    def prevalence(self):
        return float(self.labels.mean())


def _sp(scores, labels=None) -> ScoredPredictions:
    if isinstance(scores, ScoredPredictions):
        return scores
    return ScoredPredictions(scores, labels)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self):
        return self.tp + self.fp + self.fn + self.tn


def confusion_at_threshold(sp, tau: float = 0.5, labels=None) -> ConfusionCounts:
    sp = _sp(sp, labels)
    pred = sp.scores >= tau
    y = sp.labels == 1
    return ConfusionCounts(int(np.sum(pred & y)), int(np.sum(pred & ~y)),
                           int(np.sum(~pred & y)), int(np.sum(~pred & ~y)))


def thresholded_metrics(c: ConfusionCounts) -> dict[str, float]:
    """Accuracy, precision, recall, F1; empty denominators give 0."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"accuracy": (c.tp + c.tn) / c.n, "precision": precision, "recall": recall,
            "f1": f1}


def midranks(x) -> np.ndarray:
    """1-based ranks with ties sharing the average rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    n = len(x)
    # boundaries of runs of equal values
    new = np.empty(n, dtype=bool)
    new[0] = True
    new[1:] = xs[1:] != xs[:-1]
    starts = np.flatnonzero(new)
    ends = np.append(starts[1:], n)
    avg = 0.5 * (starts + ends - 1) + 1.0
    ranks_sorted = np.repeat(avg, ends - starts)
    out = np.empty(n)
    out[order] = ranks_sorted
    return out


def _check_both(y):
    n1 = int(y.sum())
    if n1 == 0 or n1 == len(y):
        raise SingleClass("AUROC needs both classes")
    return n1, len(y) - n1


def auroc(sp, labels=None) -> float:
    """Mann-Whitney AUROC with midranks (ties count one half)."""
    sp = _sp(sp, labels)
    n1, n0 = _check_both(sp.labels)
    r = midranks(sp.scores)
    return float((r[sp.labels == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


@dataclass(frozen=True)
class CurveSeries:
    x: np.ndarray
    y: np.ndarray
    thresholds: np.ndarray
    area: float
    kind: str
    baseline: float | None = None

    def to_rows(self):
        xn, yn = ("fpr", "tpr") if self.kind == "roc" else ("recall", "precision")
        head = [xn, yn, "threshold"]
        return head, [[float(a), float(b), float(t)]
                      for a, b, t in zip(self.x, self.y, self.thresholds)]


def _distinct_desc(sp: ScoredPredictions):
    """Cumulative TP/FP counts at each distinct threshold, high to low."""
    order = np.argsort(-sp.scores, kind="mergesort")
    s = sp.scores[order]
    y = sp.labels[order]
    last = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(y)[last]
    fp = np.cumsum(1 - y)[last]
    return s[last], tp, fp


def roc_curve(sp, labels=None) -> CurveSeries:
    sp = _sp(sp, labels)
    n1, n0 = _check_both(sp.labels)
    thr, tp, fp = _distinct_desc(sp)
    tpr = np.r_[0.0, tp / n1]
    fpr = np.r_[0.0, fp / n0]
    area = trapezoid_auroc(fpr, tpr)
    return CurveSeries(fpr, tpr, np.r_[np.inf, thr], area, "roc")


def trapezoid_auroc(fpr, tpr) -> float:
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def pr_curve(sp, labels=None) -> CurveSeries:
    """Step-wise PR curve over distinct thresholds and its average precision."""
    sp = _sp(sp, labels)
    n1 = int(sp.labels.sum())
    if n1 == 0:
        raise NoPositives("precision-recall needs at least one positive")
    thr, tp, fp = _distinct_desc(sp)
    precision = tp / (tp + fp)
    recall = tp / n1
    dtp = np.diff(np.r_[0, tp])
    ap = _exact_ratio_sum(dtp * tp, tp + fp, n1)
    return CurveSeries(recall, precision, thr, ap, "pr", sp.prevalence)


def _two_prod(a, b):
    """``a * b`` as an unevaluated sum ``p + e`` (Dekker's product)."""
    p = a * b
    c = 134217729.0 * a  # 2**27 + 1
    ah = c - (c - a)
    al = a - ah
    c = 134217729.0 * b
    bh = c - (c - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _div_residual(a, d):
    """Quotient ``a / d`` plus its correction term; the remainder is exact."""
    q = a / d
    p, e = _two_prod(q, d)
    return q, ((a - p) - e) / d


def _exact_ratio_sum(num, den, scale) -> float:
    """``sum(num / den) / scale`` for integer arrays, rounded once.

    Quotients carry their division remainders and are summed with ``fsum``,
    so the result matches the exact rational value to the last bit in all
    but pathological halfway cases.
    """
    q, c = _div_residual(np.asarray(num, dtype=float), np.asarray(den, dtype=float))
    parts = np.r_[q, c].tolist()
    hi = math.fsum(parts)
    lo = math.fsum(parts + [-hi])
    q2, c2 = _div_residual(np.array([hi]), float(scale))
    p, e = _two_prod(q2, float(scale))
    r = ((hi - p[0]) - e[0]) + lo
    return float(q2[0] + r / scale)


def auprc(sp, labels=None) -> float:
    """Average precision ``sum_k (R_k - R_{k-1}) P_k`` with no interpolation.

    Computed as ``sum_k dTP_k * TP_k / (TP_k + FP_k) / N+`` over distinct
    thresholds and correctly rounded, so rational cases such as 5/6 come out
    as the nearest double.
    """
    return pr_curve(sp, labels).area


def brier(sp, labels=None) -> float:
    sp = _sp(sp, labels)
    return float(np.mean((sp.scores - sp.labels) ** 2))


def calibration_fit(sp, labels=None, eps: float = 1e-6) -> tuple[float, float]:
    """Slope and intercept of ``logit P(y=1) = a + b * logit(score)``.

    Scores are clipped to ``[eps, 1 - eps]`` before the logit. Returns
    ``(slope, intercept)``; perfect calibration gives roughly ``(1, 0)``.
    """
    from .learners.logistic import train_logistic

    sp = _sp(sp, labels)
    s = np.clip(sp.scores, eps, 1 - eps)
    if np.ptp(s) == 0.0:
        raise DegenerateScores("all scores are equal after clipping")
    _check_both(sp.labels)
    m = train_logistic(logit(s)[:, None], sp.labels, l2=0.0, tol=1e-10, max_iter=200)
    return float(m.coef[0]), float(m.intercept)


@dataclass(frozen=True)
class ReliabilityBins:
    edges: np.ndarray
    mean_predicted: np.ndarray
    observed: np.ndarray
    counts: np.ndarray

    def to_dict(self):
        nan = lambda v: None if math.isnan(v) else float(v)  # noqa: E731
        return {"edges": self.edges.tolist(),
                "mean_predicted": [nan(v) for v in self.mean_predicted],
                "observed": [nan(v) for v in self.observed],
                "counts": self.counts.tolist()}


def reliability_bins(sp, n_bins: int = 10, labels=None) -> ReliabilityBins:
    """Equal-width bins on [0, 1]; empty bins report count 0 and NaN means."""
    sp = _sp(sp, labels)
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.clip(np.floor(sp.scores * n_bins).astype(np.int64), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=sp.scores, minlength=n_bins)
    pos = np.bincount(idx, weights=sp.labels, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_pred = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        observed = np.where(counts > 0, pos / np.maximum(counts, 1), np.nan)
    return ReliabilityBins(edges, mean_pred, observed, counts)


@dataclass(frozen=True)
class CalibrationSummary:
    brier: float
    slope: float | None
    intercept: float | None
    bins: ReliabilityBins


def calibration_summary(sp, n_bins: int = 10, labels=None) -> CalibrationSummary:
    sp = _sp(sp, labels)
    try:
        slope, intercept = calibration_fit(sp)
    except (DegenerateScores, SingleClass, ArithmeticError):
        slope = intercept = None
    return CalibrationSummary(brier(sp), slope, intercept, reliability_bins(sp, n_bins))
