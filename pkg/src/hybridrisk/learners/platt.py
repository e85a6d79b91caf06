"""Platt scaling: a sigmoid fitted on classifier margins."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class PlattCalibrator:
    """``P(y=1 | f) = sigmoid(slope * f + intercept)``."""

    slope: float
    intercept: float

    def __call__(self, margins):
        return apply_platt(self, margins)

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["slope"]), float(d["intercept"]))


def fit_platt(margins, y, tol: float = 1e-10, max_iter: int = 100) -> PlattCalibrator:
    """Newton fit with Platt's smoothed targets and backtracking.

    Targets are ``(N+ + 1) / (N+ + 2)`` for positives and ``1 / (N- + 2)``
    for negatives, which keeps the fit finite on separable margins. Constant
    margins yield a constant calibrator at the training prevalence.
    """
    f = np.asarray(margins, dtype=float)
    y = np.asarray(y)
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    if np.ptp(f) == 0.0:
        warnings.warn("degenerate margins; calibrator returns the training prevalence",
                      RuntimeWarning, stacklevel=2)
        prev = min(max(n_pos / len(y), 1e-12), 1 - 1e-12)
        return PlattCalibrator(0.0, float(np.log(prev / (1 - prev))))
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def loss(a, b):
        z = a * f + b
        return np.sum(np.logaddexp(0.0, z) - t * z)

    a, b = 0.0, float(np.log((n_pos + 1.0) / (n_neg + 1.0)))
    cur = loss(a, b)
    for _ in range(max_iter):
        p = expit(a * f + b)
        d = p - t
        ga, gb = np.dot(d, f), d.sum()
        if max(abs(ga), abs(gb)) < tol * max(1.0, len(f)):
            break
        w = p * (1 - p)
        h11 = np.dot(w, f * f) + 1e-12
        h22 = w.sum() + 1e-12
        h12 = np.dot(w, f)
        det = h11 * h22 - h12 * h12
        da = -(h22 * ga - h12 * gb) / det
        db = -(-h12 * ga + h11 * gb) / det
        step = 1.0
        while step >= 1e-10:
            na, nb = a + step * da, b + step * db
            new = loss(na, nb)
            if new < cur + 1e-4 * step * (ga * da + gb * db):
                break
            step /= 2
        else:
            break
        a, b, cur = na, nb, new
    return PlattCalibrator(float(a), float(b))


def apply_platt(c: PlattCalibrator, margins):
    return expit(c.slope * np.asarray(margins, dtype=float) + c.intercept)
