"""Slow, obviously-correct reference implementations used only by the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def brute_auroc(scores, labels):
    """Pairwise count: a positive above a negative scores 1, a tie scores 1/2."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = Fraction(0)
    for a, b in itertools.product(pos, neg):
        total += 1 if a > b else Fraction(1, 2) if a == b else 0
    return total / (len(pos) * len(neg))


def brute_ap_exact(scores, labels):
    """AP as an exact fraction, enumerating every distinct threshold."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    npos = int(np.sum(y == 1))
    thresholds = np.unique(s)[::-1]
    above = s[None, :] >= thresholds[:, None]
    tp = (above & (y == 1)).sum(axis=1)
    n_above = above.sum(axis=1)
    total = Fraction(0)
    prev_tp = 0
    for t, n in zip(tp.tolist(), n_above.tolist()):
        total += Fraction((t - prev_tp) * t, n)
        prev_tp = t
    return total / npos


def brute_ap(scores, labels):
    """Nearest double to the exact AP."""
    return float(brute_ap_exact(scores, labels))


def _gini_score(w0, w1):
    w = w0 + w1
    return (w0 * w0 + w1 * w1) / w if w > 0 else 0.0


def brute_gini_tree(X, y, max_depth, min_leaf=1):
    """Recursive exact CART with the same tie rules (lowest feature, then threshold).

    Returns a prediction function.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)

    def build(idx, depth):
        w1 = float(np.sum(y[idx] == 1))
        w0 = len(idx) - w1
        leaf = ("leaf", w1 / len(idx))
        if depth >= max_depth or w0 == 0 or w1 == 0 or len(idx) < 2 * min_leaf:
            return leaf
        base = _gini_score(w0, w1)
        best = None
        for f in range(X.shape[1]):
            vals = np.unique(X[idx, f])
            for a, b in zip(vals[:-1], vals[1:]):
                thr = 0.5 * (a + b)
                left = idx[X[idx, f] <= thr]
                right = idx[X[idx, f] > thr]
                if len(left) < min_leaf or len(right) < min_leaf:
                    continue
                l1 = float(np.sum(y[left] == 1))
                r1 = float(np.sum(y[right] == 1))
                g = (_gini_score(len(left) - l1, l1) + _gini_score(len(right) - r1, r1) - base)
                if best is None or g > best[0] + 1e-12:
                    best = (g, f, thr, left, right)
        if best is None:
            return leaf
        _, f, thr, left, right = best
        return ("split", f, thr, build(left, depth + 1), build(right, depth + 1))

    root = build(np.arange(len(y)), 0)

    def predict(Z):
        out = []
        for z in np.asarray(Z, dtype=float):
            node = root
            while node[0] == "split":
                node = node[3] if z[node[1]] <= node[2] else node[4]
            out.append(node[1])
        return np.array(out)

    return predict
