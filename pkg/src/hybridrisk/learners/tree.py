"""Exact greedy CART shared by the random forest and the boosted trees.

Trees are grown level by level. Every feature keeps a permutation of the
active rows that is grouped by node and sorted by feature value inside each
node, so scoring all candidate thresholds of a level costs one cumulative
sum per feature. Candidate thresholds are midpoints between consecutive
distinct values. Ties in gain go to the lowest feature index, then to the
lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch


@dataclass(frozen=True)
class Tree:
    """Flat binary tree; ``left[k] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int

    @property
    def n_nodes(self):
        return len(self.value)

    @property
    def is_leaf(self):
        return self.left < 0

    @property
    def depth(self):
        d = np.zeros(self.n_nodes, dtype=np.int64)
        for k in range(self.n_nodes):
            if self.left[k] >= 0:
                d[self.left[k]] = d[self.right[k]] = d[k] + 1
        return int(d.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row. Rows go left when ``x <= threshold``."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape}")
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            inner = self.left[node] >= 0
            if not inner.any():
                return node
            r = rows[inner]
            nd = node[inner]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=float),
            int(d["n_features"]),
        )


class GiniCriterion:
    """Weighted Gini impurity decrease; stats columns are (w0, w1, rows)."""

    def __init__(self, min_leaf=1):
        self.min_leaf = min_leaf

    def gain(self, L, T):
        R = T - L
        wl = L[:, 0] + L[:, 1]
        wr = R[:, 0] + R[:, 1]
        wt = T[:, 0] + T[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            g = ((L[:, 0] ** 2 + L[:, 1] ** 2) / wl
                 + (R[:, 0] ** 2 + R[:, 1] ** 2) / wr
                 - (T[:, 0] ** 2 + T[:, 1] ** 2) / wt)
        return g

    def admissible(self, L, T):
        R = T - L
        return (L[:, 2] >= self.min_leaf) & (R[:, 2] >= self.min_leaf)

    def splittable(self, T):
        return (T[:, 0] > 0) & (T[:, 1] > 0) & (T[:, 2] >= 2 * self.min_leaf)

    def accept(self, gain):
        # impure nodes split even on zero decrease (xor-like structure)
        return gain > -1e-12

    def leaf_value(self, T):
        return T[:, 1] / (T[:, 0] + T[:, 1])


class NewtonCriterion:
    """Second-order boosting gain; stats columns are (g, h, rows).

    ``gain = 1/2 [G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)] - gamma``
    and leaf weight ``-G / (H + lam)``.
    """

    def __init__(self, reg_lambda=1.0, gamma=0.0, min_child_weight=1.0, min_leaf=1):
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.min_child_weight = min_child_weight
        self.min_leaf = min_leaf

    def gain(self, L, T):
        R = T - L
        lam = self.reg_lambda
        with np.errstate(divide="ignore", invalid="ignore"):
            g = 0.5 * (L[:, 0] ** 2 / (L[:, 1] + lam) + R[:, 0] ** 2 / (R[:, 1] + lam)
                       - T[:, 0] ** 2 / (T[:, 1] + lam)) - self.gamma
        return g

    def admissible(self, L, T):
        R = T - L
        return ((L[:, 1] >= self.min_child_weight) & (R[:, 1] >= self.min_child_weight)
                & (L[:, 2] >= self.min_leaf) & (R[:, 2] >= self.min_leaf))

    def splittable(self, T):
        return T[:, 2] >= 2 * self.min_leaf

    def accept(self, gain):
        return gain > 0.0

    def leaf_value(self, T):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = -T[:, 0] / (T[:, 1] + self.reg_lambda)
        return np.nan_to_num(w)


def presort(X) -> np.ndarray:
    """Per-feature stable argsort, shape (p, n); reusable across trees."""
    X = np.asarray(X, dtype=float)
    return np.argsort(X, axis=0, kind="stable").T.copy()


def _exclusive_cumsum(a):
    out = np.zeros(len(a) + 1, dtype=a.dtype)
    np.cumsum(a, out=out[1:])
    return out


def grow_tree(X, stats, criterion, *, order=None, active=None, max_depth=None,
              mtry=None, rng=None, return_leaves=False):
    """Grow one tree greedily, level by level.

    ``stats`` is an (n, k) array of additive per-row statistics understood by
    ``criterion``. Rows with ``active == False`` (e.g. out-of-bag rows) are
    ignored. With ``mtry`` set, every node draws a random order of its
    non-constant features and scores the first ``mtry`` of them.
    """
    X = np.asarray(X, dtype=float)
    stats = np.asarray(stats, dtype=float)
    n, p = X.shape
    XT = np.ascontiguousarray(X.T)  # contiguous columns make the gathers cheap
    if order is None:
        order = presort(X)
    if active is None:
        perms = [order[f] for f in range(p)]
    else:
        perms = [order[f][active[order[f]]] for f in range(p)]
    max_depth = np.inf if max_depth is None else max_depth
    use_mtry = mtry is not None and mtry < p
    if use_mtry and rng is None:
        raise ValueError("mtry sampling needs an rng")

    feature, threshold, left, right, value = [], [], [], [], []
    leaf_of = np.full(n, -1, dtype=np.int64) if return_leaves else None

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(value) - 1

    level = [new_node()]
    lens = np.array([len(perms[0])])
    depth = 0
    while len(level):
        L = len(level)
        starts = _exclusive_cumsum(lens)[:-1]
        ends = starts + lens
        m = int(lens.sum())
        seg = np.repeat(np.arange(L), lens)
        T = np.add.reduceat(stats[perms[0]], starts, axis=0)
        vals = criterion.leaf_value(T)
        for k, node in enumerate(level):
            value[node] = float(vals[k])
        split_ok = criterion.splittable(T) & (depth < max_depth)

        best_gain = np.full(L, -np.inf)
        best_feat = np.full(L, -1, dtype=np.int64)
        best_thr = np.zeros(L)
        if split_ok.any():
            lo = np.stack([XT[f, perms[f][starts]] for f in range(p)], axis=1)
            hi = np.stack([XT[f, perms[f][ends - 1]] for f in range(p)], axis=1)
            varying = hi > lo
            if use_mtry:
                prio = rng.random((L, p))
                prio[~varying] = np.inf
                rank = np.argsort(np.argsort(prio, axis=1, kind="stable"), axis=1, kind="stable")
                chosen = varying & (rank < mtry)
            else:
                chosen = varying
            chosen &= split_ok[:, None]
            k_stats = stats.shape[1]
            for f in range(p):
                segs = np.flatnonzero(chosen[:, f])
                if not len(segs):
                    continue
                # only rows of nodes that drew this feature; grouping is preserved
                if len(segs) == L:
                    pf, sl = perms[f], lens
                else:
                    pf, sl = perms[f][chosen[seg, f]], lens[segs]
                mm = len(pf)
                st = _exclusive_cumsum(sl)[:-1]
                sg = np.repeat(np.arange(len(segs)), sl)
                v = XT[f][pf]
                cs = np.empty((mm + 1, k_stats))
                cs[0] = 0.0
                np.cumsum(stats[pf], axis=0, out=cs[1:])
                nxt = np.empty(mm)
                nxt[:-1] = v[1:]
                nxt[-1] = np.inf
                cut = v < nxt
                cut[st + sl - 1] = False
                q = np.flatnonzero(cut)
                if not len(q):
                    continue
                sq = sg[q]
                Tq = T[segs[sq]]
                Lq = cs[q + 1] - cs[st[sq]]
                ok = criterion.admissible(Lq, Tq)
                q, sq, Lq, Tq = q[ok], sq[ok], Lq[ok], Tq[ok]
                if not len(q):
                    continue
                gain = criterion.gain(Lq, Tq)
                gain[~np.isfinite(gain)] = -np.inf
                gmax = np.full(len(segs), -np.inf)
                np.maximum.at(gmax, sq, gain)
                hit = np.isfinite(gain) & (gain == gmax[sq])
                # q is increasing, so the first hit per node is the lowest threshold
                first = np.full(len(segs), -1, dtype=np.int64)
                hq = np.flatnonzero(hit)[::-1]
                first[sq[hq]] = q[hq]
                better = (first >= 0) & (gmax > best_gain[segs])
                if not better.any():
                    continue
                qb = first[better]
                a, b = v[qb], nxt[qb]
                thr = 0.5 * (a + b)
                thr = np.where((thr >= b) | (thr < a), a, thr)
                nodes = segs[better]
                best_gain[nodes] = gmax[better]
                best_feat[nodes] = f
                best_thr[nodes] = thr

        do_split = split_ok & (best_feat >= 0) & criterion.accept(best_gain)
        if return_leaves:
            for k in np.flatnonzero(~do_split):
                leaf_of[perms[0][starts[k]:ends[k]]] = level[k]
        if not do_split.any():
            break

        split_idx = np.flatnonzero(do_split)
        next_level = []
        for k in split_idx:
            node = level[k]
            feature[node] = int(best_feat[k])
            threshold[node] = float(best_thr[k])
            left[node] = new_node()
            right[node] = new_node()
            next_level.extend([left[node], right[node]])

        # child slot of each split node's rows: 2*rank (left) or 2*rank+1 (right)
        split_rank = np.full(L, -1, dtype=np.int64)
        split_rank[split_idx] = np.arange(len(split_idx))
        rows0 = perms[0]
        seg_rank = split_rank[seg]
        keep0 = seg_rank >= 0
        r0 = rows0[keep0]
        s0 = seg[keep0]
        go_left0 = X[r0, best_feat[s0]] <= best_thr[s0]
        child_of_row = np.full(n, -1, dtype=np.int64)
        child_of_row[r0] = 2 * seg_rank[keep0] + (~go_left0)
        n_children = 2 * len(split_idx)
        child_lens = np.bincount(child_of_row[r0], minlength=n_children)
        child_start = _exclusive_cumsum(child_lens)[:-1]

        for f in range(p):
            pf = perms[f][keep0]
            c = child_of_row[pf]
            # rows of one child are contiguous in the parent segment order,
            # so the rank inside the child is a running count per child id
            is_right = (c & 1).astype(np.int64)
            cl = np.cumsum(1 - is_right) - 1
            cr = np.cumsum(is_right) - 1
            parent = c >> 1
            lefts_before = _exclusive_cumsum(child_lens[0::2])
            rights_before = _exclusive_cumsum(child_lens[1::2])
            rank = np.where(is_right == 1, cr - rights_before[parent], cl - lefts_before[parent])
            out = np.empty_like(pf)
            out[child_start[c] + rank] = pf
            perms[f] = out

        level = next_level
        lens = child_lens
        depth += 1

    tree = Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
        p,
    )
    if return_leaves:
        return tree, leaf_of
    return tree


def train_tree(X, y=None, *, gradients=None, hessians=None, weights=None, max_depth=None,
               min_leaf=1, reg_lambda=1.0, gamma=0.0, min_child_weight=0.0):
    """Fit a single CART tree.

    With labels ``y`` the tree is a Gini classification tree whose leaves hold
    the class-1 frequency. With ``gradients``/``hessians`` it is a boosting
    regression tree with Newton leaf weights.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if gradients is not None:
        h = np.asarray(hessians, dtype=float)
        stats = np.column_stack([np.asarray(gradients, dtype=float) * w, h * w, np.ones(n)])
        crit = NewtonCriterion(reg_lambda, gamma, min_child_weight, min_leaf)
    else:
        y = np.asarray(y)
        stats = np.column_stack([(y == 0) * w, (y == 1) * w, np.ones(n)])
        crit = GiniCriterion(min_leaf)
    active = w > 0 if weights is not None else None
    return grow_tree(X, stats, crit, active=active, max_depth=max_depth)
