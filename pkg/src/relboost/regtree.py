"""Binary regression trees with least-squares splits and median leaves.

Trees are grown best-first: the frontier leaf whose best axis-aligned split
removes the most squared error (around the mean) is split next, until the
leaf budget is spent or no split has positive gain. Leaves predict the
median of the training targets routed to them, which keeps predictions
robust when targets are heavy-tailed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import lower_median

# Gains at or below this fraction of the parent's squared error are float noise.
_REL_GAIN_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Array-encoded binary tree. ``feature[k] == -1`` marks node ``k`` as a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    max_leaves: int
    split_gains: tuple = field(default=(), compare=False)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def apply(self, X) -> np.ndarray:
        """Index of the leaf reached by each row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"tree was fit on {self.n_features} features, got {X.shape[1]}"
            )
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            idx = np.flatnonzero(f >= 0)
            if idx.size == 0:
                return node
            cur = node[idx]
            go_left = X[idx, f[idx]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self, node: int = 0) -> dict:
        if self.feature[node] < 0:
            return {"leaf": float(self.value[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    @classmethod
    def from_dict(cls, rec: dict, n_features: int, max_leaves: int) -> "RegressionTree":
        feature, threshold, left, right, value = [], [], [], [], []

        def visit(r):
            k = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if "leaf" in r:
                value[k] = float(r["leaf"])
                return k
            feature[k] = int(r["feature"])
            threshold[k] = float(r["threshold"])
            left[k] = visit(r["left"])
            right[k] = visit(r["right"])
            return k

        visit(rec)
        return cls(
            feature=np.array(feature, dtype=np.int64),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int64),
            right=np.array(right, dtype=np.int64),
            value=np.array(value, dtype=np.float64),
            n_features=n_features,
            max_leaves=max_leaves,
        )


def constant_tree(value: float, n_features: int) -> RegressionTree:
    """Single-leaf tree predicting ``value`` everywhere."""
    return RegressionTree(
        feature=np.array([-1], dtype=np.int64),
        threshold=np.zeros(1),
        left=np.array([-1], dtype=np.int64),
        right=np.array([-1], dtype=np.int64),
        value=np.array([float(value)]),
        n_features=n_features,
        max_leaves=1,
    )


def _best_split(X: np.ndarray, t: np.ndarray, rows: np.ndarray):
    """Best (gain, feature, threshold) over all features for the rows of one leaf.

    Returns None when no split has positive gain. Ties go to the lower
    feature index, then the lower threshold.
    """
    m = rows.size
    if m < 2:
        return None
    tr = t[rows]
    centered = tr - tr.mean()
    sse = float(centered @ centered)
    if sse <= 0.0 or tr.max() == tr.min():
        return None

    best = None
    for f in range(X.shape[1]):
        xs = X[rows, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if cut.size == 0:
            continue
        cs = np.cumsum(centered[order])
        n_left = (cut + 1).astype(np.float64)
        n_right = m - n_left
        s_left = cs[cut]
        s_right = cs[-1] - s_left
        diff = s_left / n_left - s_right / n_right
        gains = n_left * n_right / m * diff * diff
        j = int(np.argmax(gains))
        if best is None or gains[j] > best[0]:
            lo, hi = xs[cut[j]], xs[cut[j] + 1]
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            best = (float(gains[j]), f, float(thr))

    if best is None or best[0] <= _REL_GAIN_EPS * sse:
        return None
    return best


def fit_tree(X, targets, max_leaves: int) -> RegressionTree:
    """Fit a best-first regression tree with at most ``max_leaves`` leaves.

    Args:
        X: (n, d) feature matrix.
        targets: length-n target vector.
        max_leaves: leaf budget (the tree-size hyperparameter).

    Returns:
        A fitted :class:`RegressionTree` whose leaf values are lower medians
        of the targets routed to each leaf. ``split_gains`` records the
        squared-error reduction of every accepted split, in growth order.
    """
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64).ravel()
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0 or t.size == 0:
        raise ValueError("cannot fit a tree on empty input")
    if X.shape[0] != t.size:
        raise ValueError("X and targets have different numbers of rows")
    if max_leaves < 1:
        raise ValueError("max_leaves must be at least 1")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(t))):
        raise ValueError("tree inputs must be finite")

    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    members = {0: np.arange(t.size)}
    frontier = {0: _best_split(X, t, members[0])}
    gains = []
    n_leaves = 1
    while n_leaves < max_leaves:
        cands = [(s[0], k) for k, s in frontier.items() if s is not None]
        if not cands:
            break
        top = max(g for g, _ in cands)
        k = min(node for g, node in cands if g == top)
        gain, f, thr = frontier.pop(k)
        rows = members.pop(k)
        go_left = X[rows, f] <= thr
        feature[k], threshold[k] = f, thr
        for side_rows in (rows[go_left], rows[~go_left]):
            child = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            members[child] = side_rows
            frontier[child] = _best_split(X, t, side_rows)
        left[k], right[k] = len(feature) - 2, len(feature) - 1
        gains.append(gain)
        n_leaves += 1

    value = np.zeros(len(feature))
    for k, rows in members.items():
        value[k] = lower_median(t[rows])
    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=value,
        n_features=X.shape[1],
        max_leaves=max_leaves,
        split_gains=tuple(gains),
    )


def predict_tree(tree: RegressionTree, x) -> float:
    """Route a single feature vector through ``tree`` (``x[f] <= threshold`` goes left)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != tree.n_features:
        raise ValueError(f"tree was fit on {tree.n_features} features, got {x.size}")
    k = 0
    while tree.feature[k] >= 0:
        k = tree.left[k] if x[tree.feature[k]] <= tree.threshold[k] else tree.right[k]
    return float(tree.value[k])
