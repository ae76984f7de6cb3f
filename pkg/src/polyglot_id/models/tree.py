"""CART trees grown greedily over sparse, non-negative features.

Split search works directly on the non-zero entries of each column. Entries
are pre-sorted by (column, value descending), so for any node the samples
with ``x > threshold`` form a prefix of that column's entries and every
candidate split can be scored with one cumulative sum. Samples whose value
is absent (zero) always fall on the left, because every threshold is the
midpoint between two distinct observed values and all values are >= 0.

Ties between equally good splits go to the lowest feature index, then to
the lowest threshold.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionMismatch
from ..features import as_csr

GINI = "gini"
SECOND_ORDER = "second_order"

# impurity decreases below this are treated as no improvement
_GINI_EPS = 1e-12


def gini(counts):
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.dot(p, p))


def soft_threshold(g, alpha):
    if alpha == 0:
        return g
    return np.sign(g) * np.maximum(np.abs(g) - alpha, 0.0)


def leaf_weight(G, H, reg_lambda=1.0, reg_alpha=0.0):
    """Optimal leaf output ``-T(G, alpha) / (H + lambda)``; 0 when undefined."""
    G = np.asarray(G, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    denom = H + reg_lambda
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(denom > 0, -soft_threshold(G, reg_alpha) / denom, 0.0)
    return w if w.ndim else float(w)


def _score(G, H, reg_lambda, reg_alpha):
    t = soft_threshold(G, reg_alpha)
    if reg_lambda > 0 and np.all(H >= 0):
        return t * t / (H + reg_lambda)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(H + reg_lambda > 0, t * t / (H + reg_lambda), 0.0)


def split_gain(G_left, H_left, G_right, H_right, reg_lambda=1.0, reg_alpha=0.0, gamma=0.0):
    """Regularised second-order gain of splitting a node in two."""
    return (0.5 * (_score(G_left, H_left, reg_lambda, reg_alpha)
                   + _score(G_right, H_right, reg_lambda, reg_alpha)
                   - _score(G_left + G_right, H_left + H_right, reg_lambda, reg_alpha))
            - gamma)


@dataclass
class DecisionTree:
    """Flat array representation of a binary tree.

    Internal nodes have ``feature >= 0`` and send ``x[feature] > threshold``
    to ``right``. For gini trees ``value[node]`` holds the training class
    counts (aligned with ``classes``); for second-order trees it holds the
    leaf weight.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    criterion: str
    max_depth: int = None
    classes: np.ndarray = None

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def depth(self):
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max()) if self.n_nodes else 0

    def is_leaf(self, node):
        return self.feature[node] < 0

    def apply(self, X):
        """Leaf index reached by each row of ``X``."""
        X = as_csr(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while len(active):
            f = self.feature[node[active]]
            x = np.asarray(X[active, f]).ravel()
            go_right = x > self.threshold[node[active]]
            node[active] = np.where(go_right, self.right[node[active]], self.left[node[active]])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_proba(self, X):
        counts = self.value[self.apply(X)]
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, X):
        # argmax returns the first maximum, i.e. the lowest class code
        return self.classes[np.argmax(self.value[self.apply(X)], axis=1)]

    def to_dict(self):
        return {
            "criterion": self.criterion,
            "n_features": int(self.n_features),
            "max_depth": self.max_depth,
            "classes": None if self.classes is None else [int(c) for c in self.classes],
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            feature=np.array(d["feature"], dtype=np.int64),
            threshold=np.array(d["threshold"], dtype=np.float64),
            left=np.array(d["left"], dtype=np.int64),
            right=np.array(d["right"], dtype=np.int64),
            value=np.array(d["value"], dtype=np.float64),
            n_features=d["n_features"],
            criterion=d["criterion"],
            max_depth=d["max_depth"],
            classes=None if d["classes"] is None else np.array(d["classes"], dtype=np.int64),
        )


class ColumnIndex:
    """Non-zero entries of a CSR matrix ordered by (column, value desc)."""

    def __init__(self, X):
        X = sp.csc_matrix(X, dtype=np.float64)
        X.eliminate_zeros()
        if X.nnz and X.data.min() < 0:
            raise ValueError("tree features must be non-negative")
        self.shape = X.shape
        col = np.repeat(np.arange(X.shape[1], dtype=np.int64), np.diff(X.indptr))
        order = np.lexsort((-X.data, col))
        self.col = col[order]
        self.row = X.indices[order].astype(np.int64)
        self.val = X.data[order]


def _group_cumsum(values, starts_mask):
    """Cumulative sums restarting wherever ``starts_mask`` is True (axis 0)."""
    cs = np.cumsum(values, axis=0)
    start_idx = np.flatnonzero(starts_mask)
    before = np.zeros_like(cs[:1]) if cs.ndim > 1 else np.zeros(1)
    offsets = np.concatenate([before, cs[start_idx[1:] - 1]]) if len(start_idx) else before[:0]
    seg = np.cumsum(starts_mask) - 1
    return cs - offsets[seg]


class _Builder:
    def __init__(self, index, criterion, *, max_depth, min_samples_leaf,
                 features_per_split, rng, y=None, n_classes=None, grad=None,
                 hess=None, reg_lambda=1.0, reg_alpha=0.0, gamma=0.0,
                 min_child_weight=1.0):
        self.ix = index
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.features_per_split = features_per_split
        self.rng = rng
        self.y = y
        self.n_classes = n_classes
        self.grad = grad
        self.hess = hess
        self.reg_lambda = reg_lambda
        self.reg_alpha = reg_alpha
        self.gamma = gamma
        self.min_child_weight = min_child_weight

    # -- split search -------------------------------------------------------

    def _candidates(self, e, n_node):
        """Per-entry candidate splits for entry subset ``e`` (sorted)."""
        col = self.ix.col[e]
        val = self.ix.val[e]
        m = len(e)
        starts = np.ones(m, dtype=bool)
        starts[1:] = col[1:] != col[:-1]
        last = np.ones(m, dtype=bool)
        last[:-1] = starts[1:]
        nxt = np.zeros(m)
        nxt[:-1] = np.where(last[:-1], 0.0, val[1:])
        start_pos = np.flatnonzero(starts)
        n_right = np.arange(1, m + 1) - start_pos[np.cumsum(starts) - 1]
        # a cut is possible only between two distinct values
        ok = val > nxt
        # cutting after the last entry of a column requires zeros in the node
        ok &= ~(last & (n_right >= n_node))
        threshold = 0.5 * (val + nxt)
        return col, starts, n_right, threshold, ok

    def _best_split(self, rows, e):
        n_node = len(rows)
        if len(e) == 0:
            return None
        col, starts, n_right, threshold, ok = self._candidates(e, n_node)
        r = self.ix.row[e]
        n_left = n_node - n_right
        ok &= (n_left >= self.min_samples_leaf) & (n_right >= self.min_samples_leaf)

        if self.criterion == GINI:
            onehot = np.zeros((len(e), self.n_classes))
            onehot[np.arange(len(e)), self.y[r]] = 1.0
            c_right = _group_cumsum(onehot, starts)
            c_total = np.bincount(self.y[rows], minlength=self.n_classes).astype(np.float64)
            c_left = c_total - c_right
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = ((c_left ** 2).sum(axis=1) / n_left
                        + (c_right ** 2).sum(axis=1) / n_right
                        - np.dot(c_total, c_total) / n_node)
            ok &= gain > _GINI_EPS * n_node
        else:
            gh = _group_cumsum(np.column_stack([self.grad[r], self.hess[r]]), starts)
            G = self.grad[rows].sum()
            H = self.hess[rows].sum()
            H_right = gh[:, 1]
            ok &= (H_right >= self.min_child_weight) & (H - H_right >= self.min_child_weight)
            cand = np.flatnonzero(ok)
            G_right, H_right = gh[cand, 0], H_right[cand]
            gain = np.full(len(e), -np.inf)
            gain[cand] = split_gain(G - G_right, H - H_right, G_right, H_right,
                                    self.reg_lambda, self.reg_alpha, self.gamma)
            ok &= gain > 0

        if not ok.any():
            return None
        cand = np.flatnonzero(ok)
        g = gain[cand]
        best = cand[g == g.max()]
        # lowest feature, then lowest threshold
        best = best[np.lexsort((threshold[best], col[best]))[0]]
        return int(col[best]), float(threshold[best])

    def _restrict_features(self, e):
        if self.features_per_split is None or len(e) == 0:
            return e
        present = np.unique(self.ix.col[e])
        if len(present) <= self.features_per_split:
            return e
        chosen = self.rng.choice(present, size=self.features_per_split, replace=False)
        return e[np.isin(self.ix.col[e], chosen)]

    # -- growth -------------------------------------------------------------

    def _leaf_value(self, rows):
        if self.criterion == GINI:
            return np.bincount(self.y[rows], minlength=self.n_classes).astype(np.float64)
        return leaf_weight(self.grad[rows].sum(), self.hess[rows].sum(),
                           self.reg_lambda, self.reg_alpha)

    def build(self, rows):
        n_samples = self.ix.shape[0]
        feature, threshold, left, right, value = [], [], [], [], []
        leaf_of_row = np.zeros(n_samples, dtype=np.int64)
        is_right = np.zeros(n_samples, dtype=bool)

        def new_node():
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(None)
            return len(feature) - 1

        root = new_node()
        in_node = np.zeros(n_samples, dtype=bool)
        in_node[rows] = True
        root_entries = np.flatnonzero(in_node[self.ix.row])
        stack = [(root, rows, root_entries, 0)]
        while stack:
            node, node_rows, e, depth = stack.pop()
            value[node] = self._leaf_value(node_rows)
            split = None
            if ((self.max_depth is None or depth < self.max_depth)
                    and len(node_rows) >= 2 * self.min_samples_leaf):
                split = self._best_split(node_rows, self._restrict_features(e))
            if split is None:
                leaf_of_row[node_rows] = node
                continue
            f, thr = split
            lo, hi = np.searchsorted(self.ix.col, [f, f + 1])
            right_rows = self.ix.row[lo:hi][self.ix.val[lo:hi] > thr]
            is_right[right_rows] = True
            goes_right = is_right[node_rows]
            rows_r, rows_l = node_rows[goes_right], node_rows[~goes_right]
            e_right = is_right[self.ix.row[e]]
            e_r, e_l = e[e_right], e[~e_right]
            is_right[right_rows] = False

            feature[node], threshold[node] = f, thr
            l_id = new_node()
            r_id = new_node()
            left[node], right[node] = l_id, r_id
            # right pushed first so the left subtree gets the lower node ids
            stack.append((r_id, rows_r, e_r, depth + 1))
            stack.append((l_id, rows_l, e_l, depth + 1))

        tree = DecisionTree(
            feature=np.array(feature, dtype=np.int64),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int64),
            right=np.array(right, dtype=np.int64),
            value=np.array(value, dtype=np.float64),
            n_features=self.ix.shape[1],
            criterion=self.criterion,
            max_depth=self.max_depth,
        )
        return tree, leaf_of_row


def _index_rows(matrix):
    X = matrix.X if hasattr(matrix, "X") else as_csr(matrix)
    return X


def tree_fit(matrix, *, criterion=GINI, max_depth=None, min_samples_leaf=1,
             features_per_split=None, seed=0, classes=None, grad=None, hess=None,
             reg_lambda=1.0, reg_alpha=0.0, gamma=0.0, min_child_weight=1.0,
             index=None, return_leaves=False):
    """Grow one tree on a :class:`~polyglot_id.features.FeatureMatrix`.

    With ``criterion="gini"`` the matrix labels are the targets. With
    ``criterion="second_order"`` the caller supplies per-row ``grad`` and
    ``hess`` and the leaves hold regularised weights.

    Args:
        features_per_split: number of candidate features drawn at each node
            from those non-zero somewhere in the node; ``None`` uses all.
        index: a precomputed :class:`ColumnIndex` of ``matrix.X``.
        return_leaves: also return the leaf reached by each training row.
    """
    X = _index_rows(matrix)
    n = X.shape[0]
    if n == 0:
        raise ValueError("cannot fit a tree on an empty matrix")
    if index is None:
        index = ColumnIndex(X)
    elif index.shape != X.shape:
        raise DimensionMismatch("column index does not match the matrix")
    rng = np.random.default_rng(seed)
    rows = np.arange(n, dtype=np.int64)

    if criterion == GINI:
        labels = np.asarray(matrix.labels)
        if classes is None:
            classes = np.unique(labels)
        classes = np.asarray(classes, dtype=np.int64)
        y = np.searchsorted(classes, labels)
        if np.any(y >= len(classes)) or np.any(classes[np.minimum(y, len(classes) - 1)] != labels):
            raise ValueError("labels outside the given classes")
        builder = _Builder(index, GINI, max_depth=max_depth, min_samples_leaf=min_samples_leaf,
                           features_per_split=features_per_split, rng=rng, y=y,
                           n_classes=len(classes))
    elif criterion == SECOND_ORDER:
        if grad is None or hess is None:
            raise ValueError("second_order trees need grad and hess")
        builder = _Builder(index, SECOND_ORDER, max_depth=max_depth,
                           min_samples_leaf=min_samples_leaf,
                           features_per_split=features_per_split, rng=rng,
                           grad=np.asarray(grad, dtype=np.float64),
                           hess=np.asarray(hess, dtype=np.float64),
                           reg_lambda=reg_lambda, reg_alpha=reg_alpha, gamma=gamma,
                           min_child_weight=min_child_weight)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")

    tree, leaves = builder.build(rows)
    if criterion == GINI:
        tree.classes = classes
    return (tree, leaves) if return_leaves else tree
