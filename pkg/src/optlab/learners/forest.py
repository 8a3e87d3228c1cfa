"""Bagged CART regression forest."""
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .._util import thread_cap
from ..exceptions import InvalidArgumentError
from ._validation import validate_fit, validate_predict

@njit(cache=True)
def _splitmix(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _build_tree(X, y, sample, max_depth, min_split, min_leaf, max_features, seed):
    n_features = X.shape[1]
    m_total = sample.size
    cap = 2 * m_total + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)

    idx = sample.copy()
    scratch = np.empty_like(idx)
    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, m_total, 0
    top = 1
    n_nodes = 1
    state = np.uint64(seed)
    order_f = np.arange(n_features)

    while top > 0:
        top -= 1
        nid, start, end, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        m = end - start
        total = 0.0
        lo = np.inf
        hi = -np.inf
        for a in range(start, end):
            v = y[idx[a]]
            total += v
            lo = min(lo, v)
            hi = max(hi, v)
        value[nid] = total / m
        if m < min_split or m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth) or lo == hi:
            continue

        # partial Fisher-Yates: the first max_features entries are the candidates
        for a in range(max_features):
            state, z = _splitmix(state)
            b = a + np.int64(z % np.uint64(n_features - a))
            order_f[a], order_f[b] = order_f[b], order_f[a]
        cand = np.sort(order_f[:max_features])

        best = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in cand:
            vals = np.empty(m)
            ys = np.empty(m)
            for a in range(m):
                vals[a] = X[idx[start + a], f]
            order = np.argsort(vals, kind="mergesort")
            for a in range(m):
                ys[a] = y[idx[start + order[a]]]
            sl = 0.0
            for k in range(1, m):
                sl += ys[k - 1]
                if k < min_leaf or m - k < min_leaf:
                    continue
                v0 = vals[order[k - 1]]
                v1 = vals[order[k]]
                if v0 == v1:
                    continue
                sr = total - sl
                score = sl * sl / k + sr * sr / (m - k)
                if score > best:
                    best = score
                    best_f = f
                    thr = 0.5 * (v0 + v1)
                    if thr >= v1:
                        thr = v0
                    best_thr = thr
        if best_f < 0:
            continue

        nl = 0
        nr = 0
        for a in range(start, end):
            if X[idx[a], best_f] <= best_thr:
                idx[start + nl] = idx[a]
                nl += 1
            else:
                scratch[nr] = idx[a]
                nr += 1
        for a in range(nr):
            idx[start + nl + a] = scratch[a]

        feature[nid] = best_f
        threshold[nid] = best_thr
        left[nid] = n_nodes
        right[nid] = n_nodes + 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = n_nodes + 1, start + nl, end, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = n_nodes, start, start + nl, depth + 1
        top += 1
        n_nodes += 2

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


@njit(cache=True)
def _predict_trees(X, offsets, feature, threshold, left, right, value):
    n_trees = offsets.size - 1
    n = X.shape[0]
    out = np.empty((n_trees, n))
    for t in range(n_trees):
        base = offsets[t]
        for i in range(n):
            node = 0
            while feature[base + node] >= 0:
                if X[i, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            out[t, i] = value[base + node]
    return out


class ForestRegressor(BaseEstimator, RegressorMixin):
    """Random forest of CART regression trees.

    Each tree sees a bootstrap resample of size ``n`` (tree ``t`` uses seed
    ``random_state + t``) and considers ``max_features`` of the columns at
    every split.  Predictions average the trees.  Split ties go to the lowest
    feature index, then the lowest threshold.

    Parameters
    ----------
    n_estimators : int
    max_depth : int or None
        None grows until leaves are pure or too small to split.
    min_samples_split, min_samples_leaf : int
    max_features : float in (0, 1]
        Fraction of features drawn per split (at least one).
    bootstrap : bool
    random_state : int
    """

    def __init__(self, n_estimators=100, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features=1.0, bootstrap=True, random_state=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.n_estimators < 1 or self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise InvalidArgumentError("invalid forest size or split limits")
        if not 0 < self.max_features <= 1:
            raise InvalidArgumentError("max_features must lie in (0, 1]")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidArgumentError("max_depth must be non-negative or None")
        X, y = validate_fit(self, X, y)
        n, p = X.shape
        if n < self.min_samples_split and self.max_depth != 0:
            raise InvalidArgumentError(f"need at least {self.min_samples_split} rows, got {n}")
        mtry = max(1, int(self.max_features * p))
        depth = -1 if self.max_depth is None else int(self.max_depth)
        seed = int(self.random_state or 0)
        X = np.ascontiguousarray(X)

        def grow(t):
            if self.bootstrap:
                sample = np.random.default_rng(seed + t).integers(0, n, n)
            else:
                sample = np.arange(n)
            return _build_tree(X, y, sample.astype(np.int64), depth, int(self.min_samples_split),
                               int(self.min_samples_leaf), mtry, np.uint64((seed + t) & 0xFFFFFFFFFFFFFFFF))

        workers = min(thread_cap(), self.n_estimators)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                trees = list(pool.map(grow, range(self.n_estimators)))
        else:
            trees = [grow(t) for t in range(self.n_estimators)]
        sizes = [tr[0].size for tr in trees]
        self.tree_offsets_ = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.tree_feature_ = np.concatenate([tr[0] for tr in trees])
        self.tree_threshold_ = np.concatenate([tr[1] for tr in trees])
        self.tree_left_ = np.concatenate([tr[2] for tr in trees])
        self.tree_right_ = np.concatenate([tr[3] for tr in trees])
        self.tree_value_ = np.concatenate([tr[4] for tr in trees])
        return self

    @property
    def n_trees_(self):
        return self.tree_offsets_.size - 1

    def predict_trees(self, X):
        """Per-tree predictions, shape ``(n_trees, n_rows)``."""
        check_is_fitted(self, "tree_value_")
        X = np.ascontiguousarray(validate_predict(self, X))
        return _predict_trees(X, self.tree_offsets_, self.tree_feature_, self.tree_threshold_,
                              self.tree_left_, self.tree_right_, self.tree_value_)

    def predict(self, X):
        return self.predict_trees(X).mean(axis=0)
