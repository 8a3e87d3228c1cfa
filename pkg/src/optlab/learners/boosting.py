"""Gradient boosting with oblivious (symmetric) regression trees.

Every level of a tree applies one ``(feature, threshold)`` test to all of its
nodes, so a depth-``d`` tree is ``d`` tests plus a table of ``2**d`` leaf
values addressed by the ``d``-bit outcome.  Candidate thresholds come from
per-feature quantile bins computed on the training set.
"""
import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import InvalidArgumentError, TrainingError
from ._validation import validate_fit, validate_predict


def bin_thresholds(col, max_bins):
    """Split points for one feature; at most ``max_bins - 1`` of them."""
    uniq = np.unique(col)
    if uniq.size <= max_bins:
        mid = 0.5 * (uniq[:-1] + uniq[1:])
        # midpoint can round onto the upper value for adjacent floats
        return np.where(mid >= uniq[1:], uniq[:-1], mid)
    qs = np.quantile(col, np.arange(1, max_bins) / max_bins, method="lower")
    return np.unique(qs)


@njit(cache=True)
def _grow_tree(bins, n_thresholds, resid, depth, l2):
    n, p = bins.shape
    node = np.zeros(n, dtype=np.int64)
    split_feat = np.full(depth, -1, dtype=np.int64)
    split_bin = np.zeros(depth, dtype=np.int64)
    for level in range(depth):
        n_nodes = 1 << level
        best = -np.inf
        for f in range(p):
            nb = n_thresholds[f] + 1
            if nb < 2:
                continue
            G = np.zeros((n_nodes, nb))
            C = np.zeros((n_nodes, nb))
            for i in range(n):
                G[node[i], bins[i, f]] += resid[i]
                C[node[i], bins[i, f]] += 1.0
            gtot = G.sum(axis=1)
            ctot = C.sum(axis=1)
            gl = np.zeros(n_nodes)
            cl = np.zeros(n_nodes)
            for b in range(nb - 1):
                score = 0.0
                for j in range(n_nodes):
                    gl[j] += G[j, b]
                    cl[j] += C[j, b]
                    dl = cl[j] + l2
                    dr = ctot[j] - cl[j] + l2
                    if dl > 0:
                        score += gl[j] * gl[j] / dl
                    if dr > 0:
                        gr = gtot[j] - gl[j]
                        score += gr * gr / dr
                if score > best:
                    best = score
                    split_feat[level] = f
                    split_bin[level] = b
        f = split_feat[level]
        for i in range(n):
            bit = 0
            if f >= 0 and bins[i, f] > split_bin[level]:
                bit = 1
            node[i] = 2 * node[i] + bit
    n_leaves = 1 << depth
    gsum = np.zeros(n_leaves)
    cnt = np.zeros(n_leaves)
    for i in range(n):
        gsum[node[i]] += resid[i]
        cnt[node[i]] += 1.0
    leaves = np.zeros(n_leaves)
    for k in range(n_leaves):
        if cnt[k] + l2 > 0:
            leaves[k] = gsum[k] / (cnt[k] + l2)
    return split_feat, split_bin, leaves, node


@njit(cache=True)
def _predict(Xt, feats, thresholds, contrib, base):
    p, n = Xt.shape
    n_trees, depth = feats.shape
    out = np.full(n, base)
    idx = np.zeros(n, dtype=np.int64)
    for t in range(n_trees):
        idx[:] = 0
        for k in range(depth):
            row = Xt[feats[t, k]]
            thr = thresholds[t, k]
            for i in range(n):
                idx[i] = 2 * idx[i] + (row[i] > thr)
        leaf = contrib[t]
        for i in range(n):
            out[i] += leaf[idx[i]]
    return out


class ObliviousBoostingRegressor(BaseEstimator, RegressorMixin):
    """Squared-loss gradient boosting over oblivious trees.

    Parameters
    ----------
    n_iterations : int
        Number of boosting rounds (trees).
    learning_rate : float
        Shrinkage applied to every tree's contribution.
    depth : int
        Tree depth; each tree has ``2**depth`` leaves.
    l2_leaf_reg : float
        L2 penalty on leaf values; a leaf predicts ``sum(residual) / (count + l2_leaf_reg)``.
    max_bins : int
        Quantile bins per feature used for threshold candidates.
    base_score : "mean" or float
        Initial prediction before the first tree.
    random_state : int
        Recorded for a uniform interface; the fit itself has no randomness.
    """

    def __init__(self, n_iterations=500, learning_rate=0.1, depth=6, l2_leaf_reg=3.0,
                 max_bins=255, base_score="mean", random_state=0):
        self.n_iterations = n_iterations
        self.learning_rate = learning_rate
        self.depth = depth
        self.l2_leaf_reg = l2_leaf_reg
        self.max_bins = max_bins
        self.base_score = base_score
        self.random_state = random_state

    def _check_params(self):
        if self.n_iterations < 0 or self.depth < 0:
            raise InvalidArgumentError("n_iterations and depth must be non-negative")
        if self.learning_rate < 0 or self.l2_leaf_reg < 0:
            raise InvalidArgumentError("learning_rate and l2_leaf_reg must be non-negative")
        if not 2 <= self.max_bins <= 65536:
            raise InvalidArgumentError("max_bins must lie in [2, 65536]")

    def fit(self, X, y=None):
        self._check_params()
        X, y = validate_fit(self, X, y)
        n, p = X.shape
        self.bin_thresholds_ = [bin_thresholds(X[:, j], self.max_bins) for j in range(p)]
        bins = np.empty((n, p), dtype=np.int64)
        for j, thr in enumerate(self.bin_thresholds_):
            bins[:, j] = np.searchsorted(thr, X[:, j], side="left")
        n_thr = np.array([t.size for t in self.bin_thresholds_], dtype=np.int64)

        self.base_score_ = float(y.mean()) if self.base_score == "mean" else float(self.base_score)
        F = np.full(n, self.base_score_)
        d, lr, l2 = int(self.depth), float(self.learning_rate), float(self.l2_leaf_reg)
        feats = np.zeros((self.n_iterations, d), dtype=np.int64)
        thresholds = np.full((self.n_iterations, d), np.inf)
        leaves = np.zeros((self.n_iterations, 1 << d))
        losses = [float(np.mean((y - F) ** 2))]
        for m in range(self.n_iterations):
            split_feat, split_bin, leaf, node = _grow_tree(bins, n_thr, y - F, d, l2)
            for k in range(d):
                f = split_feat[k]
                if f >= 0:
                    feats[m, k] = f
                    thresholds[m, k] = self.bin_thresholds_[f][split_bin[k]]
            leaves[m] = leaf
            F = F + lr * leaf[node]
            losses.append(float(np.mean((y - F) ** 2)))
            if not np.isfinite(losses[-1]):
                raise TrainingError("boosting loss became non-finite", iteration=m, learning_rate=lr)
        self.split_features_ = feats
        self.split_thresholds_ = thresholds
        self.leaf_values_ = leaves
        self.train_loss_ = losses
        self.n_iter_ = self.n_iterations
        return self

    def predict(self, X):
        check_is_fitted(self, "leaf_values_")
        X = validate_predict(self, X)
        if X.shape[0] == 0:
            return np.zeros(0)
        Xt = np.ascontiguousarray(X.T)
        contrib = self.learning_rate * self.leaf_values_
        return _predict(Xt, self.split_features_, self.split_thresholds_, contrib, self.base_score_)

    def leaf_index(self, X):
        """Per-tree leaf index of each row, shape ``(n_rows, n_trees)``."""
        check_is_fitted(self, "leaf_values_")
        X = validate_predict(self, X)
        idx = np.zeros((X.shape[0], self.split_features_.shape[0]), dtype=np.int64)
        for k in range(self.split_features_.shape[1]):
            bit = X[:, self.split_features_[:, k]] > self.split_thresholds_[:, k]
            idx = 2 * idx + bit
        return idx
