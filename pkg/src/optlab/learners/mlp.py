"""Feed-forward ReLU network trained with mini-batch Adam."""
import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..dataset import Standardizer
from ..exceptions import InvalidArgumentError, TrainingError
from ._validation import validate_fit, validate_predict

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def init_params(layer_sizes, rng):
    """He-uniform weights for ReLU layers, Glorot-uniform for the linear output."""
    params = []
    last = len(layer_sizes) - 2
    for k, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out)) if k == last else np.sqrt(6.0 / fan_in)
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def forward(params, X):
    """Network output and the hidden activations needed for backprop."""
    acts = [X]
    h = X
    n_layers = len(params) // 2
    for k in range(n_layers):
        z = h @ params[2 * k] + params[2 * k + 1]
        h = np.maximum(z, 0.0) if k < n_layers - 1 else z
        acts.append(h)
    return h[:, 0], acts


def loss_and_grads(params, X, y, alpha):
    """Loss ``0.5 * mean(residual^2) + 0.5 * alpha * sum(W^2) / n`` and its gradients."""
    n = X.shape[0]
    out, acts = forward(params, X)
    resid = out - y
    n_layers = len(params) // 2
    weights_sq = sum(float(np.sum(params[2 * k] ** 2)) for k in range(n_layers))
    loss = 0.5 * float(resid @ resid) / n + 0.5 * alpha * weights_sq / n
    grads = [None] * len(params)
    delta = (resid / n)[:, None]
    for k in range(n_layers - 1, -1, -1):
        grads[2 * k] = acts[k].T @ delta + (alpha / n) * params[2 * k]
        grads[2 * k + 1] = delta.sum(axis=0)
        if k:
            delta = (delta @ params[2 * k].T) * (acts[k] > 0)
    return loss, grads


class MLPRegressor(BaseEstimator, RegressorMixin):
    """Multilayer perceptron regressor (ReLU hidden layers, linear output).

    Trained on squared error with an L2 weight penalty by mini-batch Adam.
    Training runs for ``max_epochs`` full passes unless ``early_stopping``
    is set, in which case ``validation_fraction`` of the rows is held out and
    training stops after ``patience`` epochs without a new best validation
    loss (the best weights are kept).  The output bias starts at the mean
    training target.  With ``standardize`` (the default) inputs are z-scored
    using training-set statistics before entering the network; constant
    columns map to zero.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
    learning_rate : float
    alpha : float
        L2 penalty strength.
    batch_size : int
    max_epochs : int
    early_stopping : bool
    validation_fraction : float
    patience : int
    standardize : bool
    random_state : int
    """

    def __init__(self, hidden_layer_sizes=(64, 64), learning_rate=1e-3, alpha=1e-4, batch_size=256,
                 max_epochs=1000, early_stopping=False, validation_fraction=0.1, patience=20,
                 standardize=True, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.alpha = alpha
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.early_stopping = early_stopping
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.standardize = standardize
        self.random_state = random_state

    def _check_params(self):
        hidden = tuple(self.hidden_layer_sizes)
        if not hidden or min(hidden) < 1:
            raise InvalidArgumentError("need at least one hidden layer of positive width")
        if not self.learning_rate > 0 or self.alpha < 0:
            raise InvalidArgumentError("learning_rate must be positive and alpha non-negative")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise InvalidArgumentError("batch_size, max_epochs and patience must be positive")
        return hidden

    def fit(self, X, y=None):
        hidden = self._check_params()
        X, y = validate_fit(self, X, y)
        if self.standardize:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                self.scaler_ = Standardizer().fit(X)
            X = self.scaler_.transform(X)
        else:
            self.scaler_ = None
        rng = np.random.default_rng(self.random_state)
        params = init_params((X.shape[1],) + hidden + (1,), rng)

        if self.early_stopping:
            n_val = max(1, int(round(self.validation_fraction * X.shape[0])))
            perm = rng.permutation(X.shape[0])
            Xv, yv = X[perm[:n_val]], y[perm[:n_val]]
            X, y = X[perm[n_val:]], y[perm[n_val:]]
        params[-1][:] = y.mean()

        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        n = X.shape[0]
        bs = min(int(self.batch_size), n)
        lr = float(self.learning_rate)
        step = 0
        curve = []
        best_val, best_params, stale = np.inf, None, 0
        self.validation_curve_ = []
        for epoch in range(int(self.max_epochs)):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, bs):
                rows = order[start:start + bs]
                loss, grads = loss_and_grads(params, X[rows], y[rows], self.alpha)
                if not np.isfinite(loss):
                    raise TrainingError("MLP loss became non-finite", epoch=epoch, learning_rate=lr)
                total += loss * rows.size
                step += 1
                c1 = 1.0 - ADAM_BETA1 ** step
                c2 = 1.0 - ADAM_BETA2 ** step
                for p, g, mk, vk in zip(params, grads, m, v):
                    mk *= ADAM_BETA1
                    mk += (1.0 - ADAM_BETA1) * g
                    vk *= ADAM_BETA2
                    vk += (1.0 - ADAM_BETA2) * g * g
                    p -= lr * (mk / c1) / (np.sqrt(vk / c2) + ADAM_EPS)
            curve.append(total / n)
            if self.early_stopping:
                pred, _ = forward(params, Xv)
                val = float(np.mean((pred - yv) ** 2))
                self.validation_curve_.append(val)
                if val < best_val:
                    best_val, best_params, stale = val, [p.copy() for p in params], 0
                else:
                    stale += 1
                    if stale >= self.patience:
                        break
        if best_params is not None:
            params = best_params
        self.coefs_ = params[0::2]
        self.intercepts_ = params[1::2]
        self.loss_curve_ = curve
        self.n_epochs_ = len(curve)
        pred, _ = forward(params, X)
        self.train_mse_ = float(np.mean((pred - y) ** 2))
        return self

    @property
    def params_(self):
        out = []
        for W, b in zip(self.coefs_, self.intercepts_):
            out += [W, b]
        return out

    def predict(self, X):
        check_is_fitted(self, "coefs_")
        X = validate_predict(self, X)
        if self.scaler_ is not None:
            X = self.scaler_.transform(X)
        out, _ = forward(self.params_, X)
        return out
