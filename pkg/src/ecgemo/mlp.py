"""Small fully connected binary classifier trained with Adam.

ReLU hidden layers, a single logistic output unit, mean binary cross-entropy
plus an L2 penalty. Parameters are a flat list ``[W1, b1, W2, b2, ...]``.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import expit
from sklearn.exceptions import ConvergenceWarning


def init_params(sizes, rng) -> list[np.ndarray]:
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
        params.append(rng.uniform(-bound, bound, fan_out))
    return params


def forward(params, X) -> tuple[np.ndarray, list[np.ndarray]]:
    """Return output logits and the activations entering each layer."""
    acts = [X]
    h = X
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = h @ params[2 * i] + params[2 * i + 1]
        if i < n_layers - 1:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            return z[:, 0], acts
    raise ValueError("empty network")


def loss_and_grad(params, X, y, alpha: float = 0.0) -> tuple[float, list[np.ndarray]]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    logits, acts = forward(params, X)
    loss = np.mean(np.logaddexp(0.0, logits) - y * logits)
    weights = params[0::2]
    loss += 0.5 * alpha / n * sum(np.sum(W * W) for W in weights)

    grads: list[np.ndarray] = [np.empty(0)] * len(params)
    delta = ((expit(logits) - y) / n)[:, None]
    for i in range(len(params) // 2 - 1, -1, -1):
        W = params[2 * i]
        grads[2 * i] = acts[i].T @ delta + alpha / n * W
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ W.T) * (acts[i] > 0)
    return float(loss), grads


class MLPBinary:
    def __init__(self, hidden=(100,), learning_rate: float = 1e-3, batch_size: int = 32,
                 max_epochs: int = 300, alpha: float = 1e-4, validation_fraction: float = 0.1,
                 patience: int = 15, seed: int = 0):
        self.hidden = tuple(hidden)
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.alpha = alpha
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        rng = np.random.default_rng(self.seed)
        params = init_params((X.shape[1], *self.hidden, 1), rng)

        n_val = int(round(self.validation_fraction * len(y)))
        if n_val >= 2 and len(y) - n_val >= 2:
            order = rng.permutation(len(y))
            val, tr = order[:n_val], order[n_val:]
            X_val, y_val = X[val], y[val]
            X, y = X[tr], y[tr]
        else:
            X_val = y_val = None

        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        b1, b2, eps = 0.9, 0.999, 1e-8
        t = 0
        best_loss, best_params, stale = np.inf, [p.copy() for p in params], 0
        self.n_epochs_ = self.max_epochs
        for epoch in range(self.max_epochs):
            order = rng.permutation(len(y))
            for start in range(0, len(y), self.batch_size):
                idx = order[start:start + self.batch_size]
                _, grads = loss_and_grad(params, X[idx], y[idx], self.alpha)
                t += 1
                lr_t = self.learning_rate * np.sqrt(1 - b2**t) / (1 - b1**t)
                for p, g, mi, vi in zip(params, grads, m, v):
                    mi *= b1
                    mi += (1 - b1) * g
                    vi *= b2
                    vi += (1 - b2) * g * g
                    p -= lr_t * mi / (np.sqrt(vi) + eps)
            monitor_X, monitor_y = (X_val, y_val) if X_val is not None else (X, y)
            loss, _ = loss_and_grad(params, monitor_X, monitor_y, 0.0)
            if loss < best_loss - 1e-6:
                best_loss, best_params, stale = loss, [p.copy() for p in params], 0
            else:
                stale += 1
                if stale >= self.patience:
                    self.n_epochs_ = epoch + 1
                    break
        else:
            warnings.warn(f"MLP reached max_epochs={self.max_epochs}", ConvergenceWarning)
        self.params_ = best_params
        return self

    def decision_function(self, X):
        return forward(self.params_, np.asarray(X, dtype=float))[0]

    def predict_proba(self, X):
        p1 = expit(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])
