"""L2-regularized binary logistic regression with an unpenalized intercept.

Two solvers minimise the same convex objective

    0.5 * ||w||^2 + C * sum_i log(1 + exp(z_i)) - y_i * z_i,   z = X w + b

``"coordinate"`` cycles through coordinates with majorized Newton steps;
``"newton"`` takes full Newton steps with backtracking. They agree on the
optimum, so the choice only affects speed.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import expit
from sklearn.exceptions import ConvergenceWarning


def _objective(theta, Xb, y, C):
    z = Xb @ theta
    w = theta[:-1]
    return 0.5 * w @ w + C * np.sum(np.logaddexp(0.0, z) - y * z)


class LogisticRegressionL2:
    def __init__(self, C: float = 1.0, solver: str = "newton", max_iter: int = 1000, tol: float = 1e-8):
        if solver not in ("newton", "coordinate"):
            raise ValueError(f"unknown solver {solver!r}")
        self.C = C
        self.solver = solver
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        Xb = np.hstack([X, np.ones((X.shape[0], 1))])
        theta = np.zeros(Xb.shape[1])
        solve = self._newton if self.solver == "newton" else self._coordinate
        theta, self.n_iter_, self.converged_ = solve(Xb, y, theta)
        if not self.converged_:
            warnings.warn(f"{self.solver} solver hit max_iter={self.max_iter}", ConvergenceWarning)
        self.coef_ = theta[:-1]
        self.intercept_ = theta[-1]
        return self

    def _gradient(self, theta, Xb, y):
        reg = np.r_[theta[:-1], 0.0]
        return reg + self.C * Xb.T @ (expit(Xb @ theta) - y)

    def _newton(self, Xb, y, theta):
        reg_diag = np.r_[np.ones(Xb.shape[1] - 1), 0.0]
        f = _objective(theta, Xb, y, self.C)
        for it in range(1, self.max_iter + 1):
            p = expit(Xb @ theta)
            grad = reg_diag * theta + self.C * Xb.T @ (p - y)
            if np.max(np.abs(grad)) < self.tol:
                return theta, it, True
            H = self.C * (Xb.T * (p * (1 - p))) @ Xb + np.diag(reg_diag) + 1e-12 * np.eye(Xb.shape[1])
            step = np.linalg.solve(H, grad)
            t = 1.0
            while True:
                cand = theta - t * step
                f_cand = _objective(cand, Xb, y, self.C)
                if f_cand <= f - 1e-4 * t * grad @ step or t < 1e-10:
                    break
                t *= 0.5
            theta, f = cand, f_cand
        return theta, self.max_iter, False

    def _coordinate(self, Xb, y, theta):
        d = Xb.shape[1]
        reg_diag = np.r_[np.ones(d - 1), 0.0]
        # p(1-p) <= 1/4 gives a curvature bound per coordinate
        bound = 0.25 * self.C * np.sum(Xb**2, axis=0) + reg_diag
        bound = np.where(bound > 0, bound, 1.0)
        z = Xb @ theta
        for it in range(1, self.max_iter + 1):
            biggest = 0.0
            for j in range(d):
                g = reg_diag[j] * theta[j] + self.C * Xb[:, j] @ (expit(z) - y)
                delta = -g / bound[j]
                theta[j] += delta
                z += delta * Xb[:, j]
                biggest = max(biggest, abs(delta))
            if biggest < self.tol:
                grad = self._gradient(theta, Xb, y)
                if np.max(np.abs(grad)) < 1e-6 * max(1.0, self.C * len(y)):
                    return theta, it, True
        return theta, self.max_iter, False

    def decision_function(self, X):
        return np.asarray(X, dtype=float) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p1 = expit(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def objective(self, X, y) -> float:
        Xb = np.hstack([np.asarray(X, dtype=float), np.ones((len(X), 1))])
        return float(_objective(np.r_[self.coef_, self.intercept_], Xb, np.asarray(y, float), self.C))
