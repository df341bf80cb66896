import numpy as np
from scipy.special import expit

from .base import Problem, ScoreReport, _frozen


def check_binary_labels(y):
    y = np.asarray(y, dtype=float)
    bad = ~np.isin(y, (-1.0, 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"labels must be -1 or +1; y[{i}] = {y[i]!r}")
    return y


def accuracy(y_pred, y):
    y_pred = np.asarray(y_pred)
    y = np.asarray(y)
    if y_pred.shape != y.shape:
        raise ValueError(f"shape mismatch: {y_pred.shape} vs {y.shape}")
    if y.size == 0:
        raise ValueError("empty label set")
    return float(np.mean(y_pred == y))


class BinaryClassifier(Problem):
    task = "classification"

    def __init__(self, X, y, lam=0.0):
        super().__init__(X, y, lam)
        self.y = _frozen(check_binary_labels(y))

    def _margins(self, w, idx):
        return self.y[idx] * (self.X[idx] @ w)

    def prediction(self, w, X=None):
        X = self.X if X is None else np.asarray(X, dtype=float)
        # ties at zero go to +1
        return np.where(X @ np.asarray(w, dtype=float) >= 0, 1.0, -1.0)

    def score(self, w, X=None, y=None):
        if X is None:
            X, y = self.X, self.y
        return ScoreReport("accuracy", accuracy(self.prediction(w, X), np.asarray(y, dtype=float)))


class LogisticRegression(BinaryClassifier):
    """f_i(w) = log(1 + exp(-y_i w^T x_i)) + lam/2 ||w||^2."""

    name = "logistic_regression"
    curvature_bound = 0.25

    def _losses(self, w, idx):
        return np.logaddexp(0.0, -self._margins(w, idx))

    def _weights(self, w, idx):
        # d loss / d margin = -sigmoid(-margin)
        return -self.y[idx] * expit(-self._margins(w, idx))

    def _grad_rows(self, w, idx):
        return self._weights(w, idx)[:, None] * self.X[idx]

    def _grad_loss(self, w, idx):
        return self.X[idx].T @ self._weights(w, idx) / len(idx)

    def _curv(self, w, idx):
        s = expit(self._margins(w, idx))
        return s * (1.0 - s)

    def _hess_loss(self, w, idx):
        Xs = self.X[idx]
        return (Xs.T * self._curv(w, idx)) @ Xs / len(idx)

    def _hess_vec_loss(self, w, v, idx):
        Xs = self.X[idx]
        return Xs.T @ (self._curv(w, idx) * (Xs @ v)) / len(idx)

    def probability(self, w, X=None):
        """P(y = +1 | x, w)."""
        X = self.X if X is None else np.asarray(X, dtype=float)
        return expit(X @ np.asarray(w, dtype=float))
