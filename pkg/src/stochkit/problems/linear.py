import numpy as np

from .base import Problem, ScoreReport, _frozen


class LinearRegression(Problem):
    """Ridge regression: f(w) = 1/(2n) sum (w^T x_i - y_i)^2 + lam/2 ||w||^2."""

    name = "linear_regression"
    task = "regression"

    def __init__(self, X, y, lam=0.0):
        super().__init__(X, y, lam)
        y = np.asarray(y, dtype=float)
        if not np.isfinite(y).all():
            raise ValueError("y contains non-finite entries")
        self.y = _frozen(y)

    def _residual(self, w, idx):
        return self.X[idx] @ w - self.y[idx]

    def _losses(self, w, idx):
        return 0.5 * self._residual(w, idx) ** 2

    def _grad_rows(self, w, idx):
        return self._residual(w, idx)[:, None] * self.X[idx]

    def _grad_loss(self, w, idx):
        return self.X[idx].T @ self._residual(w, idx) / len(idx)

    def _hess_loss(self, w, idx):
        Xs = self.X[idx]
        return Xs.T @ Xs / len(idx)

    def _hess_vec_loss(self, w, v, idx):
        Xs = self.X[idx]
        return Xs.T @ (Xs @ v) / len(idx)

    def prediction(self, w, X=None):
        X = self.X if X is None else np.asarray(X, dtype=float)
        return X @ np.asarray(w, dtype=float)

    def score(self, w, X=None, y=None):
        if X is None:
            X, y = self.X, self.y
        return ScoreReport("mse", mse(self.prediction(w, X), y))


def mse(y_pred, y):
    y_pred = np.asarray(y_pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if y_pred.shape != y.shape:
        raise ValueError(f"shape mismatch: {y_pred.shape} vs {y.shape}")
    return float(np.mean((y_pred - y) ** 2))
