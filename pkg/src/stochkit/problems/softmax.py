import numpy as np
from scipy.special import log_softmax, softmax

from .base import Problem, ScoreReport, _frozen
from .logistic import accuracy


class SoftmaxRegression(Problem):
    """Multinomial logistic regression over a weight matrix W (features x classes).

    The solver sees W flattened class-major: ``w = W.ravel(order="F")``,
    so entries ``w[c*p:(c+1)*p]`` are the weights of class ``c`` (``p`` is
    the feature count).  Use :meth:`unflatten` to get W back.
    """

    name = "softmax_regression"
    task = "classification"
    curvature_bound = 0.5

    def __init__(self, X, y, n_classes=None, lam=0.0):
        super().__init__(X, y, lam)
        y = np.asarray(y)
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise ValueError("class labels must be integers")
        y = y.astype(np.intp)
        if n_classes is None:
            n_classes = int(y.max()) + 1
        n_classes = int(n_classes)
        if n_classes < 2:
            raise ValueError(f"need at least 2 classes, got {n_classes}")
        if y.min() < 0 or y.max() >= n_classes:
            i = int(np.flatnonzero((y < 0) | (y >= n_classes))[0])
            raise ValueError(f"label y[{i}] = {y[i]} outside 0..{n_classes - 1}")
        self.n_classes = n_classes
        self.y = _frozen(y, dtype=np.intp)
        self._onehot = _frozen(np.eye(n_classes)[y])

    @property
    def d(self):
        return self.n_features * self.n_classes

    def unflatten(self, w):
        return np.asarray(w, dtype=float).reshape(self.n_features, self.n_classes, order="F")

    @staticmethod
    def flatten(W):
        return np.asarray(W, dtype=float).ravel(order="F")

    def probabilities(self, w, X=None):
        X = self.X if X is None else np.asarray(X, dtype=float)
        return softmax(X @ self.unflatten(w), axis=1)

    def _losses(self, w, idx):
        logp = log_softmax(self.X[idx] @ self.unflatten(w), axis=1)
        return -logp[np.arange(len(idx)), self.y[idx]]

    def _residual(self, w, idx):
        return softmax(self.X[idx] @ self.unflatten(w), axis=1) - self._onehot[idx]

    def _grad_rows(self, w, idx):
        R = self._residual(w, idx)  # |S| x C
        Xs = self.X[idx]
        # row i: kron(R_i, x_i) in class-major order
        return (R[:, :, None] * Xs[:, None, :]).reshape(len(idx), -1)

    def _grad_loss(self, w, idx):
        G = self.X[idx].T @ self._residual(w, idx) / len(idx)
        return self.flatten(G)

    def _hess_loss(self, w, idx):
        Xs = self.X[idx]
        P = softmax(Xs @ self.unflatten(w), axis=1)
        A = P[:, :, None] * np.eye(self.n_classes) - P[:, :, None] * P[:, None, :]
        H = np.einsum("iab,ij,ik->ajbk", A, Xs, Xs) / len(idx)
        return H.reshape(self.d, self.d)

    def _hess_vec_loss(self, w, v, idx):
        Xs = self.X[idx]
        P = softmax(Xs @ self.unflatten(w), axis=1)
        Z = Xs @ self.unflatten(v)
        R = P * Z - P * np.sum(P * Z, axis=1, keepdims=True)
        return self.flatten(Xs.T @ R / len(idx))

    def prediction(self, w, X=None):
        X = self.X if X is None else np.asarray(X, dtype=float)
        return np.argmax(X @ self.unflatten(w), axis=1)

    def score(self, w, X=None, y=None):
        if X is None:
            X, y = self.X, self.y
        return ScoreReport("accuracy", accuracy(self.prediction(w, X), np.asarray(y)))
