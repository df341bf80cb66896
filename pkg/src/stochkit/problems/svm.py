import numpy as np

from .logistic import BinaryClassifier


class LinearSVM(BinaryClassifier):
    """Squared-hinge linear SVM.

    f_i(w) = 1/2 max(0, 1 - y_i w^T x_i)^2 + lam/2 ||w||^2

    The squared hinge is differentiable, so every gradient-based solver
    applies.  Its second derivative jumps at margin 1; ``hess`` returns the
    generalized Hessian (active samples only).
    """

    name = "linear_svm"

    def _slack(self, w, idx):
        return np.maximum(0.0, 1.0 - self._margins(w, idx))

    def _losses(self, w, idx):
        return 0.5 * self._slack(w, idx) ** 2

    def _grad_rows(self, w, idx):
        return (-self.y[idx] * self._slack(w, idx))[:, None] * self.X[idx]

    def _grad_loss(self, w, idx):
        return self.X[idx].T @ (-self.y[idx] * self._slack(w, idx)) / len(idx)

    def _active(self, w, idx):
        return (self._margins(w, idx) < 1.0).astype(float)

    def _hess_loss(self, w, idx):
        Xs = self.X[idx]
        return (Xs.T * self._active(w, idx)) @ Xs / len(idx)

    def _hess_vec_loss(self, w, v, idx):
        Xs = self.X[idx]
        return Xs.T @ (self._active(w, idx) * (Xs @ v)) / len(idx)
