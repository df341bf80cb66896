"""Finite-sum problem descriptors.

A descriptor bundles the data and hand-coded derivatives of

    f(w) = 1/n sum_i f_i(w),   f_i(w) = loss(w; x_i, y_i) + reg(w)

Solvers only ever talk to the methods defined on :class:`Problem`.
Index arguments ``idx`` are integer arrays of sample indices; ``None``
stands for all samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScoreReport:
    kind: str  # "accuracy" or "mse"
    value: float


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def power_iteration(matvec, d, iters=200, seed=0, tol=1e-12):
    """Largest eigenvalue of a symmetric PSD operator given as a matvec."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        u = matvec(v)
        lam_new = float(v @ u)
        norm = np.linalg.norm(u)
        if norm == 0:
            return 0.0
        v = u / norm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


class Problem:
    """Base class for smooth L2-regularized finite-sum problems.

    Subclasses implement ``_losses``, ``_grad_rows`` (per-sample loss
    gradients as a matrix) and ``_hess_loss``/``_hess_vec_loss``; the
    regularizer ``lam/2 ||w||^2`` is added here.
    """

    name = "problem"
    task = "regression"  # or "classification"
    prox = None
    curvature_bound = 1.0  # sup of the loss second derivative in the margin

    def __init__(self, X, y, lam=0.0):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"X must be a 2-D array, got shape {X.shape}")
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if X.shape[0] < 1:
            raise ValueError("need at least one sample")
        if not np.isfinite(X).all():
            raise ValueError("X contains non-finite entries")
        lam = float(lam)
        if not lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {lam}")
        self.X = _frozen(X)
        self.lam = lam
        self.n_samples, self.n_features = X.shape

    # -- shape -----------------------------------------------------------
    @property
    def n(self) -> int:
        return self.n_samples

    @property
    def d(self) -> int:
        return self.n_features

    def _idx(self, idx):
        if idx is None:
            return np.arange(self.n)
        return np.atleast_1d(np.asarray(idx, dtype=np.intp))

    # -- subclass hooks --------------------------------------------------
    def _losses(self, w, idx):
        raise NotImplementedError

    def _grad_rows(self, w, idx):
        raise NotImplementedError

    def _grad_loss(self, w, idx):
        return self._grad_rows(w, idx).mean(axis=0)

    def _hess_loss(self, w, idx):
        raise NotImplementedError

    def _hess_vec_loss(self, w, v, idx):
        return self._hess_loss(w, idx) @ v

    # -- descriptor contract ---------------------------------------------
    def reg(self, w):
        w = np.asarray(w, dtype=float)
        return 0.5 * self.lam * float(w @ w)

    def batch_cost(self, w, idx=None):
        """Mean of f_i over ``idx`` (regularizer included)."""
        w = np.asarray(w, dtype=float)
        return float(self._losses(w, self._idx(idx)).mean()) + self.reg(w)

    def cost(self, w):
        return self.batch_cost(w, None)

    def smooth_batch_cost(self, w, idx=None):
        """The part of ``batch_cost`` that ``grad`` differentiates."""
        return self.batch_cost(w, idx)

    def grad(self, w, idx=None):
        """Mini-batch gradient 1/|S| sum_{i in S} grad f_i(w)."""
        w = np.asarray(w, dtype=float)
        return self._grad_loss(w, self._idx(idx)) + self.lam * w

    def full_grad(self, w):
        return self.grad(w, None)

    def grad_samples(self, w, idx=None):
        """Per-sample gradients grad f_i(w), one row per index."""
        w = np.asarray(w, dtype=float)
        return self._grad_rows(w, self._idx(idx)) + self.lam * w

    def hess(self, w, idx=None):
        w = np.asarray(w, dtype=float)
        return self._hess_loss(w, self._idx(idx)) + self.lam * np.eye(self.d)

    def full_hess(self, w):
        return self.hess(w, None)

    def hess_vec(self, w, v, idx=None):
        w = np.asarray(w, dtype=float)
        v = np.asarray(v, dtype=float)
        return self._hess_vec_loss(w, v, self._idx(idx)) + self.lam * v

    # -- extras ------------------------------------------------------------
    def lipschitz(self) -> float:
        """Upper estimate of the gradient Lipschitz constant of f.

        Power iteration on the Gram matrix X^T X / n, scaled by the loss
        curvature bound, plus the L2 weight.
        """
        X = self.X
        top = power_iteration(lambda v: X.T @ (X @ v) / self.n, X.shape[1])
        return self.curvature_bound * top + self.lam

    def lipschitz_max(self) -> float:
        """Largest per-sample smoothness constant max_i L_i."""
        row_norms = np.einsum("ij,ij->i", self.X, self.X)
        return self.curvature_bound * float(row_norms.max()) + self.lam

    def prediction(self, w, X=None):
        raise NotImplementedError(f"{self.name} has no prediction rule")

    def score(self, w, X=None, y=None) -> ScoreReport:
        raise NotImplementedError(f"{self.name} has no scoring rule")

    def calc_solution(self, max_iter=1000):
        from .solution import calc_solution

        return calc_solution(self, max_iter=max_iter)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, d={self.d}, lam={self.lam})"
