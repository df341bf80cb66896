"""L1 regularization via the proximal operator."""

import numpy as np


def soft_threshold(w, thr):
    """Componentwise ``sign(w) * max(|w| - thr, 0)``.

    This is the proximal map of ``thr * ||.||_1``: the exact minimizer of
    ``1/2 ||x - w||^2 + thr ||x||_1``.
    """
    thr = float(thr)
    if not thr >= 0:
        raise ValueError(f"threshold must be >= 0, got {thr}")
    w = np.asarray(w, dtype=float)
    return np.sign(w) * np.maximum(np.abs(w) - thr, 0.0)


class L1Regularized:
    """Adds ``lam * ||w||_1`` to a smooth problem.

    Gradients, Hessians and Hessian-vector products are those of the smooth
    part; solvers handle the L1 term through :meth:`prox`.
    """

    def __init__(self, base, lam):
        lam = float(lam)
        if not lam > 0:
            raise ValueError(f"L1 weight must be > 0, got {lam}")
        self.base = base
        self.l1 = lam
        self.name = "l1_" + base.name
        self.task = base.task

    def __getattr__(self, attr):
        # everything not overridden (grad, hess, X, y, prediction, ...) is the base's
        if attr == "base":
            raise AttributeError(attr)
        return getattr(self.base, attr)

    @property
    def n(self):
        return self.base.n

    @property
    def d(self):
        return self.base.d

    @property
    def lam(self):
        return self.l1

    def reg(self, w):
        return self.base.reg(w) + self.l1 * float(np.abs(np.asarray(w, dtype=float)).sum())

    def smooth_batch_cost(self, w, idx=None):
        return self.base.batch_cost(w, idx)

    def batch_cost(self, w, idx=None):
        return self.base.batch_cost(w, idx) + self.l1 * float(np.abs(np.asarray(w, dtype=float)).sum())

    def cost(self, w):
        return self.batch_cost(w, None)

    def prox(self, w, step):
        return soft_threshold(w, step * self.l1)

    def calc_solution(self, max_iter=1000):
        from .solution import calc_solution

        return calc_solution(self, max_iter=max_iter)

    def __repr__(self):
        return f"L1Regularized({self.base!r}, lam={self.l1})"


def attach_l1(problem, lam):
    return L1Regularized(problem, lam)
