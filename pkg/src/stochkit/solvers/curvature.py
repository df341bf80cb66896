"""Curvature-pair storage and BFGS inverse-Hessian algebra."""

from __future__ import annotations

from collections import deque

import numpy as np


def two_loop(g, pairs, gamma=None):
    """Return H g for the L-BFGS inverse Hessian built from ``pairs``.

    ``pairs`` is an oldest-first sequence of (s, y).  The initial matrix is
    ``gamma * I``; ``gamma=None`` uses s^T y / y^T y of the newest pair (or
    1 when there is none).
    """
    q = np.array(g, dtype=float, copy=True)
    pairs = list(pairs)
    if gamma is None:
        if pairs:
            s, y = pairs[-1]
            gamma = float(s @ y) / float(y @ y)
        else:
            gamma = 1.0
    alphas = []
    for s, y in reversed(pairs):
        rho = 1.0 / float(s @ y)
        a = rho * float(s @ q)
        q -= a * y
        alphas.append((rho, a))
    r = gamma * q
    for (s, y), (rho, a) in zip(pairs, reversed(alphas)):
        b = rho * float(y @ r)
        r += (a - b) * s
    return r


def bfgs_inverse_update(H, s, y):
    """H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T, symmetrized."""
    rho = 1.0 / float(s @ y)
    Hy = H @ y
    yHy = float(y @ Hy)
    H_new = (H - rho * (np.outer(s, Hy) + np.outer(Hy, s))
             + (rho * rho * yHy + rho) * np.outer(s, s))
    return 0.5 * (H_new + H_new.T)


def bfgs_update(B, s, y):
    """Primal BFGS: B+ = B + y y^T / y^T s - B s s^T B / s^T B s."""
    Bs = B @ s
    B_new = B + np.outer(y, y) / float(y @ s) - np.outer(Bs, Bs) / float(s @ Bs)
    return 0.5 * (B_new + B_new.T)


def powell_damping(s, y, Bs, threshold=0.2):
    """Powell's damped y: theta*y + (1-theta)*B s so that s^T y >= threshold * s^T B s.

    Returns ``(y_damped, theta)``.
    """
    sy = float(s @ y)
    sBs = float(s @ Bs)
    if sy >= threshold * sBs:
        return y, 1.0
    theta = (1.0 - threshold) * sBs / (sBs - sy)
    return theta * y + (1.0 - theta) * Bs, theta


class CurvaturePairs:
    """Ring buffer of (s, y) pairs with s^T y > 0."""

    def __init__(self, mem_size):
        self.mem_size = int(mem_size)
        self.pairs: deque = deque(maxlen=self.mem_size)
        self.skipped = 0

    def __len__(self):
        return len(self.pairs)

    def push(self, s, y, tol=1e-12):
        """Store the pair unless s^T y <= tol * ||s|| ||y||; returns True if stored."""
        sy = float(s @ y)
        if not np.isfinite(sy) or sy <= tol * np.linalg.norm(s) * np.linalg.norm(y):
            self.skipped += 1
            return False
        self.pairs.append((np.array(s, dtype=float), np.array(y, dtype=float)))
        return True

    def apply(self, g):
        return two_loop(g, self.pairs)


class DenseInverseHessian:
    """Dense BFGS estimate H of the inverse Hessian.

    H is the identity until the first accepted pair, which rescales it to
    (s^T y / y^T y) I before the first update.
    """

    def __init__(self, d):
        self.H = np.eye(d)
        self.updates = 0
        self.skipped = 0

    def apply(self, g):
        return self.H @ g

    def B_times(self, s):
        """B s with B = H^{-1}."""
        return np.linalg.solve(self.H, s)

    def update(self, s, y, tol=1e-12):
        sy = float(s @ y)
        if not np.isfinite(sy) or sy <= tol * np.linalg.norm(s) * np.linalg.norm(y):
            self.skipped += 1
            return False
        if self.updates == 0:
            self.H = (sy / float(y @ y)) * np.eye(len(s))
        self.H = bfgs_inverse_update(self.H, s, y)
        self.updates += 1
        return True
