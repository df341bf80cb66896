"""Synthetic datasets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRAIN_FRACTION = 0.8


@dataclass
class Dataset:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray | None = None
    y_test: np.ndarray | None = None
    w_init: np.ndarray | None = None
    w_true: np.ndarray | None = None
    n_classes: int | None = None

    def __post_init__(self):
        if self.X_train.shape[0] != self.y_train.shape[0]:
            raise ValueError("X_train and y_train disagree on the sample count")
        if self.X_test is not None and self.X_test.shape[0] != self.y_test.shape[0]:
            raise ValueError("X_test and y_test disagree on the sample count")

    @property
    def n(self):
        return self.X_train.shape[0]

    @property
    def n_features(self):
        return self.X_train.shape[1]


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _split(X, y, n):
    n_train = max(1, min(n - 1, int(round(TRAIN_FRACTION * n))))
    return X[:n_train], y[:n_train], X[n_train:], y[n_train:]


def generate_logistic_data(n, d, seed=0, w_scale=50.0, feature_scales=None):
    """Two Gaussian clusters with means +-mu, mu_j = 2/sqrt(d), unit covariance.

    Labels are +-1 with equal probability; the first 80% of samples form
    the training split.  ``w_init`` is drawn N(0, w_scale^2 I), far from the
    optimum so convergence curves span several decades.
    ``feature_scales`` multiplies the feature columns (ill-conditioned variants).
    """
    if n < 2 or d < 1:
        raise ValueError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    rng = _rng(seed)
    y = rng.choice(np.array([-1.0, 1.0]), size=n)
    mu = np.full(d, 2.0 / np.sqrt(d))
    X = y[:, None] * mu + rng.standard_normal((n, d))
    w_init = w_scale * rng.standard_normal(d)
    if feature_scales is not None:
        X = X * np.asarray(feature_scales, dtype=float)
    X_tr, y_tr, X_te, y_te = _split(X, y, n)
    return Dataset(X_tr, y_tr, X_te, y_te, w_init=w_init)


def generate_linear_data(n, d, noise_sigma=0.1, seed=0):
    """y = X w_true + noise, X and w_true standard normal."""
    if n < 2 or d < 1:
        raise ValueError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    rng = _rng(seed)
    w_true = rng.standard_normal(d)
    X = rng.standard_normal((n, d))
    y = X @ w_true + noise_sigma * rng.standard_normal(n)
    w_init = rng.standard_normal(d)
    X_tr, y_tr, X_te, y_te = _split(X, y, n)
    return Dataset(X_tr, y_tr, X_te, y_te, w_init=w_init, w_true=w_true)


def generate_softmax_data(n, d, n_classes=3, seed=0, spread=2.0):
    """Gaussian blobs around class centers drawn N(0, spread^2 I); labels 0..C-1.

    ``w_init`` is the flattened (class-major) d x C zero-mean start.
    """
    if n < 2 or d < 1 or n_classes < 2:
        raise ValueError(f"need n >= 2, d >= 1, C >= 2, got n={n}, d={d}, C={n_classes}")
    rng = _rng(seed)
    centers = spread * rng.standard_normal((n_classes, d))
    y = rng.integers(0, n_classes, size=n)
    X = centers[y] + rng.standard_normal((n, d))
    w_init = rng.standard_normal(d * n_classes)
    X_tr, y_tr, X_te, y_te = _split(X, y, n)
    return Dataset(X_tr, y_tr, X_te, y_te, w_init=w_init, n_classes=n_classes)


def generate_ill_conditioned_data(n=200, d=2, cond=1e4, lam=1e-6, smallest=1.0, seed=0):
    """Noise-free regression data whose ridge Hessian X^T X / n + lam I has
    eigenvalues spaced geometrically from ``smallest * cond`` down to ``smallest``.

    With d=2 and the defaults the two feature directions have scales 100
    and 1.  The features are whitened so the spectrum is exact, then
    rotated by a random orthogonal matrix.  ``w_true`` has component
    1/sqrt(eig) along each eigenvector, so every direction starts with the
    same share of the initial gap from ``w_init = 0``.  No test split.
    """
    if d < 2 or n < d or cond < 1:
        raise ValueError(f"need d >= 2, n >= d and cond >= 1, got n={n}, d={d}, cond={cond}")
    rng = _rng(seed)
    eig = smallest * np.geomspace(cond, 1.0, d)
    if lam >= eig[-1]:
        raise ValueError(f"lam={lam} must be below the smallest eigenvalue {eig[-1]}")
    Z = rng.standard_normal((n, d))
    Z -= Z.mean(axis=0)
    # whiten: Z^T Z / n = I exactly
    evals, evecs = np.linalg.eigh(Z.T @ Z / n)
    Z = Z @ evecs / np.sqrt(evals) @ evecs.T
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    X = (Z * np.sqrt(eig - lam)) @ Q.T
    w_true = Q @ (1.0 / np.sqrt(eig))
    y = X @ w_true
    return Dataset(X, y, w_init=np.zeros(d), w_true=w_true)
