"""Reference optimum and derivative checks for problem descriptors."""

from __future__ import annotations

import numpy as np

from ..core import OptimizationError, SolverError
from ..refopt import LineSearchConfig, gradient_descent, lbfgs

CALC_SOLUTION_TOL = 1e-10


def calc_solution(problem, max_iter=1000, tol_gnorm=CALC_SOLUTION_TOL):
    """Return ``(w_opt, f_opt)``.

    Smooth problems run L-BFGS from zero until the gradient norm reaches
    ``tol_gnorm`` or ``max_iter`` iterations pass.  Problems with a prox
    (L1) run proximal gradient descent with the fixed step 1/L instead, for
    up to ``20 * max_iter`` iterations since it converges more slowly.
    """
    try:
        if problem.prox is None:
            res = lbfgs(problem, max_iter=max_iter, tol_gnorm=tol_gnorm)
        else:
            step = 1.0 / problem.lipschitz()
            res = gradient_descent(problem, LineSearchConfig(kind="fixed", step=step),
                                   max_iter=20 * max_iter, tol_gnorm=tol_gnorm)
    except SolverError as exc:
        if exc.record is not None and len(exc.record) and not np.isfinite(exc.record.cost[-1]):
            raise OptimizationError(f"non-finite objective while computing the reference optimum: {exc}",
                                    exc.record, exc.w) from exc
        raise
    w_opt = res.w
    f_opt = problem.cost(w_opt)
    if not np.isfinite(f_opt):
        raise OptimizationError("non-finite objective at the reference optimum", res.record, w_opt)
    return w_opt, f_opt


def central_difference(fun, w, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    w = np.asarray(w, dtype=float)
    g = np.empty_like(w)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        g[j] = (fun(w + e) - fun(w - e)) / (2 * h)
    return g


def relative_error(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)


def gradcheck(problem, n_pairs=20, seed=0, h=1e-6, batch_size=None, w_scale=1.0):
    """Compare ``grad`` with finite differences and ``hess_vec`` with ``hess @ v``.

    Draws ``n_pairs`` random (w, batch, v) triples.  Returns a dict with the
    worst relative errors ``grad`` and ``hess_vec``.
    """
    rng = np.random.default_rng(seed)
    n, d = problem.n, problem.d
    b = batch_size or max(1, min(n, 5))
    worst_g = worst_h = 0.0
    for _ in range(n_pairs):
        w = w_scale * rng.standard_normal(d)
        v = rng.standard_normal(d)
        idx = rng.choice(n, size=b, replace=False)
        fd = central_difference(lambda u: problem.smooth_batch_cost(u, idx), w, h)
        worst_g = max(worst_g, relative_error(problem.grad(w, idx), fd))
        worst_h = max(worst_h, relative_error(problem.hess_vec(w, v, idx), problem.hess(w, idx) @ v))
    return {"grad": worst_g, "hess_vec": worst_h}
