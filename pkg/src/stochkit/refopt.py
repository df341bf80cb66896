"""Deterministic reference solvers: full gradient descent and L-BFGS.

These produce the reference optimum behind every optimality gap, and
double as oracles in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SolverRun, StagnationError, merge_options
from .solvers.curvature import CurvaturePairs


@dataclass(frozen=True)
class LineSearchConfig:
    """Step rule for the reference solvers.

    ``kind="fixed"`` always takes ``step``.  ``kind="backtracking"`` starts
    at ``step`` and multiplies by ``shrink`` until the Armijo condition

        f(w + t d) <= f(w) + c1 * t * g^T d

    holds, at most ``max_trials`` times.  Near the optimum the decrease can
    fall below the resolution of f; with ``rounding_tol > 0`` a trial whose
    cost change is within ``rounding_tol * max(1, |f|)`` and whose gradient
    norm is smaller is accepted as well.  The default 0 keeps the plain
    Armijo test (and hence a monotone cost).
    """

    kind: str = "backtracking"
    step: float = 1.0
    c1: float = 1e-4
    shrink: float = 0.5
    max_trials: int = 50
    rounding_tol: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "backtracking"):
            raise ValueError(f"unknown line search kind {self.kind!r}")
        if not 0 < self.c1 < 1:
            raise ValueError(f"c1 must lie in (0, 1), got {self.c1}")
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be > 0")


LBFGS_LINE_SEARCH = LineSearchConfig(rounding_tol=1e-14)


def armijo_backtracking(fun, grad, w, f0, g0, direction, config: LineSearchConfig):
    """Backtrack along ``direction``; returns (t, w_new, f_new, g_new).

    Returns ``t = 0`` when no trial passes.
    """
    slope = float(g0 @ direction)
    g0_norm = np.linalg.norm(g0)
    t = config.step
    for _ in range(config.max_trials):
        w_new = w + t * direction
        if np.array_equal(w_new, w):
            break
        f_new = fun(w_new)
        if np.isfinite(f_new):
            if f_new <= f0 + config.c1 * t * slope:
                return t, w_new, f_new, grad(w_new)
            if abs(f_new - f0) <= config.rounding_tol * max(1.0, abs(f0)):
                g_new = grad(w_new)
                if np.linalg.norm(g_new) < g0_norm:
                    return t, w_new, f_new, g_new
        t *= config.shrink
    return 0.0, w, f0, g0


def _ref_options(problem, max_iter, tol_gnorm, w0, store_w):
    return merge_options(None, None, {
        "max_epoch": max_iter, "tol_gnorm": tol_gnorm, "tol_optgap": 0.0,
        "batch_size": 1, "w_init": w0, "store_w": store_w,
    })


def gradient_descent(problem, step=None, max_iter=1000, tol_gnorm=1e-10, w0=None, store_w=False):
    """Full gradient descent, or proximal gradient descent when ``problem.prox`` exists.

    ``step`` is a :class:`LineSearchConfig` or a float (fixed step).  With a
    prox the stopping test uses the gradient mapping ||w - prox(w - t g, t)|| / t.
    """
    if step is None:
        step = LineSearchConfig()
    elif not isinstance(step, LineSearchConfig):
        step = LineSearchConfig(kind="fixed", step=float(step))
    opts = _ref_options(problem, max_iter, tol_gnorm, w0, store_w)
    run = SolverRun("GD", problem, opts)
    w = run.initial_iterate()
    prox = problem.prox
    n = problem.n
    # the gradient used by each step is charged to that step
    g = problem.full_grad(w)
    f = problem.cost(w) if prox is None else None
    while not run.log(w):
        if prox is not None:
            t = step.step
            w_new = prox(w - t * g, t)
            mapping = np.linalg.norm(w - w_new) / t
            if step.kind == "backtracking":
                # sufficient decrease for the composite objective
                for _ in range(step.max_trials):
                    diff = w_new - w
                    smooth_new = problem.smooth_batch_cost(w_new)
                    smooth_old = problem.smooth_batch_cost(w)
                    if smooth_new <= smooth_old + g @ diff + 0.5 / t * (diff @ diff):
                        break
                    t *= step.shrink
                    w_new = prox(w - t * g, t)
                else:
                    raise StagnationError("proximal line search exhausted", run.record, w)
                mapping = np.linalg.norm(w - w_new) / t
            w = w_new
            g = problem.full_grad(w)
            run.count(n)
            run.iter += 1
            if mapping <= tol_gnorm:
                run.log(w)
                run.termination_reason = "gnorm-tol"
                break
            continue
        direction = -g
        if step.kind == "fixed":
            w = w + step.step * direction
            f = problem.cost(w)
            g = problem.full_grad(w)
        else:
            t, w, f, g = armijo_backtracking(problem.cost, problem.full_grad, w, f, g, direction, step)
            if t == 0.0:
                raise StagnationError("line search exhausted its trials", run.record, w)
        run.count(n)
        run.iter += 1
    return run.result(w)


def lbfgs(problem, mem_size=10, max_iter=1000, tol_gnorm=1e-10, w0=None, line_search=None, store_w=False):
    """Limited-memory BFGS with backtracking Armijo line search.

    The default line search accepts rounding-level cost changes that still
    shrink the gradient (``LBFGS_LINE_SEARCH``); without that, progress
    stalls once the possible decrease drops below the resolution of f,
    long before ||g|| reaches 1e-10.  One record entry per iteration.  Stops when the full gradient norm
    drops to ``tol_gnorm`` or after ``max_iter`` iterations.
    """
    if problem.prox is not None:
        raise ValueError("lbfgs needs a smooth problem; use gradient_descent for L1 problems")
    config = line_search or LBFGS_LINE_SEARCH
    opts = _ref_options(problem, max_iter, tol_gnorm, w0, store_w)
    run = SolverRun("L-BFGS", problem, opts)
    memory = CurvaturePairs(mem_size)
    w = run.initial_iterate()
    f = problem.cost(w)
    g = problem.full_grad(w)
    while not run.log(w):
        direction = -memory.apply(g)
        if not float(g @ direction) < 0:
            memory.pairs.clear()
            direction = -g
        t, w_new, f_new, g_new = armijo_backtracking(problem.cost, problem.full_grad, w, f, g, direction, config)
        if t == 0.0 and len(memory):
            # retry along steepest descent with a fresh memory
            memory.pairs.clear()
            t, w_new, f_new, g_new = armijo_backtracking(problem.cost, problem.full_grad, w, f, g, -g, config)
        if t == 0.0:
            raise StagnationError("line search exhausted its trials", run.record, w)
        memory.push(w_new - w, g_new - g)
        w, f, g = w_new, f_new, g_new
        run.count(problem.n)
        run.iter += 1
    run.diagnostics["skipped_pairs"] = memory.skipped
    return run.result(w)
