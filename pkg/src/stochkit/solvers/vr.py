"""Variance-reduced solvers: SVRG, SAG/SAGA, SARAH(+), SVRG-BB and big-batch SGD.

Inner loops use ``wrap`` batches (every batch holds exactly b distinct
indices), so SVRG charges exactly n + 2*b*ceil(n/b) gradients per epoch.
"""

from __future__ import annotations

import numpy as np

from ..core import ConfigError, SolverRun, merge_options

SAG_MODES = ("SAG", "SAGA")
SARAH_MODES = ("plain", "Plus")


def _no_prox(problem, solver):
    if problem.prox is not None:
        raise ConfigError("problem", f"{solver} does not support proximal (L1) problems")


def svrg_estimator(problem, w, w_snap, mu_snap, idx):
    """grad(w, S) - grad(w_snap, S) + mu_snap."""
    return problem.grad(w, idx) - problem.grad(w_snap, idx) + mu_snap


def sarah_recursion(problem, w, w_prev, v_prev, idx):
    """v_t = grad(w_t, S) - grad(w_{t-1}, S) + v_{t-1}."""
    return problem.grad(w, idx) - problem.grad(w_prev, idx) + v_prev


def bb_step(s, y, m):
    """Barzilai-Borwein step for SVRG-BB: ||s||^2 / (m * s^T y)."""
    return float(s @ s) / (m * float(s @ y))


def _svrg_epoch(run, problem, w, step_of, direction=None):
    """One SVRG outer iteration starting from snapshot ``w``; returns the last iterate."""
    w_snap = w.copy()
    mu = problem.full_grad(w_snap)
    run.count(problem.n)
    for idx in run.batches(wrap=True):
        step = step_of()
        v = svrg_estimator(problem, w, w_snap, mu, idx)
        run.count(2 * len(idx))
        if direction is not None:
            v = direction(v)
        w = w - step * v
        if problem.prox is not None:
            w = problem.prox(w, step)
        run.iter += 1
    return w, w_snap, mu


def svrg(problem, options=None, **kwargs):
    """SVRG with inner length ceil(n/b); the next snapshot is the last inner iterate."""
    opts = merge_options(None, None, options, **kwargs)
    run = SolverRun("SVRG", problem, opts)
    w = run.initial_iterate()
    while not run.log(w):
        w, _, _ = _svrg_epoch(run, problem, w, run.step)
    return run.result(w)


class GradientTable:
    """Stored per-sample gradients and their running sum."""

    def __init__(self, n, d):
        self.table = np.zeros((n, d))
        self.total = np.zeros(d)

    def average(self):
        return self.total / len(self.table)

    def replace(self, idx, rows):
        """Swap in new rows for ``idx``; returns the old rows."""
        old = self.table[idx].copy()
        self.total += rows.sum(axis=0) - old.sum(axis=0)
        self.table[idx] = rows
        return old

    def refresh(self):
        """Recompute the running sum exactly from the table."""
        self.total = self.table.sum(axis=0)


def saga_estimator(table: GradientTable, idx, g_new):
    """mean_S(g_new - g_old) + table average; ``g_new`` has one row per index."""
    return (g_new - table.table[idx]).mean(axis=0) + table.average()


def sag(problem, options=None, **kwargs):
    """SAG or SAGA (``sub_mode``), table initialized to zeros.

    SAG:  v = (sum of table after replacing rows S) / n
    SAGA: v = mean_S(g_new - g_old) + (sum before replacing) / n
    SAGA applies the prox when present; SAG rejects L1 problems.
    """
    opts = merge_options(None, {"sub_mode": "SAG", "batch_size": 1}, options, **kwargs)
    mode = opts.sub_mode or "SAG"
    if mode not in SAG_MODES:
        raise ConfigError("sub_mode", f"{mode!r} not one of {', '.join(SAG_MODES)}")
    if mode == "SAG":
        _no_prox(problem, "SAG")
    run = SolverRun(mode, problem, opts)
    w = run.initial_iterate()
    table = GradientTable(problem.n, problem.d)
    while not run.log(w):
        for idx in run.batches(wrap=True):
            step = run.step()
            g_new = problem.grad_samples(w, idx)
            run.count(len(idx))
            if mode == "SAGA":
                v = saga_estimator(table, idx, g_new)
                table.replace(idx, g_new)
            else:
                table.replace(idx, g_new)
                v = table.average()
            w = w - step * v
            if problem.prox is not None:
                w = problem.prox(w, step)
            run.iter += 1
        table.refresh()
    run.diagnostics["table"] = table
    return run.result(w)


def sarah(problem, options=None, **kwargs):
    """SARAH; ``sub_mode='Plus'`` leaves the inner loop once ||v_t||^2 <= gamma ||v_0||^2.

    Each outer step sets v_0 = full_grad(w_0), takes w_1 = w_0 - eta v_0 and
    then runs the recursive estimator for up to ceil(n/b) - 1 more steps.
    """
    opts = merge_options(None, None, options, **kwargs)
    mode = opts.sub_mode or "plain"
    if mode not in SARAH_MODES:
        raise ConfigError("sub_mode", f"{mode!r} not one of {', '.join(SARAH_MODES)}")
    _no_prox(problem, "SARAH")
    gamma = opts.sarah_gamma
    run = SolverRun("SARAH" if mode == "plain" else "SARAH-Plus", problem, opts)
    m = run.inner_length()
    w = run.initial_iterate()
    while not run.log(w):
        v = problem.full_grad(w)
        run.count(problem.n)
        v0_sq = float(v @ v)
        w_prev = w
        w = w - run.step() * v
        run.iter += 1
        inner = 1
        for idx in run.batches(wrap=True):
            if inner >= m:
                break
            v = sarah_recursion(problem, w, w_prev, v, idx)
            run.count(2 * len(idx))
            if mode == "Plus" and float(v @ v) <= gamma * v0_sq:
                break
            w_prev = w
            w = w - run.step() * v
            run.iter += 1
            inner += 1
        run.add_extra("inner_steps", inner)
    return run.result(w)


def svrg_bb(problem, options=None, **kwargs):
    """SVRG with a Barzilai-Borwein step per epoch.

    Epoch 1 uses ``step_init``; from epoch 2 on, the step is
    ||s||^2 / (m s^T y) with s, y the differences of consecutive snapshots
    and snapshot gradients.  A non-positive or non-finite ratio keeps the
    previous step; steps are clamped to [1e-10, 1e10] * step_init.
    """
    opts = merge_options(None, None, options, **kwargs)
    run = SolverRun("SVRG-BB", problem, opts)
    m = run.inner_length()
    eta0 = opts.step_init
    eta = eta0
    w = run.initial_iterate()
    prev = None
    while not run.log(w):
        w_snap = w.copy()
        mu = problem.full_grad(w_snap)
        run.count(problem.n)
        if prev is not None:
            s, y = w_snap - prev[0], mu - prev[1]
            sy = float(s @ y)
            if sy > 0 and np.isfinite(sy):
                candidate = bb_step(s, y, m)
                if np.isfinite(candidate) and candidate > 0:
                    eta = min(max(candidate, 1e-10 * eta0), 1e10 * eta0)
        prev = (w_snap, mu)
        run.add_extra("step", eta)
        for idx in run.batches(wrap=True):
            v = svrg_estimator(problem, w, w_snap, mu, idx)
            run.count(2 * len(idx))
            w = w - eta * v
            if problem.prox is not None:
                w = problem.prox(w, eta)
            run.iter += 1
    return run.result(w)


def bb_sgd(problem, options=None, **kwargs):
    """Big-batch SGD: the batch doubles (capped at n) when the sampled gradient fails

        ||g_bar||^2 >= theta * V / b,

    where V is the sample variance of the per-sample gradients in the batch.
    An epoch ends once n samples have been processed; the batch never shrinks.
    """
    opts = merge_options(None, None, options, **kwargs)
    run = SolverRun("BB-SGD", problem, opts)
    n = problem.n
    b = opts.batch_size
    theta = opts.bb_theta
    w = run.initial_iterate()
    run.add_extra("batch_size", b)
    while not run.log(w):
        seen = 0
        while seen < n:
            step = run.step()
            idx = run.rng.choice(n, size=b, replace=False)
            G = problem.grad_samples(w, idx)
            run.count(b)
            seen += b
            g = G.mean(axis=0)
            if b < n:
                var = float(((G - g) ** 2).sum()) / (b - 1) if b > 1 else np.inf
                if not float(g @ g) >= theta * var / b:
                    b = min(2 * b, n)
            w = w - step * g
            if problem.prox is not None:
                w = problem.prox(w, step)
            run.iter += 1
        run.add_extra("batch_size", b)
    return run.result(w)
