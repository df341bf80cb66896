"""First-order stochastic solvers: SGD, momentum, and the adaptive family.

Each epoch visits ceil(n/b) mini-batches drawn from a fresh permutation,
so exactly n per-sample gradients are charged per epoch.  When the
problem has a prox, it is applied after every update with the scalar
schedule step.
"""

from __future__ import annotations

import numpy as np

from ..core import ConfigError, SolverRun, merge_options

CM_MODES = ("CM", "CM-NAG")
ADAGRAD_MODES = ("AdaGrad", "RMSProp", "AdaDelta")
ADAM_MODES = ("Adam", "AdaMax")


def _check_mode(opts, modes, default):
    mode = opts.sub_mode or default
    if mode not in modes:
        raise ConfigError("sub_mode", f"{mode!r} not one of {', '.join(modes)}")
    return mode


def _apply_prox(problem, w, step):
    return w if problem.prox is None else problem.prox(w, step)


def sgd(problem, options=None, **kwargs):
    """Plain mini-batch SGD: w <- w - eta * grad(w, S)."""
    opts = merge_options(None, None, options, **kwargs)
    run = SolverRun("SGD", problem, opts)
    w = run.initial_iterate()
    while not run.log(w):
        for idx in run.batches():
            step = run.step()
            g = problem.grad(w, idx)
            run.count(len(idx))
            w = _apply_prox(problem, w - step * g, step)
            run.iter += 1
    return run.result(w)


def sgd_cm(problem, options=None, **kwargs):
    """SGD with classical momentum (``CM``) or Nesterov look-ahead (``CM-NAG``).

    CM:      u <- rho u - eta grad(w);         w <- w + u
    CM-NAG:  u <- rho u - eta grad(w + rho u); w <- w + u
    """
    opts = merge_options(None, {"sub_mode": "CM"}, options, **kwargs)
    mode = _check_mode(opts, CM_MODES, "CM")
    rho = opts.momentum
    run = SolverRun(f"SGD-{mode}", problem, opts)
    w = run.initial_iterate()
    u = np.zeros_like(w)
    while not run.log(w):
        for idx in run.batches():
            step = run.step()
            point = w + rho * u if mode == "CM-NAG" else w
            g = problem.grad(point, idx)
            run.count(len(idx))
            u = rho * u - step * g
            w = _apply_prox(problem, w + u, step)
            run.iter += 1
    return run.result(w)


def adagrad(problem, options=None, **kwargs):
    """AdaGrad, RMSProp and AdaDelta, selected by ``sub_mode``.

    ``epsilon`` defaults to 1e-8 (1e-6 for AdaDelta); ``rho`` is the
    RMSProp/AdaDelta decay, 0.9 and 0.95 by default.  AdaDelta ignores the
    step schedule for its update.
    """
    opts = merge_options(None, {"sub_mode": "AdaGrad"}, options, **kwargs)
    mode = _check_mode(opts, ADAGRAD_MODES, "AdaGrad")
    eps = opts.epsilon if opts.epsilon is not None else (1e-6 if mode == "AdaDelta" else 1e-8)
    rho = opts.rho if opts.rho is not None else (0.95 if mode == "AdaDelta" else 0.9)
    run = SolverRun(mode, problem, opts)
    w = run.initial_iterate()
    v = np.zeros_like(w)  # accumulated squared gradients
    dx2 = np.zeros_like(w)  # AdaDelta: accumulated squared updates
    while not run.log(w):
        for idx in run.batches():
            step = run.step()
            g = problem.grad(w, idx)
            run.count(len(idx))
            if mode == "AdaGrad":
                v += g * g
                delta = -step * g / (np.sqrt(v) + eps)
            elif mode == "RMSProp":
                v = rho * v + (1 - rho) * g * g
                delta = -step * g / (np.sqrt(v) + eps)
            else:
                v = rho * v + (1 - rho) * g * g
                delta = -np.sqrt(dx2 + eps) / np.sqrt(v + eps) * g
                dx2 = rho * dx2 + (1 - rho) * delta * delta
            w = _apply_prox(problem, w + delta, step)
            run.iter += 1
    run.diagnostics["accumulator"] = v
    return run.result(w)


def adam(problem, options=None, **kwargs):
    """Adam (bias-corrected moments) or AdaMax (infinity-norm second moment).

    Defaults beta1=0.9, beta2=0.999, epsilon=1e-8.
    """
    opts = merge_options(None, {"sub_mode": "Adam"}, options, **kwargs)
    mode = _check_mode(opts, ADAM_MODES, "Adam")
    b1, b2 = opts.beta1, opts.beta2
    eps = 1e-8 if opts.epsilon is None else opts.epsilon
    run = SolverRun(mode, problem, opts)
    w = run.initial_iterate()
    m = np.zeros_like(w)
    v = np.zeros_like(w)
    t = 0
    while not run.log(w):
        for idx in run.batches():
            step = run.step()
            g = problem.grad(w, idx)
            run.count(len(idx))
            t += 1
            m = b1 * m + (1 - b1) * g
            if mode == "Adam":
                v = b2 * v + (1 - b2) * g * g
                m_hat = m / (1 - b1 ** t)
                v_hat = v / (1 - b2 ** t)
                delta = -step * m_hat / (np.sqrt(v_hat) + eps)
            else:
                v = np.maximum(b2 * v, np.abs(g))
                delta = -(step / (1 - b1 ** t)) * m / (v + eps)
            w = _apply_prox(problem, w + delta, step)
            run.iter += 1
    return run.result(w)
