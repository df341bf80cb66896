"""Stochastic quasi-Newton solvers: oBFGS/oLBFGS, the SQN family, SS-SVRG and IQN."""

from __future__ import annotations

import numpy as np

from ..core import ConditioningError, ConfigError, DivergedError, SolverRun, merge_options
from .curvature import CurvaturePairs, DenseInverseHessian, bfgs_update, powell_damping
from .vr import svrg_estimator

OBFGS_MODES = ("Inf-mem", "Lim-mem")
SLBFGS_MODES = ("SQN", "SVRG-SQN", "SVRG-LBFGS")


def _smooth_only(problem, solver):
    if problem.prox is not None:
        raise ConfigError("problem", f"{solver} needs a smooth problem")


def _checked(direction, run, w):
    if not np.all(np.isfinite(direction)):
        raise DivergedError(f"{run.name}: non-finite search direction", run.record, w)
    return direction


def obfgs(problem, options=None, callback=None, **kwargs):
    """Online BFGS.

    ``sub_mode='Inf-mem'`` keeps a dense inverse Hessian, ``'Lim-mem'`` a
    ring buffer of ``mem_size`` pairs.  Both gradients forming
    y = grad(w+, S) - grad(w, S) use the same mini-batch S.  ``delta > 0``
    shifts y <- y - delta s (regularized oBFGS); ``damped=True`` then applies
    Powell damping so that s^T y >= 0.2 s^T B s (dense memory only).
    Pairs with s^T y <= 0 after these safeguards are skipped.

    ``callback(memory, s, y)`` runs after every accepted update.
    """
    opts = merge_options(None, {"sub_mode": "Inf-mem"}, options, **kwargs)
    mode = opts.sub_mode or "Inf-mem"
    if mode not in OBFGS_MODES:
        raise ConfigError("sub_mode", f"{mode!r} not one of {', '.join(OBFGS_MODES)}")
    if opts.damped and mode != "Inf-mem":
        raise ConfigError("damped", "damping needs the dense (Inf-mem) inverse Hessian")
    _smooth_only(problem, "oBFGS")
    if mode == "Inf-mem":
        name = "Damp-oBFGS-Inf" if opts.damped else ("Reg-oBFGS-Inf" if opts.delta else "oBFGS-Inf")
        memory = DenseInverseHessian(problem.d)
    else:
        name = "oLBFGS-Lim"
        memory = CurvaturePairs(opts.mem_size)
    run = SolverRun(name, problem, opts)
    w = run.initial_iterate()
    while not run.log(w):
        for idx in run.batches(wrap=True):
            step = run.step()
            g = problem.grad(w, idx)
            direction = _checked(-memory.apply(g), run, w)
            s = step * direction
            w_new = w + s
            y = problem.grad(w_new, idx) - g
            run.count(2 * len(idx))
            if opts.delta:
                y = y - opts.delta * s
            if mode == "Inf-mem":
                if opts.damped:
                    y, _ = powell_damping(s, y, memory.B_times(s))
                accepted = memory.update(s, y)
            else:
                accepted = memory.push(s, y)
            if accepted and callback is not None:
                callback(memory, s, y)
            w = w_new
            run.iter += 1
    run.diagnostics["skipped_pairs"] = memory.skipped
    return run.result(w)


def slbfgs(problem, options=None, callback=None, **kwargs):
    """SQN-type limited-memory solvers.

    ``SQN``         stochastic gradients; every ``update_period`` steps a pair
                    s = mean of the last L iterates minus the previous mean,
                    y = hess_vec(mean, s, S_H) on an independent batch of
                    ``hess_batch_size`` (default 2b) samples.
    ``SVRG-SQN``    same pairs, SVRG gradient estimator.
    ``SVRG-LBFGS``  SVRG estimator; pairs from consecutive snapshots,
                    s = w~_k - w~_{k-1}, y = mu~_k - mu~_{k-1}.

    Until the first pair exists the search direction is the raw gradient.
    ``callback(memory, s, y)`` runs after every stored pair.
    """
    opts = merge_options(None, {"sub_mode": "SQN"}, options, **kwargs)
    mode = opts.sub_mode or "SQN"
    if mode not in SLBFGS_MODES:
        raise ConfigError("sub_mode", f"{mode!r} not one of {', '.join(SLBFGS_MODES)}")
    _smooth_only(problem, mode)
    n = problem.n
    L = opts.update_period
    b_H = min(n, opts.hess_batch_size or 2 * opts.batch_size)
    memory = CurvaturePairs(opts.mem_size)
    run = SolverRun(mode, problem, opts)
    w = run.initial_iterate()
    u_sum = np.zeros_like(w)
    u_prev = None
    prev_snap = None
    steps_since_pair = 0

    def store(s, y):
        if memory.push(s, y) and callback is not None:
            callback(memory, s, y)

    while not run.log(w):
        if mode != "SQN":
            w_snap = w.copy()
            mu = problem.full_grad(w_snap)
            run.count(n)
            if mode == "SVRG-LBFGS":
                if prev_snap is not None:
                    store(w_snap - prev_snap[0], mu - prev_snap[1])
                prev_snap = (w_snap, mu)
        for idx in run.batches(wrap=True):
            step = run.step()
            if mode == "SQN":
                v = problem.grad(w, idx)
                run.count(len(idx))
            else:
                v = svrg_estimator(problem, w, w_snap, mu, idx)
                run.count(2 * len(idx))
            direction = _checked(-memory.apply(v), run, w)
            w = w + step * direction
            run.iter += 1
            if mode == "SVRG-LBFGS":
                continue
            u_sum += w
            steps_since_pair += 1
            if steps_since_pair == L:
                u_new = u_sum / L
                if u_prev is not None:
                    s = u_new - u_prev
                    idx_h = run.aux_rng.choice(n, size=b_H, replace=False)
                    y = problem.hess_vec(u_new, s, idx_h)
                    run.count(b_H)
                    store(s, y)
                u_prev = u_new
                u_sum = np.zeros_like(w)
                steps_since_pair = 0
    run.diagnostics["skipped_pairs"] = memory.skipped
    run.diagnostics["pairs"] = list(memory.pairs)
    return run.result(w)


def subsampled_preconditioner(H, sigma_floor=None, sigma_ratio=1e-6):
    """Inverse of H with eigenvalues floored at ``sigma_floor``.

    The default floor is ``sigma_ratio`` times the largest eigenvalue.
    """
    evals, evecs = np.linalg.eigh(0.5 * (H + H.T))
    floor = sigma_floor if sigma_floor is not None else sigma_ratio * max(evals.max(), 0.0)
    if not floor > 0:
        raise ConditioningError("subsampled Hessian has no positive eigenvalue")
    evals = np.maximum(evals, floor)
    P = (evecs / evals) @ evecs.T
    return 0.5 * (P + P.T)


def subsamp_svrg(problem, options=None, callback=None, **kwargs):
    """SVRG preconditioned by a subsampled Hessian rebuilt at every snapshot.

    The Hessian comes from ``hess_batch_size`` samples (default 2b) at the
    snapshot; its eigenvalues are floored (``sigma_floor``, or
    ``sigma_ratio`` times the largest) before inversion.
    ``callback(P)`` receives each new preconditioner.
    """
    opts = merge_options(None, None, options, **kwargs)
    _smooth_only(problem, "SS-SVRG")
    n = problem.n
    b_H = min(n, opts.hess_batch_size or 2 * opts.batch_size)
    run = SolverRun("SS-SVRG", problem, opts)
    w = run.initial_iterate()
    while not run.log(w):
        w_snap = w.copy()
        mu = problem.full_grad(w_snap)
        run.count(n)
        idx_h = run.aux_rng.choice(n, size=b_H, replace=False)
        P = subsampled_preconditioner(problem.hess(w_snap, idx_h), opts.sigma_floor, opts.sigma_ratio)
        run.count(b_H)
        if callback is not None:
            callback(P)
        for idx in run.batches(wrap=True):
            step = run.step()
            v = svrg_estimator(problem, w, w_snap, mu, idx)
            run.count(2 * len(idx))
            w = w - step * _checked(P @ v, run, w)
            run.iter += 1
    return run.result(w)


class IqnState:
    """Per-sample memory of IQN plus the aggregates it maintains incrementally."""

    def __init__(self, problem, w0):
        n, d = problem.n, problem.d
        self.z = np.tile(w0, (n, 1))
        self.grads = problem.grad_samples(w0, np.arange(n))
        self.B = np.tile(np.eye(d), (n, 1, 1))
        self.B_sum = self.B.sum(axis=0)
        self.Bz_sum = np.einsum("ijk,ik->j", self.B, self.z)
        self.g_sum = self.grads.sum(axis=0)

    def recomputed(self):
        return (self.B.sum(axis=0), np.einsum("ijk,ik->j", self.B, self.z), self.grads.sum(axis=0))


def iqn(problem, options=None, callback=None, **kwargs):
    """Incremental quasi-Newton with unit step.

    Keeps per-sample iterates z_i, gradients and BFGS matrices B_i; the
    iterate is (sum B_i)^{-1} (sum B_i z_i - sum grad f_i(z_i)).  Sample
    i_t = t mod n is refreshed each step.  One epoch is one full cycle.
    ``callback(state)`` runs after every cycle.
    """
    opts = merge_options(None, {"batch_size": 1}, options, **kwargs)  # no mini-batches
    _smooth_only(problem, "IQN")
    n = problem.n
    run = SolverRun("IQN", problem, opts)
    w = run.initial_iterate()
    state = IqnState(problem, w)
    init_pending = n  # the initial per-sample gradients are charged to the first cycle
    while not run.log(w):
        run.count(init_pending)
        init_pending = 0
        for i in range(n):
            try:
                cond = np.linalg.cond(state.B_sum)
                if not np.isfinite(cond) or cond > 1e14:
                    raise np.linalg.LinAlgError(f"condition number {cond:.3g}")
                w_new = np.linalg.solve(state.B_sum, state.Bz_sum - state.g_sum)
            except np.linalg.LinAlgError as exc:
                raise ConditioningError(f"IQN: aggregated matrix is singular ({exc})", run.record, w) from None
            w = _checked(w_new, run, w)
            g_new = problem.grad_samples(w, [i])[0]
            run.count(1)
            s = w - state.z[i]
            y = g_new - state.grads[i]
            B_old = state.B[i]
            if float(s @ y) > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y) and float(s @ B_old @ s) > 0:
                B_new = bfgs_update(B_old, s, y)
            else:
                B_new = B_old
            state.B_sum += B_new - B_old
            state.Bz_sum += B_new @ w - B_old @ state.z[i]
            state.g_sum += g_new - state.grads[i]
            state.B[i] = B_new
            state.z[i] = w
            state.grads[i] = g_new
            run.iter += 1
        if callback is not None:
            callback(state)
    return run.result(w)
