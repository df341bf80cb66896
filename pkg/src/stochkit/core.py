"""Shared solver machinery: options, step sizes, per-epoch records, stopping.

Every solver in :mod:`stochkit.solvers` follows the same skeleton::

    opts = merge_options(GLOBAL_DEFAULTS, LOCAL_DEFAULTS, user_options)
    run = SolverRun("SGD", problem, opts)
    w = run.initial_iterate()
    while not run.log(w):
        ...  # one epoch of updates
    return run.result(w)

:class:`SolverRun` owns the random stream, the counters, the clock and the
:class:`RunRecord`; the solver body only does arithmetic.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping

import numpy as np

logger = logging.getLogger(__name__)

STEP_ALGS = ("fix", "decay", "decay-2", "decay-3", "custom")
SAMPLING = ("permutation", "iid")


class ConfigError(ValueError):
    """Invalid option value or combination; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class SolverError(RuntimeError):
    """Base class for run-time solver failures carrying the partial record."""

    def __init__(self, message: str, record: "RunRecord | None" = None, w=None):
        super().__init__(message)
        self.record = record
        self.w = w


class DivergedError(SolverError):
    pass


class ConditioningError(SolverError):
    pass


class StagnationError(SolverError):
    pass


class OptimizationError(SolverError):
    pass


@dataclass
class SolverOptions:
    """Merged solver configuration.

    Fields left at ``None`` mean "solver decides" (for example ``epsilon``
    is 1e-8 for Adam but 1e-6 for AdaDelta).
    """

    max_epoch: int = 100
    batch_size: int = 10
    step_init: float = 0.1
    step_alg: str = "fix"
    step_lambda: float = 0.1
    tol_optgap: float = 1e-12
    tol_gnorm: float = 1e-12
    f_opt: float | None = None
    sub_mode: str | None = None
    # quasi-Newton
    delta: float = 0.0
    damped: bool = False
    mem_size: int = 10
    update_period: int = 10
    hess_batch_size: int | None = None
    sigma_ratio: float = 1e-6
    sigma_floor: float | None = None
    # first-order knobs
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    rho: float | None = None
    epsilon: float | None = None
    # variance reduction knobs
    sarah_gamma: float = 0.125
    bb_theta: float = 1.0
    sampling: str = "permutation"
    # bookkeeping
    store_w: bool = False
    seed: int = 0
    custom_step: Callable[[int, "SolverOptions"], float] | None = None
    w_init: Any = None
    verbose: bool = False

    def schedule(self) -> "StepSchedule":
        kind = "custom" if self.custom_step is not None else self.step_alg
        return StepSchedule(kind, self.step_init, self.step_lambda, self.custom_step)


OPTION_NAMES = tuple(f.name for f in dataclasses.fields(SolverOptions))
GLOBAL_DEFAULTS = SolverOptions()


def _as_mapping(opts) -> dict:
    if opts is None:
        return {}
    if isinstance(opts, SolverOptions):
        return {name: getattr(opts, name) for name in OPTION_NAMES}
    if isinstance(opts, Mapping):
        return dict(opts)
    raise TypeError(f"options must be a mapping or SolverOptions, not {type(opts).__name__}")


def _check_positive_int(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ConfigError(name, f"expected an integer >= {minimum}, got {value!r}")


def _check_nonneg(name, value, strict=False):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {value!r}") from None
    if math.isnan(v) or v < 0 or (strict and v == 0):
        bound = "> 0" if strict else ">= 0"
        raise ConfigError(name, f"expected a value {bound}, got {value!r}")


def validate_options(opts: SolverOptions) -> SolverOptions:
    _check_positive_int("max_epoch", opts.max_epoch)
    _check_positive_int("batch_size", opts.batch_size)
    _check_positive_int("mem_size", opts.mem_size)
    _check_positive_int("update_period", opts.update_period)
    if opts.hess_batch_size is not None:
        _check_positive_int("hess_batch_size", opts.hess_batch_size)
    _check_nonneg("step_init", opts.step_init, strict=True)
    _check_nonneg("step_lambda", opts.step_lambda)
    _check_nonneg("tol_optgap", opts.tol_optgap)
    _check_nonneg("tol_gnorm", opts.tol_gnorm)
    _check_nonneg("delta", opts.delta)
    _check_nonneg("sigma_ratio", opts.sigma_ratio)
    _check_nonneg("bb_theta", opts.bb_theta)
    _check_nonneg("sarah_gamma", opts.sarah_gamma)
    if opts.sigma_floor is not None:
        _check_nonneg("sigma_floor", opts.sigma_floor, strict=True)
    if opts.epsilon is not None:
        _check_nonneg("epsilon", opts.epsilon, strict=True)
    if not 0 <= opts.momentum < 1:
        raise ConfigError("momentum", f"expected a value in [0, 1), got {opts.momentum!r}")
    for name in ("beta1", "beta2"):
        if not 0 <= getattr(opts, name) < 1:
            raise ConfigError(name, f"expected a value in [0, 1), got {getattr(opts, name)!r}")
    if opts.rho is not None and not 0 < opts.rho < 1:
        raise ConfigError("rho", f"expected a value in (0, 1), got {opts.rho!r}")
    if opts.step_alg not in STEP_ALGS:
        raise ConfigError("step_alg", f"unknown schedule {opts.step_alg!r}; valid: {', '.join(STEP_ALGS)}")
    if opts.step_alg == "custom" and opts.custom_step is None:
        raise ConfigError("custom_step", "step_alg='custom' needs a custom_step function")
    if opts.custom_step is not None and not callable(opts.custom_step):
        raise ConfigError("custom_step", "must be callable as f(k, options)")
    if opts.sampling not in SAMPLING:
        raise ConfigError("sampling", f"expected one of {SAMPLING}, got {opts.sampling!r}")
    _check_positive_int("seed", opts.seed, minimum=0)
    return opts


def merge_options(global_defaults=None, local_defaults=None, user=None, **overrides) -> SolverOptions:
    """Merge option layers field by field: user > local > global.

    Each layer may be a :class:`SolverOptions`, a plain mapping holding a
    subset of fields, or ``None``.  Keyword ``overrides`` sit on top of
    ``user``.  Unknown field names raise :class:`ConfigError`.
    """
    merged = _as_mapping(GLOBAL_DEFAULTS if global_defaults is None else global_defaults)
    for layer in (local_defaults, user, overrides):
        layer = _as_mapping(layer)
        unknown = sorted(set(layer) - set(OPTION_NAMES))
        if unknown:
            raise ConfigError(unknown[0], "unknown option")
        merged.update(layer)
    return validate_options(SolverOptions(**merged))


@dataclass(frozen=True)
class StepSchedule:
    kind: str = "fix"
    step_init: float = 0.1
    step_lambda: float = 0.0
    custom: Callable | None = None


def eval_stepsize(k: int, sched: StepSchedule, options: SolverOptions | None = None) -> float:
    """Step size at total inner iteration ``k``.

    ``fix``      eta0
    ``decay``    eta0 / (1 + eta0 * lambda * k)
    ``decay-2``  eta0 / (1 + k)
    ``decay-3``  eta0 / (lambda + k)
    ``custom``   ``sched.custom(k, options)``
    """
    eta0, lam = sched.step_init, sched.step_lambda
    if sched.kind == "fix":
        return eta0
    if sched.kind == "decay":
        return eta0 / (1 + eta0 * lam * k)
    if sched.kind == "decay-2":
        return eta0 / (1 + k)
    if sched.kind == "decay-3":
        if lam + k == 0:
            raise ZeroDivisionError("decay-3 schedule undefined at k=0 with step_lambda=0")
        return eta0 / (lam + k)
    if sched.kind == "custom":
        if sched.custom is None:
            raise ConfigError("custom_step", "custom schedule without a function")
        return sched.custom(k, options)
    raise ConfigError("step_alg", f"unknown schedule {sched.kind!r}")


RECORD_FIELDS = ("iter", "time", "grad_calc_count", "optgap", "cost", "gnorm", "reg")


@dataclass
class RunRecord:
    """Per-epoch statistics, one entry per logged epoch (epoch 0 = start).

    ``extra`` holds solver-specific per-epoch series such as the SVRG-BB
    step size or the BB-SGD batch size.
    """

    iter: list = field(default_factory=list)
    time: list = field(default_factory=list)
    grad_calc_count: list = field(default_factory=list)
    optgap: list = field(default_factory=list)
    cost: list = field(default_factory=list)
    gnorm: list = field(default_factory=list)
    reg: list = field(default_factory=list)
    w_hist: list | None = None
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cost)

    @property
    def epochs(self) -> int:
        return len(self.cost) - 1

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name), dtype=float)

    def with_f_opt(self, f_opt: float) -> "RunRecord":
        """Copy of the record with the optimality gap computed against ``f_opt``."""
        return RunRecord(
            iter=list(self.iter), time=list(self.time), grad_calc_count=list(self.grad_calc_count),
            optgap=[c - f_opt for c in self.cost], cost=list(self.cost), gnorm=list(self.gnorm),
            reg=list(self.reg), w_hist=None if self.w_hist is None else list(self.w_hist),
            extra={k: list(v) for k, v in self.extra.items()},
        )


def record_epoch(record: RunRecord, problem, w, counters: Mapping, opts: SolverOptions) -> RunRecord:
    """Append the statistics of iterate ``w`` to ``record`` (in place)."""
    if len(record):
        if counters["iter"] < record.iter[-1] or counters["grad_calc_count"] < record.grad_calc_count[-1]:
            raise ValueError("counters must be nondecreasing")
    with np.errstate(over="ignore", invalid="ignore"):
        cost = float(problem.cost(w))
        gnorm = float(np.linalg.norm(problem.full_grad(w)))
        reg = float(problem.reg(w))
    record.iter.append(int(counters["iter"]))
    record.grad_calc_count.append(int(counters["grad_calc_count"]))
    record.time.append(float(counters["elapsed"]))
    record.cost.append(cost)
    record.gnorm.append(gnorm)
    record.reg.append(reg)
    record.optgap.append(math.inf if opts.f_opt is None else cost - opts.f_opt)
    if opts.store_w:
        if record.w_hist is None:
            record.w_hist = []
        record.w_hist.append(np.array(w, dtype=float, copy=True))
    return record


def check_stop(record: RunRecord, opts: SolverOptions) -> tuple[bool, str | None]:
    """Decide whether to stop after the last logged epoch.

    Returns ``(stop, reason)`` with reason one of ``optgap-tol``,
    ``gnorm-tol`` or ``max-epoch``; the max-epoch test comes last.
    """
    if not len(record):
        raise ValueError("empty record")
    if record.optgap[-1] <= opts.tol_optgap:
        return True, "optgap-tol"
    if record.gnorm[-1] <= opts.tol_gnorm:
        return True, "gnorm-tol"
    if record.epochs >= opts.max_epoch:
        return True, "max-epoch"
    return False, None


@dataclass
class SolverResult:
    w: np.ndarray
    record: RunRecord
    termination_reason: str
    name: str = ""
    options: SolverOptions | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def w_final(self):
        return self.w


def _fmt(x: float) -> str:
    return "Inf" if x == math.inf else f"{x:.16e}"


class SolverRun:
    """Mutable state of one solver run: RNG, counters, clock and record.

    The clock only runs while the solver computes; time spent on the
    per-epoch diagnostics (full cost and gradient) is excluded.
    """

    def __init__(self, name: str, problem, opts: SolverOptions):
        if opts.batch_size > problem.n:
            raise ConfigError("batch_size", f"{opts.batch_size} exceeds sample count n={problem.n}")
        self.name = name
        self.problem = problem
        self.opts = opts
        # PCG64 stream; all sampling in the run draws from it
        self.rng = np.random.Generator(np.random.PCG64(opts.seed))
        # side stream (Hessian sub-batches) so the main index sequence matches
        # the first-order counterpart of a solver under the same seed
        self.aux_rng = np.random.Generator(np.random.PCG64(opts.seed).jumped())
        self.schedule = opts.schedule()
        self.record = RunRecord()
        self.iter = 0
        self.grad_calc_count = 0
        self.diagnostics: dict = {}
        self.termination_reason: str | None = None
        self._elapsed = 0.0
        self._resumed = time.perf_counter()

    def initial_iterate(self) -> np.ndarray:
        d = self.problem.d
        if self.opts.w_init is None:
            return np.zeros(d)
        w = np.array(self.opts.w_init, dtype=float).ravel()
        if w.shape != (d,):
            raise ConfigError("w_init", f"expected {d} entries, got {w.size}")
        return w

    def step(self) -> float:
        eta = eval_stepsize(self.iter, self.schedule, self.opts)
        if not eta > 0:
            raise ConfigError("custom_step", f"step size must be positive, got {eta!r}")
        return eta

    def count(self, evaluations: int):
        self.grad_calc_count += int(evaluations)

    def batches(self, batch_size: int | None = None, wrap: bool = False) -> Iterator[np.ndarray]:
        """Index batches for one epoch: ceil(n/b) of them.

        Permutation sampling partitions a fresh permutation; the last batch
        is short unless ``wrap`` is set, in which case it is topped up from
        the start of the same permutation so every batch has exactly ``b``
        distinct indices.  ``sampling='iid'`` draws with replacement.
        """
        n = self.problem.n
        b = self.opts.batch_size if batch_size is None else batch_size
        m = -(-n // b)
        if self.opts.sampling == "iid":
            for j in range(m):
                size = b if (wrap or j < m - 1) else n - b * (m - 1)
                yield self.rng.integers(0, n, size=size)
            return
        perm = self.rng.permutation(n)
        for j in range(m):
            if wrap:
                yield perm[(j * b + np.arange(b)) % n]
            else:
                yield perm[j * b:(j + 1) * b]

    def inner_length(self, batch_size: int | None = None) -> int:
        b = self.opts.batch_size if batch_size is None else batch_size
        return -(-self.problem.n // b)

    def add_extra(self, key: str, value):
        self.record.extra.setdefault(key, []).append(value)

    def log(self, w) -> bool:
        """Record the epoch that just finished and return True to stop."""
        now = time.perf_counter()
        self._elapsed += now - self._resumed
        counters = {"iter": self.iter, "grad_calc_count": self.grad_calc_count, "elapsed": self._elapsed}
        record_epoch(self.record, self.problem, w, counters, self.opts)
        cost = self.record.cost[-1]
        epoch = self.record.epochs
        if self.opts.verbose:
            logger.info("%s: Epoch = %03d, cost = %s, optgap = %s",
                        self.name, epoch, _fmt(cost), _fmt(self.record.optgap[-1]))
        if not math.isfinite(cost):
            raise DivergedError(f"{self.name}: non-finite cost at epoch {epoch}", self.record, w)
        stop, reason = check_stop(self.record, self.opts)
        if stop:
            self.termination_reason = reason
            if self.opts.verbose:
                if reason == "max-epoch":
                    logger.info("Max epoch reached: max_epoch = %d", self.opts.max_epoch)
                else:
                    logger.info("%s: stopped on %s", self.name, reason)
        self._resumed = time.perf_counter()
        return stop

    def result(self, w) -> SolverResult:
        return SolverResult(np.asarray(w, dtype=float), self.record, self.termination_reason,
                            self.name, self.opts, self.diagnostics)
