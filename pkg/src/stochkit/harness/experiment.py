"""Run solver comparisons from a JSON-style config and write CSV/JSON/SVG outputs.

Config layout (all keys but ``problem`` and ``solvers`` optional)::

    {
      "name": "demo",
      "problem": {"kind": "logistic_regression", "lambda": 0.01,
                  "data": {"generate": {"n": 300, "d": 3, "seed": 0}}},
      "solvers": [{"name": "SGD", "options": {"step_alg": "fix"}},
                  {"name": "svrg", "label": "SVRG"}],
      "options": {"max_epoch": 100, "batch_size": 1},
      "output_dir": "out",
      "plots": {"cost": true, "optgap": true, "classification": true, "trajectory": false},
      "calc_solution": true,
      "optgap_stop": false,
      "seed": 0
    }

``data`` may instead be ``{"file": {"path": ..., "format": "csv" | "libsvm"}}``.
A config with an ``experiments`` list runs each entry into its own
subdirectory named after the entry.

Solver ``i`` gets seed ``base + i`` unless its options set one.  The base
seed comes from the caller (CLI flag), then the config, then the
``STOCHKIT_SEED`` environment variable, then 0.  The reference optimum is
attached to the records after the runs, so solvers do not stop early on the
optimality gap unless ``optgap_stop`` is set.
"""

from __future__ import annotations

import copy
import json
import logging
import math
import os
import re
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import ConfigError, SolverError, merge_options
from ..problems import PROBLEMS, build_problem, calc_solution, generate_for, predict_and_score
from ..problems.solution import CALC_SOLUTION_TOL
from ..solvers import ALGORITHMS, SOLVERS, resolve
from . import plots
from .io import CSV_COLUMNS, CSV_SCHEMA_VERSION, DatasetParseError, load_dataset, write_record_csv

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.01
CALC_SOLUTION_MAX_ITER = 1000
PLOT_KINDS = ("cost", "optgap", "classification", "trajectory")
DEFAULT_PLOTS = {"cost": True, "optgap": True, "classification": False, "trajectory": False}
CONFIG_KEYS = {"name", "problem", "solvers", "options", "output_dir", "plots", "calc_solution", "optgap_stop",
               "seed", "experiments", "description"}


class UsageError(ValueError):
    """Invalid experiment config; nothing is written."""


@dataclass
class SolverOutcome:
    label: str
    name: str
    seed: int
    result: object = None
    record: object = None
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class ExperimentResult:
    out_dir: str
    summary: dict
    outcomes: list = field(default_factory=list)
    children: list = field(default_factory=list)

    @property
    def exit_code(self):
        if self.children:
            return max(c.exit_code for c in self.children)
        return 0 if all(o.ok for o in self.outcomes) else 1


def base_seed(flag=None, config=None):
    """Seed precedence: flag > config > STOCHKIT_SEED > 0."""
    if flag is not None:
        return int(flag)
    if config and config.get("seed") is not None:
        return int(config["seed"])
    env = os.environ.get("STOCHKIT_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"STOCHKIT_SEED must be an integer, got {env!r}") from None
    return 0


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc})") from None


def _label_file(label, taken):
    stem = re.sub(r"[^A-Za-z0-9_.+-]+", "_", label).strip("_") or "solver"
    name, k = stem, 2
    while name in taken:
        name = f"{stem}_{k}"
        k += 1
    taken.add(name)
    return name


def _check_keys(mapping, allowed, where):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise UsageError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}; valid: {', '.join(sorted(allowed))}")


def build_data(problem_cfg, seed):
    """Dataset for the problem section of a config."""
    kind = problem_cfg["kind"]
    family = PROBLEMS[kind][1]
    data_cfg = problem_cfg.get("data") or {"generate": {}}
    if len(data_cfg) != 1 or next(iter(data_cfg)) not in ("generate", "file"):
        raise UsageError("problem.data needs exactly one of 'generate' or 'file'")
    if "generate" in data_cfg:
        g = dict(data_cfg["generate"])
        _check_keys(g, {"n", "d", "seed", "sigma", "n_classes"}, "problem.data.generate")
        return generate_for(kind, n=int(g.get("n", 300)), d=int(g.get("d", 3)), seed=int(g.get("seed", seed)),
                            noise_sigma=float(g.get("sigma", 0.1)),
                            n_classes=int(g.get("n_classes", problem_cfg.get("n_classes") or 3)))
    f = dict(data_cfg["file"])
    _check_keys(f, {"path", "format", "n_features"}, "problem.data.file")
    if "path" not in f:
        raise UsageError("problem.data.file.path is required")
    if not os.path.exists(f["path"]):
        raise UsageError(f"data file {f['path']!r} does not exist")
    return load_dataset(f["path"], f.get("format", "csv"), family=family, n_features=f.get("n_features"))


@dataclass
class _Plan:
    config: dict
    seed: int
    kind: str
    lam: float
    lambda_default: bool
    problem: object
    data: object
    solvers: list
    plots: dict
    out_dir: str


def plan_experiment(config, out_dir=None, seed=None):
    """Validate a single-experiment config and build the problem; raises UsageError."""
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    _check_keys(config, CONFIG_KEYS, "config")
    solvers = config.get("solvers") or []
    if not solvers:
        raise UsageError("config lists no solvers; give at least one of: "
                         + ", ".join(list(SOLVERS) + list(ALGORITHMS)))
    pcfg = config.get("problem")
    if not isinstance(pcfg, dict) or "kind" not in pcfg:
        raise UsageError("config.problem.kind is required")
    _check_keys(pcfg, {"kind", "lambda", "data", "n_classes"}, "problem")
    kind = pcfg["kind"]
    if kind not in PROBLEMS:
        raise UsageError(f"unknown problem {kind!r}; valid: {', '.join(PROBLEMS)}")
    s0 = base_seed(seed, config)
    lam_given = pcfg.get("lambda")
    lam = DEFAULT_LAMBDA if lam_given is None else float(lam_given)
    plot_cfg = dict(DEFAULT_PLOTS)
    plot_cfg.update(config.get("plots") or {})
    _check_keys(plot_cfg, PLOT_KINDS, "plots")

    shared = dict(config.get("options") or {})
    tasks = []
    for i, entry in enumerate(solvers):
        if isinstance(entry, str):
            entry = {"name": entry}
        _check_keys(entry, {"name", "sub_mode", "options", "label"}, f"solvers[{i}]")
        try:
            fn, overrides = resolve(entry.get("name"), entry.get("sub_mode"))
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        opts = {**shared, **overrides, **(entry.get("options") or {})}
        opts.setdefault("seed", s0 + i)
        if plot_cfg["trajectory"]:
            opts["store_w"] = True
        try:
            merge_options(None, None, {k: v for k, v in opts.items() if k != "custom_step"})
        except ConfigError as exc:
            raise UsageError(f"solvers[{i}] ({entry['name']}): {exc}") from None
        tasks.append({"label": entry.get("label") or entry["name"], "name": entry["name"], "fn": fn, "options": opts})

    try:
        data = build_data(pcfg, s0)
    except DatasetParseError as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(f"problem data: {exc}") from None
    n_classes = pcfg.get("n_classes") or data.n_classes
    problem = build_problem(kind, data.X_train, data.y_train, lam, n_classes)
    if plot_cfg["trajectory"] and problem.d != 2:
        raise UsageError(f"trajectory plot needs d = 2, problem has d = {problem.d}")
    for task in tasks:
        opts = task["options"]
        if "w_init" not in opts and data.w_init is not None and np.size(data.w_init) == problem.d:
            opts["w_init"] = np.asarray(data.w_init, dtype=float)
        try:
            merge_options(None, None, {k: v for k, v in opts.items() if k != "custom_step"})
            if opts.get("batch_size", 10) > problem.n:
                raise ConfigError("batch_size", f"{opts.get('batch_size', 10)} exceeds sample count n={problem.n}")
        except ConfigError as exc:
            raise UsageError(f"{task['label']}: {exc}") from None
    out = out_dir or config.get("output_dir") or "stochkit_out"
    return _Plan(config, s0, kind, lam, lam_given is None, problem, data, tasks, plot_cfg, out)


def _run_one(problem, task, seed):
    outcome = SolverOutcome(task["label"], task["name"], seed)
    try:
        res = task["fn"](problem, dict(task["options"]))
        outcome.result = res
        outcome.record = res.record
    except SolverError as exc:
        outcome.error = f"{type(exc).__name__}: {exc}"
        outcome.record = exc.record
    except ConfigError as exc:
        outcome.error = f"ConfigError: {exc}"
    return outcome


def _final(record, key):
    if record is None or not len(record):
        return None
    v = getattr(record, key)[-1]
    if key == "grad_calc_count":
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items() if not callable(v)}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def execute(plan: _Plan, jobs=1, want_solution=True):
    """Run a validated plan and write every output file."""
    problem = plan.problem
    f_opt = w_opt = None
    if plan.config.get("calc_solution", True) and want_solution:
        w_opt, f_opt = calc_solution(problem, max_iter=CALC_SOLUTION_MAX_ITER)
        if plan.config.get("optgap_stop", False):
            for task in plan.solvers:
                task["options"].setdefault("f_opt", f_opt)

    seeds = [task["options"]["seed"] for task in plan.solvers]
    if jobs > 1 and len(plan.solvers) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda a: _run_one(problem, *a), zip(plan.solvers, seeds)))
    else:
        outcomes = [_run_one(problem, task, s) for task, s in zip(plan.solvers, seeds)]
    for o in outcomes:
        if o.record is not None and f_opt is not None:
            o.record = o.record.with_f_opt(f_opt)

    # all writes happen here, after the runs
    os.makedirs(plan.out_dir, exist_ok=True)
    taken = set()
    solver_summaries = []
    X_eval, y_eval = plan.data.X_test, plan.data.y_test
    if X_eval is None or len(X_eval) == 0:
        X_eval, y_eval = plan.data.X_train, plan.data.y_train
    for task, o in zip(plan.solvers, outcomes):
        stem = _label_file(o.label, taken)
        entry = {"label": o.label, "name": o.name, "seed": o.seed, "csv": None, "error": o.error,
                 "termination_reason": None if o.result is None else o.result.termination_reason}
        if o.record is not None and len(o.record):
            write_record_csv(o.record, os.path.join(plan.out_dir, stem + ".csv"))
            entry["csv"] = stem + ".csv"
            entry["epochs"] = o.record.epochs
            for key in ("cost", "optgap", "gnorm", "grad_calc_count"):
                entry[f"final_{key}"] = _final(o.record, key)
        if o.result is not None:
            score = predict_and_score(problem, o.result.w, X_eval, y_eval)
            entry["score"] = {"kind": score.kind, "value": float(score.value)}
            entry["w_final"] = o.result.w.tolist()
        solver_summaries.append(entry)

    written = []
    good = {o.label: o.record for o in outcomes if o.record is not None and len(o.record)}
    if good and plan.plots["cost"]:
        written.append(plots.plot_cost(good, os.path.join(plan.out_dir, "cost.svg")))
    if good and plan.plots["optgap"]:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            p = plots.plot_optgap(good, os.path.join(plan.out_dir, "optgap.svg"))
        for w in caught:
            logger.warning("%s", w.message)
        if p:
            written.append(p)
    finished = [o for o in outcomes if o.result is not None]
    if finished and plan.plots["classification"] and problem.task == "classification":
        best = min(finished, key=lambda o: o.record.cost[-1])
        y_pred = problem.prediction(best.result.w, X_eval)
        try:
            written.append(plots.plot_classification(X_eval, y_eval, y_pred,
                                                     os.path.join(plan.out_dir, "classification.svg"),
                                                     title=f"Classification result ({best.label})"))
        except plots.UnsupportedDimensionError as exc:
            logger.warning("classification plot skipped: %s", exc)
    if finished and plan.plots["trajectory"]:
        written.append(plots.plot_trajectory(problem, {o.label: o.record for o in finished},
                                             os.path.join(plan.out_dir, "trajectory.svg")))

    summary = {
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "csv_columns": list(CSV_COLUMNS),
        "config": _jsonable(copy.deepcopy(plan.config)),
        "problem": {"kind": plan.kind, "name": problem.name, "lambda": plan.lam,
                    "lambda_is_default": plan.lambda_default, "n": problem.n, "d": problem.d},
        "base_seed": plan.seed,
        "f_opt": f_opt,
        "calc_solution": {"tol_gnorm": CALC_SOLUTION_TOL, "max_iter": CALC_SOLUTION_MAX_ITER,
                          "w_opt": None if w_opt is None else w_opt.tolist()},
        "solvers": solver_summaries,
        "plots": [os.path.basename(p) for p in written],
        "status": "ok" if all(o.ok for o in outcomes) else "failed",
    }
    with open(os.path.join(plan.out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2)
        fh.write("\n")
    return ExperimentResult(plan.out_dir, summary, outcomes)


def run_experiment(config, out_dir=None, seed=None, jobs=1):
    """Validate and run ``config`` (a dict or a path to a JSON file).

    Raises :class:`UsageError` before writing anything when the config is
    invalid.  ``ExperimentResult.exit_code`` is nonzero iff a solver aborted.
    """
    if isinstance(config, (str, os.PathLike)):
        config = load_config(config)
    if isinstance(config, dict) and "experiments" in config:
        entries = config["experiments"]
        if not entries:
            raise UsageError("config.experiments is empty")
        root = out_dir or config.get("output_dir") or "stochkit_out"
        shared = {k: v for k, v in config.items() if k not in ("experiments", "output_dir", "name", "description")}
        plans = []
        for k, entry in enumerate(entries):
            merged = {**shared, **entry}
            if "options" in shared and "options" in entry:
                merged["options"] = {**shared["options"], **entry["options"]}
            name = entry.get("name") or f"experiment_{k}"
            plans.append(plan_experiment(merged, os.path.join(root, _label_file(name, set())), seed))
        children = [execute(p, jobs) for p in plans]
        summary = {"experiments": [{"name": os.path.basename(c.out_dir), "status": c.summary["status"]}
                                   for c in children]}
        os.makedirs(root, exist_ok=True)
        with open(os.path.join(root, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
        return ExperimentResult(root, summary, [o for c in children for o in c.outcomes], children)
    return execute(plan_experiment(config, out_dir, seed), jobs)
