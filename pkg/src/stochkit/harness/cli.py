"""Command line entry point: ``stochkit run | demo | gradcheck | solve``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from ..problems import PROBLEMS, build_problem, calc_solution, generate_for, gradcheck
from .experiment import CALC_SOLUTION_MAX_ITER, DEFAULT_LAMBDA, UsageError, run_experiment
from .io import DatasetParseError, load_dataset

GRAD_TOL = 1e-5
HESS_VEC_TOL = 1e-10


def demo_config(seed=0, out_dir="stochkit_demo", verbose=True):
    """L2-regularized logistic regression on generated data (n=300, d=3), SGD vs SVRG."""
    return {
        "name": "demo",
        "problem": {"kind": "logistic_regression", "lambda": DEFAULT_LAMBDA,
                    "data": {"generate": {"n": 300, "d": 3, "seed": seed}}},
        "solvers": [{"name": "SGD", "options": {"step_alg": "fix", "step_init": 0.1}},
                    {"name": "SVRG", "options": {"step_alg": "fix", "step_init": 0.1}}],
        # tolerance stops off: SVRG would otherwise stop on gnorm long before epoch 100
        "options": {"max_epoch": 100, "batch_size": 1, "tol_gnorm": 0.0, "tol_optgap": 0.0, "verbose": verbose},
        "plots": {"cost": True, "optgap": True, "classification": True},
        "output_dir": out_dir,
        "seed": seed,
    }


def _report(result):
    for o in result.outcomes:
        if o.ok:
            rec = o.record
            print(f"{o.label}: {o.result.termination_reason} after {rec.epochs} epochs, "
                  f"cost {rec.cost[-1]:.6e}, optgap {rec.optgap[-1]:.3e}, grad evals {rec.grad_calc_count[-1]}")
        else:
            print(f"{o.label}: FAILED ({o.error})")
    print(f"outputs in {result.out_dir}")
    return result.exit_code


def cmd_run(args):
    return _report(run_experiment(args.config, out_dir=args.out, seed=args.seed, jobs=args.jobs))


def cmd_demo(args):
    seed = 0 if args.seed is None else args.seed
    cfg = demo_config(seed, args.out, verbose=not args.quiet)
    return _report(run_experiment(cfg, seed=seed))


def gradcheck_problem(kind, seed=0, n_pairs=20):
    ds = generate_for(kind, n=60, d=3, seed=seed)
    problem = build_problem(kind, ds.X_train, ds.y_train, DEFAULT_LAMBDA, ds.n_classes)
    return gradcheck(problem, n_pairs=n_pairs, seed=seed)


def cmd_gradcheck(args):
    kinds = [args.problem] if args.problem else list(PROBLEMS)
    failed = False
    for kind in kinds:
        err = gradcheck_problem(kind, args.seed or 0)
        ok = err["grad"] <= GRAD_TOL and err["hess_vec"] <= HESS_VEC_TOL
        failed |= not ok
        print(f"{kind:24s} grad {err['grad']:.2e}  hess_vec {err['hess_vec']:.2e}  {'ok' if ok else 'FAIL'}")
    return 1 if failed else 0


def cmd_solve(args):
    family = PROBLEMS[args.problem][1]
    try:
        ds = load_dataset(args.data, args.format, family=family, n_features=args.n_features)
    except DatasetParseError as exc:
        raise UsageError(str(exc)) from None
    problem = build_problem(args.problem, ds.X_train, ds.y_train, args.lam, args.n_classes or ds.n_classes)
    w_opt, f_opt = calc_solution(problem, max_iter=CALC_SOLUTION_MAX_ITER)
    grad_norm = float(np.linalg.norm(problem.full_grad(w_opt)))
    print(json.dumps({"problem": args.problem, "lambda": args.lam, "n": problem.n, "d": problem.d,
                      "f_opt": f_opt, "gnorm": grad_norm, "w_opt": w_opt.tolist()}, indent=2))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="stochkit", description="Stochastic optimization benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="base seed (overrides config and STOCHKIT_SEED)")
    p.add_argument("--jobs", type=int, default=1, help="solvers to run concurrently")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("demo", help="logistic regression, SGD vs SVRG, n=300, d=3")
    p.add_argument("--out", default="stochkit_demo")
    p.add_argument("--seed", type=int)
    p.add_argument("--quiet", action="store_true", help="no per-epoch output")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("gradcheck", help="finite-difference check of every built-in problem")
    p.add_argument("--problem", choices=list(PROBLEMS))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("solve", help="reference optimum of a problem on a data file")
    p.add_argument("--problem", required=True, choices=list(PROBLEMS))
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "libsvm"])
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--n-classes", type=int)
    p.add_argument("--n-features", type=int)
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stdout)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stochkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
