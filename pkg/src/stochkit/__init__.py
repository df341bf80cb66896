"""stochkit: stochastic optimization solvers for regularized finite-sum problems."""

from .core import (ConditioningError, ConfigError, DivergedError, OptimizationError, RunRecord, SolverError,
                   SolverOptions, SolverResult, StagnationError, StepSchedule, eval_stepsize, merge_options)
from .problems import build_problem, calc_solution, gradcheck, predict_and_score
from .solvers import ALGORITHMS, SOLVERS, resolve

__version__ = "0.1.0"

__all__ = [
    "ConditioningError", "ConfigError", "DivergedError", "OptimizationError", "RunRecord", "SolverError",
    "SolverOptions", "SolverResult", "StagnationError", "StepSchedule", "eval_stepsize", "merge_options",
    "build_problem", "calc_solution", "gradcheck", "predict_and_score", "ALGORITHMS", "SOLVERS", "resolve",
]
