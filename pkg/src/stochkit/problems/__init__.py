"""Built-in problem descriptors, data generators and scoring."""

import numpy as np

from .base import Problem, ScoreReport, power_iteration
from .data import Dataset, generate_linear_data, generate_logistic_data, generate_softmax_data
from .l1 import L1Regularized, attach_l1, soft_threshold
from .linear import LinearRegression, mse
from .logistic import LogisticRegression, accuracy
from .softmax import SoftmaxRegression
from .solution import CALC_SOLUTION_TOL, calc_solution, central_difference, gradcheck, relative_error
from .svm import LinearSVM


def make_linear_regression(X, y, lam=0.0):
    return LinearRegression(X, y, lam)


def make_logistic_regression(X, y, lam=0.0):
    return LogisticRegression(X, y, lam)


def make_softmax_regression(X, y, n_classes=None, lam=0.0):
    return SoftmaxRegression(X, y, n_classes, lam)


def make_linear_svm(X, y, lam=0.0):
    return LinearSVM(X, y, lam)


def predict_and_score(problem, w, X_test, y_test) -> ScoreReport:
    """MSE for regression problems, accuracy for classifiers."""
    X_test = np.asarray(X_test, dtype=float)
    y_test = np.asarray(y_test)
    if X_test.ndim != 2 or X_test.shape[0] != y_test.shape[0]:
        raise ValueError(f"X_test {X_test.shape} and y_test {y_test.shape} do not match")
    features = getattr(problem, "n_features", None)
    if features is not None and X_test.shape[1] != features:
        raise ValueError(f"X_test has {X_test.shape[1]} features, problem expects {features}")
    return problem.score(w, X_test, y_test)


# kind -> (builder(X, y, lam, n_classes), data family)
PROBLEMS = {
    "linear_regression": (lambda X, y, lam, C=None: LinearRegression(X, y, lam), "linear"),
    "logistic_regression": (lambda X, y, lam, C=None: LogisticRegression(X, y, lam), "binary"),
    "softmax_regression": (lambda X, y, lam, C=None: SoftmaxRegression(X, y, C, lam), "multiclass"),
    "linear_svm": (lambda X, y, lam, C=None: LinearSVM(X, y, lam), "binary"),
    "l1_linear_regression": (lambda X, y, lam, C=None: attach_l1(LinearRegression(X, y, 0.0), lam), "linear"),
    "l1_logistic_regression": (lambda X, y, lam, C=None: attach_l1(LogisticRegression(X, y, 0.0), lam), "binary"),
}


def build_problem(kind, X, y, lam, n_classes=None):
    """Construct a built-in problem by name (see ``PROBLEMS``)."""
    try:
        builder, _ = PROBLEMS[kind]
    except KeyError:
        raise ValueError(f"unknown problem {kind!r}; valid: {', '.join(PROBLEMS)}") from None
    return builder(X, y, lam, n_classes)


def generate_for(kind, n=300, d=3, seed=0, noise_sigma=0.1, n_classes=3):
    """Synthetic dataset suited to problem ``kind``."""
    family = PROBLEMS[kind][1]
    if family == "linear":
        return generate_linear_data(n, d, noise_sigma, seed)
    if family == "binary":
        return generate_logistic_data(n, d, seed)
    return generate_softmax_data(n, d, n_classes, seed)


__all__ = [
    "Problem", "ScoreReport", "Dataset", "LinearRegression", "LogisticRegression", "SoftmaxRegression",
    "LinearSVM", "L1Regularized", "attach_l1", "soft_threshold", "make_linear_regression",
    "make_logistic_regression", "make_softmax_regression", "make_linear_svm", "predict_and_score",
    "generate_linear_data", "generate_logistic_data", "generate_softmax_data", "generate_for",
    "calc_solution", "gradcheck", "central_difference", "relative_error", "mse", "accuracy",
    "PROBLEMS", "build_problem", "power_iteration", "CALC_SOLUTION_TOL",
]
