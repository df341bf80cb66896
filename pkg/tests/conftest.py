import numpy as np
import pytest

from stochkit.problems import (PROBLEMS, LinearRegression, LogisticRegression, build_problem, calc_solution,
                               generate_for, generate_logistic_data)
from stochkit.problems.data import generate_ill_conditioned_data

DEMO_LAMBDA = 0.01


def small_problem(kind, n=40, d=3, seed=0, lam=0.1):
    ds = generate_for(kind, n=n, d=d, seed=seed)
    return build_problem(kind, ds.X_train, ds.y_train, lam, ds.n_classes)


@pytest.fixture(params=list(PROBLEMS))
def any_problem(request):
    return small_problem(request.param)


@pytest.fixture
def ridge2():
    """X = I, y = (1, 2), lambda = 0: optimum (1, 2), f* = 0."""
    return LinearRegression(np.eye(2), np.array([1.0, 2.0]), 0.0)


@pytest.fixture(scope="session")
def demo_data():
    return generate_logistic_data(300, 3, seed=0)


@pytest.fixture(scope="session")
def demo_problem(demo_data):
    return LogisticRegression(demo_data.X_train, demo_data.y_train, DEMO_LAMBDA)


@pytest.fixture(scope="session")
def demo_opt(demo_problem):
    return calc_solution(demo_problem)


@pytest.fixture(scope="session")
def ill_ridge():
    """Noise-free ridge data, Hessian eigenvalues 1e4 and 1 (feature scales 100 and 1)."""
    ds = generate_ill_conditioned_data(n=200, d=2, cond=1e4, lam=1e-6, seed=0)
    problem = LinearRegression(ds.X_train, ds.y_train, 1e-6)
    return problem, calc_solution(problem)[1]


@pytest.fixture
def quadratic_1d():
    """f(w) = w^2 / 2 as a one-sample least-squares problem."""
    return LinearRegression(np.array([[1.0]]), np.array([0.0]), 0.0)


# -- acceptance report -------------------------------------------------------

def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when == "teardown":
        return
    number, title = marker.args
    results = item.config._criteria
    if report.when == "call" or report.failed:
        results[number] = (title, "PASS" if report.passed else "FAIL", report.duration)


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, status, seconds = results[number]
        terminalreporter.write_line(f"{status} criterion {number:2d}: {title} ({seconds:.2f} s)")
