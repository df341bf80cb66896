import inspect

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochkit.core import StagnationError
from stochkit.problems import LinearRegression, attach_l1, calc_solution
from stochkit.refopt import LineSearchConfig, armijo_backtracking, gradient_descent, lbfgs

from conftest import small_problem


def quadratic5(seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 5)) * np.array([1.0, 2.0, 0.5, 3.0, 1.5])
    return LinearRegression(X, rng.standard_normal(30), 0.05)


def test_fixed_step_gd_on_ridge(ridge2):
    res = gradient_descent(ridge2, LineSearchConfig(kind="fixed", step=0.5), max_iter=100)
    np.testing.assert_allclose(res.w, [1.0, 2.0], rtol=0, atol=1e-8)
    assert res.record.iter[-1] <= 100
    assert res.termination_reason == "gnorm-tol"


def test_float_step_is_fixed(ridge2):
    a = gradient_descent(ridge2, 0.5, max_iter=5, tol_gnorm=0.0)
    b = gradient_descent(ridge2, LineSearchConfig(kind="fixed", step=0.5), max_iter=5, tol_gnorm=0.0)
    np.testing.assert_array_equal(a.w, b.w)


def test_start_at_optimum(ridge2):
    res = gradient_descent(ridge2, w0=[1.0, 2.0])
    assert res.record.iter == [0]
    np.testing.assert_array_equal(res.w, [1.0, 2.0])
    assert res.record.gnorm[0] <= 1e-10


@pytest.mark.parametrize("kind", ["linear_regression", "logistic_regression", "softmax_regression", "linear_svm"])
def test_backtracking_gd_is_monotone(kind):
    p = small_problem(kind)
    res = gradient_descent(p, LineSearchConfig(step=10.0), max_iter=60, tol_gnorm=1e-12)
    cost = res.record.cost
    assert all(b <= a for a, b in zip(cost, cost[1:]))


def test_proximal_gd_matches_calc_solution():
    p = attach_l1(small_problem("linear_regression", lam=0.0), 0.2)
    w_opt, f_opt = calc_solution(p)
    res = gradient_descent(p, LineSearchConfig(step=1.0), max_iter=5000, tol_gnorm=1e-10)
    assert abs(p.cost(res.w) - f_opt) <= 1e-10


def test_lbfgs_quadratic_iterations():
    p = quadratic5()
    res = lbfgs(p)
    assert res.record.gnorm[-1] <= 1e-10
    assert res.record.iter[-1] <= 30
    H = p.full_hess(np.zeros(5))
    np.testing.assert_allclose(res.w, np.linalg.solve(H, -p.full_grad(np.zeros(5))), rtol=0, atol=1e-9)


def test_lbfgs_rejects_prox():
    with pytest.raises(ValueError):
        lbfgs(attach_l1(quadratic5(), 0.1))


def test_default_iteration_caps():
    assert inspect.signature(lbfgs).parameters["max_iter"].default == 1000
    assert inspect.signature(gradient_descent).parameters["max_iter"].default == 1000
    assert inspect.signature(calc_solution).parameters["max_iter"].default == 1000


def test_lbfgs_max_iter_respected():
    p = small_problem("logistic_regression", lam=0.0)
    res = lbfgs(p, max_iter=3, tol_gnorm=0.0)
    assert res.record.iter[-1] == 3
    assert res.termination_reason == "max-epoch"


def test_line_search_config_validation():
    for bad in (dict(kind="wolfe"), dict(c1=1.0), dict(shrink=0.0), dict(max_trials=0), dict(step=-1.0)):
        with pytest.raises(ValueError):
            LineSearchConfig(**bad)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3), st.floats(1e-4, 0.5))
def test_armijo_inequality(seed, step, c1):
    p = small_problem("logistic_regression", seed=seed % 7)
    rng = np.random.default_rng(seed)
    w = 3 * rng.standard_normal(p.d)
    f0, g0 = p.cost(w), p.full_grad(w)
    config = LineSearchConfig(step=step, c1=c1, rounding_tol=0.0)
    t, w_new, f_new, _ = armijo_backtracking(p.cost, p.full_grad, w, f0, g0, -g0, config)
    if t > 0:
        assert f_new <= f0 + c1 * t * float(g0 @ -g0)
        np.testing.assert_array_equal(w_new, w - t * g0)


def test_exhausted_line_search_raises():
    # an ascent direction never satisfies Armijo
    p = quadratic5()
    w = np.ones(5)
    g = p.full_grad(w)
    config = LineSearchConfig(max_trials=5, rounding_tol=0.0)
    t, *_ = armijo_backtracking(p.cost, p.full_grad, w, p.cost(w), g, g, config)
    assert t == 0.0
    with pytest.raises(StagnationError):
        gradient_descent(p, LineSearchConfig(step=1.0, max_trials=1, shrink=0.5), w0=1e8 * np.ones(5))
