"""The twelve acceptance criteria, one test each.

A PASS/FAIL line per criterion is printed in the terminal summary (see
``conftest.py``).  Criterion 10 checks every cost recorded by the other
criteria, so this module is meant to run in file order.
"""

import csv
import json
import math
import os
import time
import xml.etree.ElementTree as ET
from importlib import resources

import numpy as np
import pytest

from stochkit.core import DivergedError, StepSchedule, eval_stepsize
from stochkit.harness import read_record_csv, run_experiment
from stochkit.harness.cli import demo_config, gradcheck_problem, main
from stochkit.harness.io import CSV_COLUMNS
from stochkit.problems import (PROBLEMS, LinearRegression, LogisticRegression, attach_l1, build_problem,
                               calc_solution, generate_for, generate_linear_data, generate_logistic_data,
                               soft_threshold)
from stochkit.problems.data import generate_ill_conditioned_data
from stochkit.solvers import SOLVERS, obfgs, sag, sarah, sgd, sgd_cm, svrg
from stochkit.solvers.curvature import DenseInverseHessian, powell_damping, two_loop
from stochkit.solvers.vr import GradientTable, saga_estimator, svrg_estimator

from oracles import curvature_history, dense_oracle, grid_prox, random_spd, ridge_closed_form

# (problem, label, costs) from every solver run in this module; read by criterion 10
RECORDED = []


def remember(problem, label, costs):
    RECORDED.append((problem, label, list(costs)))


def demo_problem():
    ds = generate_for("logistic_regression", n=300, d=3, seed=0)
    return LogisticRegression(ds.X_train, ds.y_train, 0.01)


def csv_without_time(path):
    col = CSV_COLUMNS.index("time_s")
    with open(path, newline="") as fh:
        return [r[:col] + r[col + 1:] if len(r) == len(CSV_COLUMNS) else r for r in csv.reader(fh)]


@pytest.mark.criterion(1, "gradient check over all built-in problems")
def test_criterion_01_gradient_check():
    start = time.perf_counter()
    assert len(PROBLEMS) == 6
    for kind in PROBLEMS:
        err = gradcheck_problem(kind, seed=0, n_pairs=20)
        assert err["grad"] <= 1e-5, kind
        assert err["hess_vec"] <= 1e-10, kind
    assert main(["gradcheck"]) == 0
    assert time.perf_counter() - start < 10.0


@pytest.mark.criterion(2, "mean of per-sample gradients equals the full gradient")
def test_criterion_02_unbiasedness():
    rng = np.random.default_rng(0)
    for kind in PROBLEMS:
        ds = generate_for(kind, n=375, d=3, seed=1)  # 300 training samples
        p = build_problem(kind, ds.X_train, ds.y_train, 0.01, ds.n_classes)
        assert p.n == 300
        for _ in range(3):
            w = rng.standard_normal(p.d)
            per_sample = np.array([p.grad(w, [i]) for i in range(p.n)])
            np.testing.assert_allclose(per_sample.mean(axis=0), p.full_grad(w), rtol=0, atol=1e-12)


@pytest.mark.criterion(3, "step-size schedule closed forms")
def test_criterion_03_schedules():
    eta0, lam = 0.5, 0.1
    expected = {
        "fix": {0: 0.5, 1: 0.5, 10: 0.5, 1000: 0.5},
        "decay": {0: 0.5, 1: 0.5 / 1.05, 10: 0.5 / 1.5, 1000: 0.5 / 51.0},
        "decay-2": {0: 0.5, 1: 0.25, 10: 0.5 / 11, 1000: 0.5 / 1001},
        "decay-3": {0: 5.0, 1: 0.5 / 1.1, 10: 0.5 / 10.1, 1000: 0.5 / 1000.1},
    }
    for kind, table in expected.items():
        sched = StepSchedule(kind, eta0, lam)
        for k, value in table.items():
            assert eval_stepsize(k, sched) == value, (kind, k)
    with pytest.raises(ZeroDivisionError):
        eval_stepsize(0, StepSchedule("decay-3", eta0, 0.0))


@pytest.mark.criterion(4, "demo: SGD and SVRG, 100 epochs, cost down 100x")
def test_criterion_04_demo(tmp_path):
    start = time.perf_counter()
    assert main(["demo", "--quiet", "--out", str(tmp_path)]) == 0
    assert time.perf_counter() - start < 30.0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["problem"]["n"] + 60 == 300 and summary["problem"]["d"] == 3
    assert {"cost.svg", "optgap.svg", "classification.svg"} <= set(os.listdir(tmp_path))
    problem = demo_problem()
    for entry in summary["solvers"]:
        rec = read_record_csv(tmp_path / entry["csv"])
        assert len(rec) == 101
        assert rec.cost[-1] <= rec.cost[0] / 100
        assert entry["termination_reason"] == "max-epoch"
        remember(problem, f"demo {entry['label']}", rec.cost)


@pytest.mark.criterion(5, "SVRG optgap <= 1e-6 and at least 10x below SGD (decay-2)")
def test_criterion_05_vr_superiority(tmp_path):
    cfg = demo_config(seed=0, out_dir=str(tmp_path), verbose=False)
    cfg["solvers"] = [{"name": "SGD", "options": {"step_alg": "decay-2", "step_init": 0.1}},
                      {"name": "SVRG", "options": {"step_alg": "fix", "step_init": 0.1}}]
    res = run_experiment(cfg)
    assert res.exit_code == 0
    rec = {o.label: o.record for o in res.outcomes}
    assert rec["SVRG"].epochs == rec["SGD"].epochs == 100
    gap_svrg, gap_sgd = rec["SVRG"].optgap[-1], rec["SGD"].optgap[-1]
    assert gap_svrg <= 1e-6
    assert gap_sgd >= 10 * gap_svrg
    for label, r in rec.items():
        remember(demo_problem(), f"criterion 5 {label}", r.cost)


@pytest.mark.criterion(6, "algebraic solver identities")
def test_criterion_06_identities():
    ds = generate_logistic_data(100, 3, seed=2)
    p = LogisticRegression(ds.X_train, ds.y_train, 0.01)
    rng = np.random.default_rng(6)
    w = rng.standard_normal(p.d)
    mu = p.full_grad(w)
    # SVRG estimator at the snapshot
    for _ in range(10):
        idx = rng.choice(p.n, size=8, replace=False)
        np.testing.assert_allclose(svrg_estimator(p, w, w, mu, idx), mu, rtol=0, atol=1e-12)
    # SARAH v0: with b = n the outer step is w0 - eta full_grad(w0)
    res = sarah(p, batch_size=p.n, step_init=0.2, w_init=w, max_epoch=1)
    np.testing.assert_array_equal(res.w, w - 0.2 * mu)
    # SAGA enumeration mean and SAG table average after a frozen sweep
    stale = GradientTable(p.n, p.d)
    stale.replace(np.arange(p.n), rng.standard_normal((p.n, p.d)))
    v = [saga_estimator(stale, [i], p.grad_samples(w, [i])) for i in range(p.n)]
    np.testing.assert_allclose(np.mean(v, axis=0), mu, rtol=0, atol=1e-12)
    table = GradientTable(p.n, p.d)
    for i in range(p.n):
        table.replace([i], p.grad_samples(w, [i]))
    np.testing.assert_allclose(table.average(), mu, rtol=0, atol=1e-12)
    # zero momentum reproduces the SGD trajectory
    a = sgd(p, max_epoch=5, seed=3, store_w=True)
    b = sgd_cm(p, momentum=0.0, max_epoch=5, seed=3, store_w=True)
    for u, x in zip(a.record.w_hist, b.record.w_hist):
        np.testing.assert_allclose(u, x, rtol=0, atol=1e-12)
    remember(p, "criterion 6 SGD", a.record.cost)
    remember(p, "criterion 6 SGD-CM", b.record.cost)


@pytest.mark.criterion(7, "quasi-Newton invariants")
def test_criterion_07_quasi_newton():
    rng = np.random.default_rng(7)
    mem = DenseInverseHessian(6)
    accepted = 0
    for s, y in curvature_history(rng, 6, 220)[:200]:
        assert mem.update(s, y)
        accepted += 1
        assert np.linalg.norm(mem.H @ y - s) <= 1e-8 * np.linalg.norm(s)
    assert accepted == 200
    for count in (2, 5, 10):
        pairs = curvature_history(rng, 6, count)
        g = rng.standard_normal(6)
        s, y = pairs[-1]
        dense = dense_oracle(pairs, (s @ y) / (y @ y)) @ g
        assert np.linalg.norm(two_loop(g, pairs) - dense) <= 1e-8 * np.linalg.norm(dense)
    for _ in range(200):
        B = random_spd(rng, 4)
        s, y = rng.standard_normal(4), rng.standard_normal(4)
        y_d, _ = powell_damping(s, y, B @ s)
        assert s @ y_d >= 0.2 * (s @ B @ s) - 1e-12 * abs(s @ B @ s)


@pytest.mark.criterion(8, "Reg-oBFGS vs SGD on the condition-1e4 ridge problem")
def test_criterion_08_ill_conditioning():
    ds = generate_ill_conditioned_data(n=200, d=2, cond=1e4, lam=1e-6, seed=0)
    p = LinearRegression(ds.X_train, ds.y_train, 1e-6)
    eig = np.linalg.eigvalsh(p.full_hess(np.zeros(2)))
    assert eig.max() / eig.min() == pytest.approx(1e4, rel=1e-6)
    f_opt = calc_solution(p)[1]
    common = dict(max_epoch=50, f_opt=f_opt, tol_optgap=0.0, tol_gnorm=0.0, seed=0)
    reg = obfgs(p, delta=0.1, batch_size=20, step_init=0.5, **common)
    assert reg.record.epochs <= 50
    assert min(reg.record.optgap) <= 1e-8
    remember(p, "criterion 8 Reg-oBFGS-Inf", reg.record.cost)
    # fixed-step SGD over a step grid reaching past the stability limit ~2/L:
    # every step either diverges or stays above 1e-4
    stable = []
    for eta in np.geomspace(1e-6, 1e-3, 13):
        try:
            plain = sgd(p, step_init=eta, **common)
        except DivergedError:
            continue
        stable.append(eta)
        assert min(plain.record.optgap) > 1e-4, eta
        remember(p, f"criterion 8 SGD eta={eta:.2e}", plain.record.cost)
    assert stable and max(stable) >= 1.0 / p.lipschitz()


@pytest.mark.criterion(9, "soft-threshold prox and L1 sparsity")
def test_criterion_09_proximal():
    rng = np.random.default_rng(9)
    for _ in range(100):
        w, thr = rng.uniform(-5, 5), rng.uniform(0, 3)
        assert abs(soft_threshold(np.array([w]), thr)[0] - grid_prox(w, thr)) <= 1e-10
    ds = generate_logistic_data(200, 10, seed=3, w_scale=1.0)
    p = attach_l1(LogisticRegression(ds.X_train, ds.y_train, 0.0), 0.5)
    res = sgd(p, max_epoch=100, step_init=0.05, step_alg="fix")
    assert res.record.epochs == 100
    assert np.sum(res.w == 0.0) >= 0.5 * p.d
    remember(p, "criterion 9 SGD", res.record.cost)


@pytest.mark.criterion(11, "determinism and gradient accounting")
def test_criterion_11_determinism_and_accounting(tmp_path):
    cfg = {"problem": {"kind": "logistic_regression", "lambda": 0.01,
                       "data": {"generate": {"n": 300, "d": 3, "seed": 0}}},
           "solvers": ["SGD", "SVRG", "SAGA", "SQN"], "options": {"max_epoch": 10, "step_init": 0.05}}
    run_experiment(cfg, out_dir=str(tmp_path / "a"), seed=4)
    res = run_experiment(cfg, out_dir=str(tmp_path / "b"), seed=4)
    for name in ("SGD.csv", "SVRG.csv", "SAGA.csv", "SQN.csv"):
        assert csv_without_time(tmp_path / "a" / name) == csv_without_time(tmp_path / "b" / name)
    p = demo_problem()
    for o in res.outcomes:
        remember(p, f"criterion 11 {o.label}", o.record.cost)
    for b in (1, 7, 10):
        a = sgd(p, batch_size=b, max_epoch=6)
        v = svrg(p, batch_size=b, max_epoch=6, tol_gnorm=0.0)
        np.testing.assert_array_equal(np.diff(a.record.grad_calc_count), p.n)
        np.testing.assert_array_equal(np.diff(v.record.grad_calc_count), p.n + 2 * b * math.ceil(p.n / b))
        remember(p, f"criterion 11 SGD b={b}", a.record.cost)
        remember(p, f"criterion 11 SVRG b={b}", v.record.cost)


@pytest.mark.criterion(12, "four-problem sweep through the CLI")
def test_criterion_12_sweep(tmp_path):
    config = resources.files("stochkit").joinpath("configs/sweep.json")
    start = time.perf_counter()
    with resources.as_file(config) as path:
        assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == 0
    assert time.perf_counter() - start < 300.0
    root = json.loads((tmp_path / "summary.json").read_text())
    kinds = set()
    for exp in root["experiments"]:
        assert exp["status"] == "ok"
        out = tmp_path / exp["name"]
        summary = json.loads((out / "summary.json").read_text())
        kinds.add(summary["problem"]["kind"])
        for entry in summary["solvers"]:
            lines = (out / entry["csv"]).read_text().splitlines()
            assert lines[0] == "# stochkit-record v1"
            assert tuple(lines[1].split(",")) == CSV_COLUMNS
            rec = read_record_csv(out / entry["csv"])
            assert len(rec) == entry["epochs"] + 1
            assert all(g >= -1e-10 for g in rec.optgap)
        svgs = [f for f in os.listdir(out) if f.endswith(".svg")]
        assert "cost.svg" in svgs
        for f in svgs:
            assert ET.parse(out / f).getroot().tag.endswith("svg")
    assert kinds == {"linear_regression", "logistic_regression", "softmax_regression", "linear_svm"}


@pytest.mark.criterion(10, "calc_solution: closed form and lower bound on every recorded cost")
def test_criterion_10_calc_solution():
    ds = generate_linear_data(120, 4, seed=10)
    X, y, lam = ds.X_train, ds.y_train, 0.1
    p = LinearRegression(X, y, lam)
    w_star, f_star = ridge_closed_form(X, y, lam)
    w_opt, f_opt = calc_solution(p)
    np.testing.assert_allclose(w_opt, w_star, rtol=0, atol=1e-8)
    assert abs(f_opt - f_star) <= 1e-12
    # every first-order and quasi-Newton solver on the same instance
    for name, fn in SOLVERS.items():
        res = fn(p, max_epoch=20, step_init=0.02, batch_size=5)
        remember(p, f"criterion 10 {name}", res.record.cost)
    assert len(RECORDED) >= len(SOLVERS)
    optima = {}
    for problem, label, costs in RECORDED:
        if id(problem) not in optima:
            optima[id(problem)] = calc_solution(problem)[1]
        bound = optima[id(problem)]
        assert min(costs) >= bound - 1e-10, label
