import csv
import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from stochkit.core import RunRecord
from stochkit.harness import (DatasetParseError, UnsupportedDimensionError, UsageError, load_dataset, plot_cost,
                              plot_optgap, plot_trajectory, read_record_csv, run_experiment, write_record_csv)
from stochkit.harness.cli import demo_config, main
from stochkit.harness.experiment import base_seed
from stochkit.harness.io import CSV_COLUMNS, labels_for
from stochkit.harness.plots import plot_classification
from stochkit.problems import LinearRegression
from stochkit.solvers import sgd, svrg

from conftest import small_problem

SVG = "{http://www.w3.org/2000/svg}"


def small_config(out_dir, **extra):
    cfg = {
        "problem": {"kind": "logistic_regression", "lambda": 0.01,
                    "data": {"generate": {"n": 60, "d": 3, "seed": 1}}},
        "solvers": [{"name": "SGD"}, {"name": "SVRG"}],
        "options": {"max_epoch": 5, "step_init": 0.1},
        "output_dir": str(out_dir),
    }
    cfg.update(extra)
    return cfg


def csv_without_time(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    col = list(CSV_COLUMNS).index("time_s")
    return [r[:col] + r[col + 1:] if len(r) == len(CSV_COLUMNS) else r for r in rows]


def assert_clean_svg(path):
    tree = ET.parse(path)  # raises on malformed XML
    root = tree.getroot()
    assert root.tag == SVG + "svg"
    for el in root.iter():
        for key, value in el.attrib.items():
            assert "href" not in key, f"external reference in {path}"
            assert "url(" not in value or "url(#" in value
    text = open(path, encoding="utf-8").read()
    assert "http://" not in text.replace("http://www.w3.org/2000/svg", "")
    return root


def series(root):
    return [el for el in root.iter(SVG + "polyline") if el.get("class") == "series"]


def legend_entries(root):
    legend = next(el for el in root.iter(SVG + "g") if el.get("class") == "legend")
    return [t.text for t in legend.iter(SVG + "text")]


# -- datasets -------------------------------------------------------------

def test_csv_example(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("1,0,1\n0,1,2\n1,1,3\n")
    ds = load_dataset(f)
    np.testing.assert_array_equal(ds.X_train, [[1, 0], [0, 1], [1, 1]])
    np.testing.assert_array_equal(ds.y_train, [1, 2, 3])


def test_csv_comments_and_blank_lines(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("# header\n1,0,1\n\n0,1,2  # trailing\n")
    assert load_dataset(f).X_train.shape == (2, 2)


def test_csv_ragged_row_reports_line(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("1,0,1\n0,1,2\n1,1\n")
    with pytest.raises(DatasetParseError) as info:
        load_dataset(f)
    assert info.value.line == 3
    assert ":3:" in str(info.value)


def test_csv_malformed_entry(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("1,0,1\n0,abc,2\n")
    with pytest.raises(DatasetParseError) as info:
        load_dataset(f)
    assert info.value.line == 2


def test_libsvm_example(tmp_path):
    f = tmp_path / "d.svm"
    f.write_text("+1 1:0.5 3:2\n")
    ds = load_dataset(f, "libsvm", n_features=3)
    np.testing.assert_array_equal(ds.X_train, [[0.5, 0.0, 2.0]])
    np.testing.assert_array_equal(ds.y_train, [1.0])


@pytest.mark.parametrize("line", ["+1 0:1", "+1 2:1 2:3", "+1 4:1", "x 1:1", "+1 1=2"])
def test_libsvm_errors(tmp_path, line):
    f = tmp_path / "d.svm"
    f.write_text("-1 1:1\n" + line + "\n")
    with pytest.raises(DatasetParseError) as info:
        load_dataset(f, "libsvm", n_features=3)
    assert info.value.line == 2


def test_label_families():
    np.testing.assert_array_equal(labels_for("binary", [0, 1, 1, 0]), [-1, 1, 1, -1])
    np.testing.assert_array_equal(labels_for("binary", [-1, 1]), [-1, 1])
    np.testing.assert_array_equal(labels_for("multiclass", [3, 1, 2, 3]), [2, 0, 1, 2])
    np.testing.assert_array_equal(labels_for("linear", [0.5, 2.0]), [0.5, 2.0])
    with pytest.raises(ValueError):
        labels_for("binary", [0, 1, 2])


# -- records --------------------------------------------------------------

def test_record_round_trip(tmp_path):
    p = small_problem("logistic_regression", n=50)
    rec = svrg(p, max_epoch=4).record
    path = tmp_path / "r.csv"
    write_record_csv(rec, path)
    back = read_record_csv(path)
    for name in ("iter", "grad_calc_count", "cost", "optgap", "gnorm", "reg"):
        assert getattr(back, name) == getattr(rec, name)
    np.testing.assert_allclose(back.time, rec.time, rtol=0, atol=1e-9)
    assert all(np.isinf(back.optgap))


def test_record_csv_header(tmp_path):
    rec = sgd(small_problem("linear_regression"), max_epoch=2).record.with_f_opt(0.0)
    path = tmp_path / "r.csv"
    write_record_csv(rec, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# stochkit-record v1"
    assert lines[1].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 2 + len(rec)


# -- plots ----------------------------------------------------------------

def two_records():
    p = small_problem("logistic_regression", n=50)
    return p, {"SGD": sgd(p, max_epoch=5).record, "SVRG": svrg(p, max_epoch=5).record}


def test_cost_plot_structure(tmp_path):
    _, recs = two_records()
    root = assert_clean_svg(plot_cost(recs, tmp_path / "cost.svg"))
    assert len(series(root)) == 2
    assert legend_entries(root) == ["SGD", "SVRG"]


def test_optgap_plot_skipped_without_f_opt(tmp_path):
    _, recs = two_records()
    with pytest.warns(UserWarning):
        assert plot_optgap(recs, tmp_path / "optgap.svg") is None
    assert not (tmp_path / "optgap.svg").exists()


def test_optgap_plot_with_f_opt(tmp_path):
    p, recs = two_records()
    f_opt = p.calc_solution()[1]
    recs = {k: r.with_f_opt(f_opt) for k, r in recs.items()}
    root = assert_clean_svg(plot_optgap(recs, tmp_path / "optgap.svg"))
    assert len(series(root)) == 2


def test_trajectory_requires_two_dimensions(tmp_path):
    p, recs = two_records()
    with pytest.raises(UnsupportedDimensionError):
        plot_trajectory(p, recs, tmp_path / "t.svg")


def test_trajectory_plot(tmp_path):
    p = small_problem("logistic_regression", n=50, d=2)
    recs = {"SGD": sgd(p, max_epoch=5, store_w=True).record}
    root = assert_clean_svg(plot_trajectory(p, recs, tmp_path / "t.svg"))
    assert len(series(root)) == 1


def test_classification_plot(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 2))
    y = np.sign(X[:, 0])
    y_pred = y.copy()
    y_pred[:3] *= -1
    root = assert_clean_svg(plot_classification(X, y, y_pred, tmp_path / "c.svg"))
    classes = [el.get("class") for el in root.iter(SVG + "circle")]
    assert classes.count("miss") == 3 and classes.count("hit") == 17
    with pytest.raises(UnsupportedDimensionError):
        plot_classification(rng.standard_normal((5, 4)), np.ones(5), np.ones(5), tmp_path / "x.svg")


# -- experiments ----------------------------------------------------------

def test_empty_solver_list_writes_nothing(tmp_path):
    out = tmp_path / "out"
    with pytest.raises(UsageError):
        run_experiment(small_config(out, solvers=[]))
    assert not out.exists()


@pytest.mark.parametrize("change", [
    {"solvers": [{"name": "NoSuchSolver"}]},
    {"problem": {"kind": "ridge_regression"}},
    {"options": {"max_epoch": 0}},
    {"options": {"batch_size": 1000}},
    {"plots": {"trajectory": True}},
    {"unexpected": 1},
])
def test_invalid_configs_write_nothing(tmp_path, change):
    out = tmp_path / "out"
    with pytest.raises(UsageError):
        run_experiment(small_config(out, **change))
    assert not out.exists()


def test_unknown_solver_lists_valid_names(tmp_path):
    with pytest.raises(UsageError, match="SVRG"):
        run_experiment(small_config(tmp_path, solvers=["SVGR"]))


def test_experiment_outputs(tmp_path):
    res = run_experiment(small_config(tmp_path / "out"))
    assert res.exit_code == 0
    files = sorted(os.listdir(tmp_path / "out"))
    assert files == ["SGD.csv", "SVRG.csv", "cost.svg", "optgap.svg", "summary.json"]
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["status"] == "ok"
    assert summary["csv_columns"] == list(CSV_COLUMNS)
    assert [s["seed"] for s in summary["solvers"]] == [0, 1]
    assert all(s["termination_reason"] == "max-epoch" for s in summary["solvers"])
    assert summary["f_opt"] <= min(s["final_cost"] for s in summary["solvers"]) + 1e-10
    for name in ("cost.svg", "optgap.svg"):
        assert_clean_svg(tmp_path / "out" / name)


def test_rerun_is_byte_identical_except_time(tmp_path):
    run_experiment(small_config(tmp_path / "a"), seed=11)
    run_experiment(small_config(tmp_path / "b"), seed=11, jobs=2)
    for name in ("SGD.csv", "SVRG.csv"):
        assert csv_without_time(tmp_path / "a" / name) == csv_without_time(tmp_path / "b" / name)


def test_lambda_default_recorded(tmp_path):
    cfg = small_config(tmp_path)
    del cfg["problem"]["lambda"]
    summary = run_experiment(cfg).summary
    assert summary["problem"]["lambda"] == 0.01 and summary["problem"]["lambda_is_default"]


def test_diverging_solver_sets_exit_code(tmp_path):
    cfg = small_config(tmp_path, problem={"kind": "linear_regression", "data": {"generate": {"n": 60, "d": 3}}},
                       solvers=[{"name": "SGD", "options": {"step_init": 1e3, "max_epoch": 50}}, {"name": "SVRG"}])
    res = run_experiment(cfg)
    assert res.exit_code == 1
    assert res.summary["status"] == "failed"
    bad, good = res.summary["solvers"]
    assert "DivergedError" in bad["error"] and good["error"] is None
    assert (tmp_path / "SGD.csv").exists()


def test_file_dataset(tmp_path):
    data = tmp_path / "d.csv"
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 2))
    np.savetxt(data, np.column_stack([X, X @ [1.0, -1.0]]), delimiter=",")
    cfg = small_config(tmp_path / "out", problem={"kind": "linear_regression", "lambda": 0.0,
                                                  "data": {"file": {"path": str(data)}}},
                       plots={"trajectory": True})
    res = run_experiment(cfg)
    assert res.exit_code == 0
    assert "trajectory.svg" in res.summary["plots"]
    np.testing.assert_allclose(res.summary["calc_solution"]["w_opt"], [1.0, -1.0], atol=1e-8)


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv("STOCHKIT_SEED", raising=False)
    assert base_seed() == 0
    monkeypatch.setenv("STOCHKIT_SEED", "5")
    assert base_seed() == 5
    assert base_seed(config={"seed": 3}) == 3
    assert base_seed(7, {"seed": 3}) == 7
    monkeypatch.setenv("STOCHKIT_SEED", "five")
    with pytest.raises(UsageError):
        base_seed()


def test_env_seed_reaches_solvers(tmp_path, monkeypatch):
    monkeypatch.setenv("STOCHKIT_SEED", "40")
    summary = run_experiment(small_config(tmp_path)).summary
    assert [s["seed"] for s in summary["solvers"]] == [40, 41]


# -- CLI ------------------------------------------------------------------

def test_cli_run_and_usage_error(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps(small_config(tmp_path / "out")))
    assert main(["run", "--config", str(cfg), "--seed", "2"]) == 0
    assert json.loads((tmp_path / "out" / "summary.json").read_text())["base_seed"] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(small_config(tmp_path / "bad", solvers=[])))
    assert main(["run", "--config", str(bad)]) == 2
    assert "no solvers" in capsys.readouterr().err


def test_cli_flag_overrides_out(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps(small_config(tmp_path / "ignored")))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "SGD.csv").exists() and not (tmp_path / "ignored").exists()


def test_cli_gradcheck_single_problem(capsys):
    assert main(["gradcheck", "--problem", "linear_svm"]) == 0
    assert "linear_svm" in capsys.readouterr().out


def test_cli_solve(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("1,0,1\n0,1,2\n1,1,3\n")
    assert main(["solve", "--problem", "linear_regression", "--data", str(data), "--lambda", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(out["w_opt"], [1.0, 2.0], atol=1e-8)


def test_cli_solve_parse_error(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("1,0,1\n0,1\n")
    assert main(["solve", "--problem", "linear_regression", "--data", str(data)]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stochkit", "demo", "--quiet", "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0, proc.stderr
    assert sorted(os.listdir(tmp_path)) == ["SGD.csv", "SVRG.csv", "classification.svg", "cost.svg",
                                            "optgap.svg", "summary.json"]


def test_demo_config_shape():
    cfg = demo_config()
    assert cfg["problem"]["data"]["generate"] == {"n": 300, "d": 3, "seed": 0}
    assert [s["name"] for s in cfg["solvers"]] == ["SGD", "SVRG"]
    assert cfg["options"]["max_epoch"] == 100
