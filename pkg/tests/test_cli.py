import csv
import io
import json
import math

import numpy as np
import pytest

from fairkit import cli
from fairkit.core import Dataset
from fairkit.data import NUMERIC_COLUMNS, Standardizer, encode, load_german_credit
from fairkit.model_selection import ExperimentConfig, fit_condition, predict_with, rows_from_csv


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


@pytest.fixture
def toy_csv(tmp_path):
    r = np.random.default_rng(0)
    n = 120
    s = r.integers(0, 2, n)
    x1 = r.normal(size=n)
    x2 = r.integers(0, 2, n)
    y = (x1 - 0.6 * s + 0.3 * r.normal(size=n) > 0).astype(int)
    p = tmp_path / "toy.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "s", "y"])
        for row in zip(x1, x2, s, y):
            w.writerow([f"{row[0]:.6f}", *row[1:]])
    return p


class TestUsage:
    def test_no_args(self):
        assert run() == 1

    def test_unknown_flag(self):
        assert run("audit", "--bogus") == 1

    def test_unknown_protected(self, tmp_path):
        assert run("audit", "--protected", "height", "--output", tmp_path / "a.json") == 1

    def test_experiment_needs_seed(self, tmp_path):
        assert run("experiment", "--output", tmp_path / "out") == 1

    def test_forest_needs_seed(self, tmp_path):
        assert run("train", "--model", "forest", "--output", tmp_path / "m.json") == 1
        assert not (tmp_path / "m.json").exists()

    def test_bad_theta(self, tmp_path):
        assert run("train", "--condition", "ROC", "--theta", "0.4", "--output", tmp_path / "m.json") == 1

    def test_missing_dataset(self, tmp_path):
        assert run("audit", "--dataset", tmp_path / "nope.data") == 2

    def test_truncated_dataset(self, tmp_path, german_records):
        from fairkit.data import german_credit_path

        lines = german_credit_path().read_text().splitlines()
        p = tmp_path / "short.data"
        p.write_text("\n".join(lines[:999]) + "\n")
        assert run("audit", "--dataset", p) == 2


class TestAudit:
    def test_values_and_determinism(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run("audit", "--output", a) == 0
        assert run("audit", "--output", b) == 0
        assert a.read_bytes() == b.read_bytes()
        doc = json.loads(a.read_text())
        md = {(r["protected"], r["metric"]): r for r in doc["results"]}
        assert md[("female", "mean_difference")]["value"] == pytest.approx(0.0748, abs=0.005)
        assert md[("foreign_worker", "normalized_mean_difference")]["value"] == pytest.approx(0.6396, abs=0.005)
        assert len(doc["sha256"]) == 64

    def test_csv_output(self, tmp_path):
        out = tmp_path / "a.csv"
        assert run("audit", "--protected", "female", "--output-format", "csv", "--output", out) == 0
        rows = read_csv(out)
        assert [r["metric"] for r in rows] == [
            "mean_difference",
            "normalized_mean_difference",
            "consistency",
            "situation_test_score",
        ]
        assert rows[2]["ci_low"] == ""

    def test_zero_bias_csv(self, tmp_path):
        p = tmp_path / "fair.csv"
        p.write_text("x,s,y\n0.1,0,1\n0.2,0,0\n0.3,1,1\n0.4,1,0\n0.5,0,1\n0.6,1,1\n")
        out = tmp_path / "a.json"
        assert run("audit", "--dataset", p, "--format", "csv", "--k", "2", "--output", out) == 0
        res = {r["metric"]: r for r in json.loads(out.read_text())["results"]}
        assert res["mean_difference"]["value"] == 0.0

    def test_undefined_metric_is_null(self, tmp_path):
        p = tmp_path / "flat.csv"
        p.write_text("x,s,y\n0.1,0,1\n0.2,0,1\n0.3,1,1\n0.4,1,1\n")
        out = tmp_path / "a.json"
        assert run("audit", "--dataset", p, "--format", "csv", "--k", "2", "--output", out) == 0
        res = {r["metric"]: r for r in json.loads(out.read_text())["results"]}
        assert res["normalized_mean_difference"]["value"] is None
        assert res["mean_difference"]["value"] == 0.0


class TestTrainPredict:
    @pytest.mark.parametrize(
        "condition,model", [("B", "logistic"), ("RPA", "tree"), ("RTV", "logistic"), ("CFM", "logistic"), ("ROC", "tree")]
    )
    def test_round_trip_matches_in_process(self, tmp_path, condition, model):
        mpath, ppath = tmp_path / "m.json", tmp_path / "p.csv"
        assert run("train", "--protected", "age_below_25", "--condition", condition, "--model", model,
                   "--output", mpath) == 0
        assert run("predict", "--model", mpath, "--output", ppath) == 0
        preds = read_csv(ppath)
        assert len(preds) == 1000

        from fairkit.data import ALL_PROTECTED_COLUMNS

        data = encode(load_german_credit(), "age_below_25", standardize=False)
        if condition == "RPA":
            data = data.drop_columns(ALL_PROTECTED_COLUMNS)
        std = Standardizer(NUMERIC_COLUMNS).fit(data.X, list(data.feature_names))
        train = Dataset(std.transform(data.X), data.y, data.s, data.feature_names, data.protected_name)
        fitted = fit_condition(condition, model, train, ExperimentConfig())
        labels, scores = predict_with(fitted, train.X, train.s)
        assert [int(p["label"]) for p in preds] == labels.tolist()
        np.testing.assert_allclose([float(p["score"]) for p in preds], scores, atol=5e-7)

    def test_forest_with_seed_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert run("train", "--model", "forest", "--n-estimators", "5", "--seed", "3", "--output", p) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_csv_acf_missing_protected(self, tmp_path, toy_csv):
        mpath = tmp_path / "m.json"
        assert run("train", "--dataset", toy_csv, "--format", "csv", "--condition", "CFM", "--output", mpath) == 0
        assert run("predict", "--dataset", toy_csv, "--format", "csv", "--model", mpath,
                   "--output", tmp_path / "ok.csv") == 0
        no_s = tmp_path / "no_s.csv"
        rows = toy_csv.read_text().splitlines()
        no_s.write_text("\n".join(",".join(r.split(",")[:2] + r.split(",")[3:]) for r in rows) + "\n")
        assert run("predict", "--dataset", no_s, "--format", "csv", "--model", mpath) == 2

    def test_missing_s_message(self, tmp_path, toy_csv, capsys):
        mpath = tmp_path / "m.json"
        run("train", "--dataset", toy_csv, "--format", "csv", "--condition", "ROC", "--output", mpath)
        no_s = tmp_path / "no_s.csv"
        no_s.write_text("x1,x2,y\n0.5,1,1\n")
        capsys.readouterr()
        assert run("predict", "--dataset", no_s, "--format", "csv", "--model", mpath) == 2
        assert "missing input" in capsys.readouterr().err

    def test_tampered_model(self, tmp_path):
        mpath = tmp_path / "m.json"
        assert run("train", "--output", mpath) == 0
        doc = json.loads(mpath.read_text())
        doc["payload"]["model"]["coef"][0] += 0.5
        mpath.write_text(json.dumps(doc))
        assert run("predict", "--model", mpath) == 2

    def test_version_mismatch(self, tmp_path):
        mpath = tmp_path / "m.json"
        assert run("train", "--output", mpath) == 0
        doc = json.loads(mpath.read_text())
        doc["version"] = 2
        mpath.write_text(json.dumps(doc))
        assert run("predict", "--model", mpath) == 2


class TestConfigFile:
    def test_values_applied_and_flags_win(self, tmp_path, toy_csv):
        cfg = tmp_path / "c.ini"
        cfg.write_text(f"[fairkit]\ndataset = {toy_csv}\nformat = csv\nmodel = tree\nmax-depth = 2\n")
        mpath = tmp_path / "m.json"
        assert run("train", "--config", cfg, "--output", mpath) == 0
        payload = json.loads(mpath.read_text())["payload"]
        assert payload["model_type"] == "tree"
        assert payload["hyperparameters"]["max_depth"] == 2
        assert run("train", "--config", cfg, "--max-depth", "3", "--output", mpath) == 0
        assert json.loads(mpath.read_text())["payload"]["hyperparameters"]["max_depth"] == 3

    def test_required_flag_from_file(self, tmp_path, toy_csv):
        out = tmp_path / "m.json"
        cfg = tmp_path / "c.ini"
        cfg.write_text(f"[fairkit]\ndataset = {toy_csv}\nformat = csv\noutput = {out}\n")
        assert run("train", "--config", cfg) == 0
        assert out.exists()

    @pytest.mark.parametrize(
        "body", ["[fairkit]\nbogus = 1\n", "[other]\nk = 3\n", "[fairkit]\nk = three\n", "[fairkit]\nformat = xml\n"]
    )
    def test_bad_config(self, tmp_path, body):
        cfg = tmp_path / "c.ini"
        cfg.write_text(body)
        assert run("audit", "--config", cfg) == 1

    def test_missing_config(self, tmp_path):
        assert run("audit", "--config", tmp_path / "none.ini") == 1


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    rc = cli.main(["experiment", "--conditions", "B,ROC", "--models", "logistic,tree", "--protected",
                   "female,age_below_25", "--folds", "3", "--seed", "4", "--theta", "0.5001",
                   "--output", str(out), "--emit-plot-data"])
    return rc, out


class TestExperimentReport:

    def test_outputs(self, small_run):
        rc, out = small_run
        assert rc == 0
        for name in ("rows.csv", "rows.json", "failures.csv", "summary.csv", "correlation.csv", "plot_data.csv"):
            assert (out / name).exists()
        assert len(read_csv(out / "rows.csv")) == 2 * 2 * 2 * 3 * 2

    def test_degenerate_theta_rows_match_b(self, small_run):
        _, out = small_run
        rows = rows_from_csv((out / "rows.csv").read_text())
        key = lambda r: (r["model"], r["protected"], r["fold"], r["split"])  # noqa: E731
        b = {key(r): r for r in rows if r["condition"] == "B"}
        roc = {key(r): r for r in rows if r["condition"] == "ROC"}
        assert b.keys() == roc.keys()
        for k in b:
            assert abs(b[k]["auc"] - roc[k]["auc"]) <= 1e-12
            assert abs(b[k]["mean_difference"] - roc[k]["mean_difference"]) <= 1e-12

    def test_summary_recomputable(self, small_run):
        _, out = small_run
        rows = rows_from_csv((out / "rows.csv").read_text())
        for s in read_csv(out / "summary.csv"):
            vals = [r["mean_difference"] for r in rows if (r["condition"], r["model"], r["protected"], r["split"])
                    == (s["condition"], s["model"], s["protected"], s["split"])]
            assert float(s["mean_difference"]) == round(math.fsum(vals) / len(vals), 6)
            assert int(s["folds"]) == len(vals)

    def test_report_subcommand_reproduces_tables(self, small_run, tmp_path):
        _, out = small_run
        assert run("report", "--input", out / "rows.csv", "--output", tmp_path) == 0
        assert (tmp_path / "summary.csv").read_bytes() == (out / "summary.csv").read_bytes()
        assert (tmp_path / "correlation.csv").read_bytes() == (out / "correlation.csv").read_bytes()

    def test_report_prints(self, small_run, capsys):
        _, out = small_run
        assert run("report", "--input", out / "rows.csv") == 0
        assert "Pearson r" in capsys.readouterr().out

    def test_report_bad_header(self, tmp_path):
        p = tmp_path / "rows.csv"
        p.write_text("a,b\n1,2\n")
        assert run("report", "--input", p) == 2

    def test_csv_dataset_experiment(self, tmp_path, toy_csv):
        out = tmp_path / "exp"
        assert run("experiment", "--dataset", toy_csv, "--format", "csv", "--conditions", "B,RPA,CFM",
                   "--models", "logistic", "--folds", "3", "--seed", "0", "--output", out) == 0
        assert len(read_csv(out / "rows.csv")) == 3 * 3 * 2
