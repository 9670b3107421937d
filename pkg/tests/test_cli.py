import csv
import hashlib
import os

import numpy as np
import pytest

from tvcm.cli import main


def run(args):
    return main([str(a) for a in args])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def dir_digests(root):
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = hashlib.sha256(fh.read()).hexdigest()
    return out


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """simulate -> tune -> train -> predict -> evaluate -> importance on a
    small simulated dataset."""
    root = tmp_path_factory.mktemp("pipeline")
    assert run(["simulate", "--n", 3000, "--seed", 3,
                "--split-frac", 0.5, "--split-seed", 4, "--out", root]) == 0
    train_csv = root / "sim_train.csv"
    test_csv = root / "sim_test.csv"
    assert run(["tune", "--data", train_csv, "--max-kappa", 15,
                "--patience", 3, "--seed", 5, "--out", root]) == 0
    assert run(["train", "--data", train_csv, "--kappa", root / "kappa.csv",
                "--emit-beta", "--out", root]) == 0
    assert run(["predict", "--model", root / "model.json", "--data", test_csv,
                "--emit-beta", "--emit-delta", "--out", root]) == 0
    assert run(["evaluate", "--data", test_csv,
                "--pred", f"TVCM={root/'predictions.csv'}",
                "--fit-baselines", train_csv,
                "--rolling", 200, "--out", root]) == 0
    assert run(["importance", "--model", root / "model.json",
                "--data", train_csv, "--out", root]) == 0
    return root


def test_pipeline_outputs_exist(pipeline):
    for name in (
        "sim_data.csv",
        "sim_data_truth.csv",
        "sim_train.csv",
        "sim_test.csv",
        "kappa.csv",
        "tune_trace.csv",
        "model.json",
        "train_trace.csv",
        "train_beta.csv",
        "predictions.csv",
        "evaluation.csv",
        "rolling_mean.csv",
        "importance_split_gain.csv",
        "importance_fi_star.csv",
    ):
        assert (pipeline / name).exists(), name


def test_simulate_shapes_and_determinism(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert run(["simulate", "--n", 500, "--seed", 9, "--out", out_a]) == 0
    assert run(["simulate", "--n", 500, "--seed", 9, "--out", out_b]) == 0
    assert dir_digests(out_a) == dir_digests(out_b)
    rows = read_rows(out_a / "sim_data.csv")
    assert len(rows) == 500
    assert list(rows[0]) == ["y", "w"] + [f"x{j}" for j in range(1, 9)]
    truth = read_rows(out_a / "sim_data_truth.csv")
    assert list(truth[0]) == ["row_id", "mu"] + [f"beta_{j}" for j in range(1, 9)]
    assert float(truth[0]["beta_1"]) == 0.5


def test_kappa_table_row_count(pipeline):
    rows = read_rows(pipeline / "kappa.csv")
    assert len(rows) == 8
    assert {r["dimension"] for r in rows} == {f"x{j}" for j in range(1, 9)}


def test_tune_trace_row_count(pipeline):
    rows = read_rows(pipeline / "tune_trace.csv")
    # one row per candidate, grouped per dimension; acceptances per
    # dimension must equal the kappa table
    kappa = {r["dimension"]: int(r["kappa"]) for r in read_rows(pipeline / "kappa.csv")}
    accepted = {}
    for r in rows:
        accepted[r["dimension"]] = accepted.get(r["dimension"], 0) + int(r["accepted"])
    for dim, k in kappa.items():
        assert accepted.get(dim, 0) == k


def test_predict_columns(pipeline):
    rows = read_rows(pipeline / "predictions.csv")
    cols = list(rows[0])
    assert cols[0] == "row_id" and cols[1] == "mu_hat"
    for j in range(1, 9):
        assert f"beta_hat_x{j}" in cols
        assert f"delta_x{j}" in cols
    assert len(rows) == 1500


def test_model_reload_gives_identical_predictions(pipeline, tmp_path):
    out2 = tmp_path / "re"
    assert run(["predict", "--model", pipeline / "model.json",
                "--data", pipeline / "sim_test.csv", "--out", out2]) == 0
    a = [r["mu_hat"] for r in read_rows(pipeline / "predictions.csv")]
    b = [r["mu_hat"] for r in read_rows(out2 / "predictions.csv")]
    assert a == b


def test_evaluate_report(pipeline):
    rows = {r["model"]: float(r["avg_loss"]) for r in read_rows(pipeline / "evaluation.csv")}
    assert set(rows) == {"TVCM", "Intercept", "GLM"}
    # baselines must not beat the boosted model on this structured data
    assert rows["TVCM"] < rows["GLM"] < rows["Intercept"]


def test_evaluate_perfect_predictions_zero_loss(tmp_path):
    out = tmp_path
    assert run(["simulate", "--n", 200, "--seed", 2, "--out", out]) == 0
    rows = read_rows(out / "sim_data.csv")
    with open(out / "perfect.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "mu_hat"])
        for i, r in enumerate(rows):
            writer.writerow([i, r["y"]])
    assert run(["evaluate", "--data", out / "sim_data.csv",
                "--pred", f"perfect={out/'perfect.csv'}", "--out", out]) == 0
    report = read_rows(out / "evaluation.csv")
    assert float(report[0]["avg_loss"]) == 0.0


def test_importance_outputs(pipeline):
    gain = read_rows(pipeline / "importance_split_gain.csv")
    assert len(gain) == 8
    for row in gain:
        vals = [float(row[f"x{j}"]) for j in range(1, 9)]
        total = sum(vals)
        if int(row["kappa"]) == 0:
            assert total == 0.0 and row["note"] == "no_trees"
        else:
            assert total == pytest.approx(1.0, abs=1e-9)
    stars = read_rows(pipeline / "importance_fi_star.csv")
    included = [r for r in stars if r["fi_star"] != ""]
    assert sum(float(r["fi_star"]) for r in included) == pytest.approx(1.0, abs=1e-9)


def test_rolling_mean_output(pipeline):
    rows = read_rows(pipeline / "rolling_mean.csv")
    assert list(rows[0]) == ["index", "y", "TVCM", "Intercept", "GLM"]
    assert len(rows) == 1500 - 200 + 1


def test_missing_file_is_clean_error(tmp_path, capsys):
    code = run(["train", "--data", tmp_path / "nope.csv", "--kappa", "1",
                "--out", tmp_path])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("tvcm: error:")


def test_unseen_level_predict_error(tmp_path, capsys):
    # train a tiny poisson model with a categorical, then predict on a
    # file carrying a novel level
    data_csv = tmp_path / "claims.csv"
    rng = np.random.default_rng(0)
    with open(data_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "expo", "age", "region"])
        for i in range(400):
            age = rng.uniform(20, 80)
            expo = rng.uniform(0.2, 1.0)
            region = rng.choice(["north", "south"])
            lam = expo * 0.1 * (1 + (age > 50))
            writer.writerow([rng.poisson(lam), expo, age, region])
    cfg = tmp_path / "claims.cfg"
    cfg.write_text(
        "loss = poisson_deviance\nlink = log\nresponse = n\nweight = expo\n"
        "response_kind = count\nresponse_per_weight = true\n"
        "numeric = age\ncategorical = region\nmin_samples_leaf = 20\n"
    )
    out = tmp_path / "out"
    assert run(["train", "--data", data_csv, "--config", cfg, "--kappa", "3",
                "--out", out]) == 0
    bad_csv = tmp_path / "bad.csv"
    with open(bad_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "expo", "age", "region"])
        writer.writerow([0, 0.5, 44.0, "north"])
        writer.writerow([0, 0.5, 44.0, "east"])
    code = run(["predict", "--model", out / "model.json", "--data", bad_csv,
                "--config", cfg, "--out", out])
    assert code == 2
    err = capsys.readouterr().err
    assert "row 1" in err and "east" in err


def test_poisson_predictions_emit_expected_response(tmp_path):
    data_csv = tmp_path / "claims.csv"
    rng = np.random.default_rng(1)
    with open(data_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "expo", "age"])
        for _ in range(300):
            expo = rng.uniform(0.5, 1.0)
            writer.writerow([rng.poisson(expo * 0.2), expo, rng.uniform(20, 80)])
    cfg = tmp_path / "p.cfg"
    cfg.write_text(
        "loss = poisson_deviance\nlink = log\nresponse = n\nweight = expo\n"
        "response_kind = count\nresponse_per_weight = true\nnumeric = age\n"
        "min_samples_leaf = 20\n"
    )
    out = tmp_path / "out"
    assert run(["train", "--data", data_csv, "--config", cfg, "--kappa", "0",
                "--out", out]) == 0
    assert run(["predict", "--model", out / "model.json", "--data", data_csv,
                "--config", cfg, "--out", out]) == 0
    rows = read_rows(out / "predictions.csv")
    assert "expected_response" in rows[0]
    mu = np.array([float(r["mu_hat"]) for r in rows])
    exp_resp = np.array([float(r["expected_response"]) for r in rows])
    expo = []
    with open(data_csv) as fh:
        for r in csv.DictReader(fh):
            expo.append(float(r["expo"]))
    np.testing.assert_allclose(exp_resp, mu * np.array(expo), rtol=1e-12)


def test_poisson_evaluate_emits_x100_column(tmp_path):
    data_csv = tmp_path / "claims.csv"
    rng = np.random.default_rng(2)
    with open(data_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "expo", "age"])
        for _ in range(300):
            expo = rng.uniform(0.5, 1.0)
            writer.writerow([rng.poisson(expo * 0.2), expo, rng.uniform(20, 80)])
    cfg = tmp_path / "p.cfg"
    cfg.write_text(
        "loss = poisson_deviance\nlink = log\nresponse = n\nweight = expo\n"
        "response_kind = count\nresponse_per_weight = true\nnumeric = age\n"
        "min_samples_leaf = 20\n"
    )
    out = tmp_path / "out"
    assert run(["train", "--data", data_csv, "--config", cfg, "--kappa", "0",
                "--out", out]) == 0
    assert run(["predict", "--model", out / "model.json", "--data", data_csv,
                "--config", cfg, "--out", out]) == 0
    assert run(["evaluate", "--data", data_csv, "--config", cfg,
                "--pred", f"GLM={out/'predictions.csv'}", "--out", out]) == 0
    report = read_rows(out / "evaluation.csv")
    assert "avg_loss_x100" in report[0]
    assert float(report[0]["avg_loss_x100"]) == pytest.approx(
        100.0 * float(report[0]["avg_loss"]), rel=1e-12
    )


def test_config_precedence_flag_over_file_over_profile(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 77\nseed = 3\n")
    out = tmp_path / "o"
    # file overrides the profile default n=200000; flag overrides file
    assert run(["simulate", "--config", cfg, "--out", out]) == 0
    assert len(read_rows(out / "sim_data.csv")) == 77
    assert run(["simulate", "--config", cfg, "--n", 33, "--out", out]) == 0
    assert len(read_rows(out / "sim_data.csv")) == 33


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["simulate", "--n", 800, "--seed", 6,
                    "--split-frac", 0.5, "--out", out]) == 0
        assert run(["tune", "--data", out / "sim_train.csv", "--max-kappa", 6,
                    "--patience", 2, "--seed", 1, "--out", out]) == 0
        assert run(["train", "--data", out / "sim_train.csv",
                    "--kappa", out / "kappa.csv", "--out", out]) == 0
        assert run(["predict", "--model", out / "model.json",
                    "--data", out / "sim_test.csv", "--out", out]) == 0
    assert dir_digests(a) == dir_digests(b)


def test_unknown_profile_rejected(tmp_path, capsys):
    code = run(["simulate", "--profile", "sim", "--n", 10, "--out", tmp_path])
    assert code == 0
    cfg = tmp_path / "c.cfg"
    cfg.write_text("profile = nonsense\n")
    code = run(["simulate", "--config", cfg, "--n", 10, "--out", tmp_path])
    assert code == 2
    assert "profile" in capsys.readouterr().err
