import json

import numpy as np
import pytest

from stablemv import cli


def run(argv, capsys):
    rc = cli.main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def only_run_dir(root):
    dirs = [p for p in root.iterdir() if p.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def test_sample_artifacts_and_determinism(tmp_path, capsys):
    argv = ["sample", "--alpha", "1.3", "--n", "2000", "--seed", "5",
            "--output-root", str(tmp_path / "a")]
    rc, _, _ = run(argv, capsys)
    assert rc == 0
    argv2 = ["sample", "--alpha", "1.3", "--n", "2000", "--seed", "5",
             "--output-root", str(tmp_path / "b")]
    rc, _, _ = run(argv2, capsys)
    assert rc == 0
    da, db = only_run_dir(tmp_path / "a"), only_run_dir(tmp_path / "b")
    assert da.name == db.name  # same config -> same run_id
    assert (da / "samples.csv").read_bytes() == (db / "samples.csv").read_bytes()
    assert (da / "config.json").read_bytes() == (db / "config.json").read_bytes()
    header = (da / "samples.csv").read_text().splitlines()[0]
    assert header == "index,x_1"
    man = json.loads((da / "manifest.json").read_text())
    assert set(man["files"]) == {"samples.csv", "config.json"}
    # a different seed must change the draws
    rc, _, _ = run(["sample", "--alpha", "1.3", "--n", "2000", "--seed", "6",
                    "--output-root", str(tmp_path / "c")], capsys)
    dc = only_run_dir(tmp_path / "c")
    assert (dc / "samples.csv").read_bytes() != (da / "samples.csv").read_bytes()


def test_schema_violation_reports_field_path(tmp_path, capsys):
    rc, _, err = run(["sample", "--alpha", "2.5", "--n", "10", "--seed", "1",
                      "--output-root", str(tmp_path)], capsys)
    assert rc == 2
    assert "alpha" in err
    assert not any(tmp_path.iterdir())  # nothing written


def test_unknown_model_rejected(tmp_path, capsys):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({
        "schema_version": "1", "model": "nope", "t_max": 1.0,
        "n_steps": 4, "n_paths": 10, "seed": 1,
    }))
    rc, _, err = run(["simulate", str(cfg), "--output-root", str(tmp_path / "r")],
                     capsys)
    assert rc == 2
    assert "model" in err


def test_invalid_json_config(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    rc, _, err = run(["simulate", str(cfg), "--output-root", str(tmp_path / "r")],
                     capsys)
    assert rc == 2
    assert "invalid JSON" in err


def test_missing_subcommand(capsys):
    rc, _, _ = run([], capsys)
    assert rc == 2


def test_density_output(tmp_path, capsys):
    rc, _, _ = run(["density", "--alpha", "1.0", "--convention", "unit",
                    "--x-min", "-4", "--x-max", "4", "--n-points", "81",
                    "--output-root", str(tmp_path)], capsys)
    assert rc == 0
    d = only_run_dir(tmp_path)
    data = np.loadtxt(d / "density.csv", delimiter=",", skiprows=1)
    # UNIT alpha=1 at t=1 is the standard Cauchy
    np.testing.assert_allclose(
        data[:, 1], 1.0 / (np.pi * (1.0 + data[:, 0] ** 2)), atol=1e-8
    )


def test_wass_prints_result_json(tmp_path, capsys):
    gen = np.random.default_rng(0)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    np.savetxt(a, gen.normal(size=(40, 1)), delimiter=",", header="x_1", comments="")
    np.savetxt(b, gen.normal(size=(40, 1)) + 1.0, delimiter=",", header="x_1",
               comments="")
    rc, out, _ = run(["wass", str(a), str(b), "--kappa", "0.5",
                      "--output-root", str(tmp_path / "r")], capsys)
    assert rc == 0
    result = json.loads(out.strip().splitlines()[-1])
    assert set(result) == {"primal", "dual_lb", "gap"}
    assert 0.0 <= result["dual_lb"] <= result["primal"]
    saved = json.loads((only_run_dir(tmp_path / "r") / "wass.json").read_text())
    assert saved == pytest.approx(result)


def test_simulate_artifacts(tmp_path, capsys):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({
        "schema_version": "1", "model": "stable_ou",
        "params": {"alpha": 1.2, "x0": 1.0},
        "t_max": 1.0, "n_steps": 10, "n_paths": 50, "seed": 3, "thin": 10,
    }))
    rc, _, _ = run(["simulate", str(cfg), "--output-root", str(tmp_path / "r")],
                   capsys)
    assert rc == 0
    d = only_run_dir(tmp_path / "r")
    marginals = sorted((d / "marginals").glob("node_*.csv"))
    assert len(marginals) == 11
    cloud = np.loadtxt(marginals[-1], delimiter=",", skiprows=1)
    assert cloud.shape == (50,)
    paths = np.loadtxt(d / "paths.csv", delimiter=",", skiprows=1)
    assert paths.shape == (11, 6)  # t + every 10th of 50 paths


def test_picard_artifacts(tmp_path, capsys):
    cfg = tmp_path / "pic.json"
    cfg.write_text(json.dumps({
        "schema_version": "1", "model": "mean_field_eta",
        "params": {"alpha": 0.9, "eta": 0.6},
        "delta": "auto", "tol": 0.01, "max_iter": 3,
        "t_max": 1.0, "n_steps": 12, "n_paths": 200, "seed": 4,
    }))
    rc, _, _ = run(["picard", str(cfg), "--output-root", str(tmp_path / "r")],
                   capsys)
    assert rc == 0
    d = only_run_dir(tmp_path / "r")
    rep = json.loads((d / "picard_report.json").read_text())
    for key in ("distances", "delta", "fitted_ratio", "theoretical_factor_form",
                "converged", "residual", "noise_floor"):
        assert key in rep
    iters = sorted((d / "marginals").glob("iter*_node*.csv"))
    assert len(iters) == 5 * len(rep["distances"])


def test_probe_artifacts(tmp_path, capsys):
    rc, _, _ = run(["probe", "--case", "frac", "--alpha", "1.0", "--eta", "0.5",
                    "--lags", "0.05:2.0:6", "--n", "5000", "--seed", "2",
                    "--output-root", str(tmp_path)], capsys)
    assert rc == 0
    d = only_run_dir(tmp_path)
    table = np.loadtxt(d / "probe.csv", delimiter=",", skiprows=1)
    assert table.shape == (6, 3)
    rep = json.loads((d / "probe.json").read_text())
    assert rep["target_exponent"] == pytest.approx(-0.5)


def test_probe_rejects_eta_above_alpha(tmp_path, capsys):
    rc, _, err = run(["probe", "--case", "grad", "--alpha", "0.8", "--eta", "0.9",
                      "--lags", "0.05:2.0:6", "--n", "100", "--seed", "2",
                      "--output-root", str(tmp_path)], capsys)
    assert rc == 2
    assert "eta" in err


def test_recipe_dispatch(tmp_path, capsys):
    rc, out, _ = run(["--recipe", "wasserstein_exact",
                      "--output-root", str(tmp_path)], capsys)
    assert rc == 0
    assert "PASS" in out
    d = only_run_dir(tmp_path)
    rep = json.loads((d / "report.json").read_text())
    assert rep["passed"] is True
    assert rep["criterion"] == 4


def test_recipe_unknown_name(tmp_path, capsys):
    rc, _, err = run(["--recipe", "bogus", "--output-root", str(tmp_path)], capsys)
    assert rc == 2
    assert "recipe" in err


def test_counterexample_artifacts(tmp_path, capsys):
    rc, _, _ = run(["counterexample", "--alpha", "0.75", "--rho", "0.1",
                    "--tol", "5e-3", "--n-steps", "4", "--n-paths", "1500",
                    "--seed", "9", "--output-root", str(tmp_path)], capsys)
    assert rc == 0
    d = only_run_dir(tmp_path)
    root = json.loads((d / "root.json").read_text())
    assert abs(root["c"] - 0.52852) < 5e-3
    verify = json.loads((d / "verify.json").read_text())
    assert "checks" in verify and "w_eta" in verify
    laws = np.loadtxt(d / "laws_t1.csv", delimiter=",", skiprows=1)
    assert laws.shape == (1500, 2)
    # the two solution clouds differ by the deterministic shift c T^{1/alpha}
    shift = root["c"] * 1.0 ** (1.0 / 0.75)
    np.testing.assert_allclose(laws[:, 1] - laws[:, 0], shift, rtol=1e-10)
