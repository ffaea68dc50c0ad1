import json

from pathcalc.cli import main


def run(args):
    return main(args)


def test_list_prints_catalogs(capsys):
    assert run(["list"]) == 0
    out = capsys.readouterr().out
    assert "convolution" in out
    assert "t^2 / 2" in out
    assert "step_bm" in out
    assert "functions:" in out


def test_list_filter(capsys):
    assert run(["list", "convolution"]) == 0
    out = capsys.readouterr().out
    assert "convolution" in out
    assert "poisson" not in out.split("scenarios:")[-1].split("orth")[0]


def test_unknown_scenario_exits_2(tmp_path, capsys):
    assert run(["qv", "--scenario", "nope", "--out", str(tmp_path)]) == 2


def test_bad_schedule_exits_2(tmp_path):
    code = run(["qv", "--scenario", "poisson", "--n", "100",
                "--out", str(tmp_path)])
    assert code == 2


def test_qv_writes_artifacts_and_passes(tmp_path):
    code = run(["qv", "--scenario", "poisson", "--tol", "0.05",
                "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "poisson_qv_report.json").read_text())
    assert report["schema_version"] == 1
    assert report["converged"] is True
    conv = (tmp_path / "poisson_qv_convergence.csv").read_text()
    assert conv.splitlines()[0] == "epsilon,sup_gap"
    assert (tmp_path / "poisson_qv_limit.csv").exists()


def test_qv_rough_scenario_reports_expected_failure(tmp_path):
    code = run(["qv", "--scenario", "fbm02", "--out", str(tmp_path)])
    assert code == 1
    report = json.loads((tmp_path / "fbm02_qv_report.json").read_text())
    assert report["converged"] is False
    assert report["expected_converged"] is False


def test_ito_check_pass_and_residual_csv(tmp_path):
    code = run(["ito-check", "--scenario", "bm", "--fn", "square",
                "--n", "50000", "--tol", "0.05", "--out", str(tmp_path)])
    assert code == 0
    res = (tmp_path / "bm_ito_square_residual.csv").read_text()
    assert res.splitlines()[0] == "t,residual"
    report = json.loads((tmp_path / "bm_ito_square_report.json").read_text())
    assert report["relative_residual"] < 1e-2


def test_ito_check_measure_form(tmp_path):
    code = run(["ito-check", "--scenario", "poisson", "--fn", "identity",
                "--measure-form", "--tol", "0.05", "--out", str(tmp_path)])
    assert code == 0
    diag = json.loads(
        (tmp_path / "poisson_ito_identity_integrability.json").read_text())
    assert diag["kind"] == "integrability_report"
    assert diag["square_summable"] is True


def test_dirichlet_check_positive_and_negative(tmp_path):
    assert run(["dirichlet-check", "--scenario", "step_bm",
                "--out", str(tmp_path)]) == 0
    assert run(["dirichlet-check", "--scenario", "self",
                "--out", str(tmp_path)]) == 1
    rep = json.loads((tmp_path / "self_orth_report.json").read_text())
    assert rep["decision"] is False
    assert rep["expected_decision"] is False


def test_dirichlet_chain_mode(tmp_path):
    code = run(["dirichlet-check", "--chain", "poisson", "--fn", "square",
                "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads(
        (tmp_path / "poisson_chain_square_report.json").read_text())
    assert rep["kind"] == "chain_rule_report"
    assert rep["decision"] is True


def test_simulate_writes_path_and_truth(tmp_path):
    code = run(["simulate", "--kind", "compound_poisson", "--intensity", "2",
                "--jump-law", "normal:0,1", "--n", "256", "--seed", "3",
                "--out", str(tmp_path)])
    assert code == 0
    truth = json.loads(
        (tmp_path / "compound_poisson_seed3_truth.json").read_text())
    assert truth["schema_version"] == 1
    assert truth["compensator"]["kind"] == "compound_poisson"
    csv = (tmp_path / "compound_poisson_seed3_path.csv").read_text()
    assert csv.splitlines()[1] == "t,value,left_value,is_jump"
    from pathcalc.paths import CadlagPath
    p = CadlagPath.from_csv(csv)
    assert [t for t, _ in p.jumps()] == truth["jump_times"]


def test_simulate_bad_kind_exits_2(tmp_path):
    assert run(["simulate", "--kind", "weird", "--out", str(tmp_path)]) == 2


def test_reports_are_byte_identical_across_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["qv", "--scenario", "poisson", "--seed", "5",
                    "--out", str(out)]) == 0
    assert ((a / "poisson_qv_report.json").read_bytes()
            == (b / "poisson_qv_report.json").read_bytes())
    assert ((a / "poisson_qv_limit.csv").read_bytes()
            == (b / "poisson_qv_limit.csv").read_bytes())


def test_config_file_defaults_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("scenario=poisson\nseed=9\ntol=0.05\n")
    out1 = tmp_path / "o1"
    assert run(["qv", "--config", str(cfg), "--out", str(out1)]) == 0
    rep1 = json.loads((out1 / "poisson_qv_report.json").read_text())
    assert rep1["tol"] == 0.05
    # explicit flag wins over the config value
    out2 = tmp_path / "o2"
    assert run(["qv", "--config", str(cfg), "--tol", "0.02",
                "--out", str(out2)]) == 0
    rep2 = json.loads((out2 / "poisson_qv_report.json").read_text())
    assert rep2["tol"] == 0.02


def test_output_dir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("PATHCALC_OUT", str(tmp_path / "envout"))
    assert run(["dirichlet-check", "--scenario", "step_bm", "--n", "20000",
                "--eps0", "0.05", "--levels", "6"]) == 0
    assert (tmp_path / "envout" / "step_bm_orth_report.json").exists()


def test_forward_subcommand(tmp_path):
    code = run(["forward", "--scenario", "bm", "--fn", "identity",
                "--n", "50000", "--tol", "0.05", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "bm_forward_identity_report.json").exists()


def test_convergence_subcommand_dispatch(tmp_path):
    code = run(["convergence", "--scenario", "poisson", "--op", "qv",
                "--tol", "0.05", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "poisson_qv_convergence.csv").exists()
