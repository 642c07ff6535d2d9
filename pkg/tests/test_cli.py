import json
import math

import pytest

from rbg_hubs.cli import build_parser, main, resolve_config


def test_theory_json(capsys, tmp_path):
    code = main(["theory", "--conn", "boolean:0.2122", "--lambda", "5", "--mu", "50", "--json"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["experiment"] == "theory"
    run_dir = tmp_path / "outs" / "theory"
    assert str(run_dir) in out["artifacts_path"]
    assert (tmp_path / "outs" / "run_log.jsonl").exists()


def test_theory_prints_its_table(capsys):
    assert main(["theory", "--conn", "exp:0.2122", "--lambda", "5", "--mu", "50", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    rows = {r["quantity"]: r for r in out["table"]}
    assert rows["expected_M_exp"]["method"] == "quadrature"
    assert rows["expected_M_exp"]["value"] > 0 and rows["expected_M_exp"]["error"] > 0
    assert rows["expected_N"]["value"] == pytest.approx(5 * 50 * (math.pi * 0.2122**2) ** 2)

    assert main(["theory", "--conn", "exp:0.2122", "--lambda", "5", "--mu", "50", "--format", "json"]) == 0
    text = capsys.readouterr().out
    header = next(line for line in text.splitlines() if line.startswith("quantity"))
    assert header.split() == ["quantity", "value", "method", "error"]
    assert "expected_M_exp" in text and "variance_N" in text


def test_missing_seed_is_a_config_error(capsys):
    code = main(["degrees", "--conn", "boolean:0.2", "--lambda", "5", "--mu", "5"])
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == 2 and err["error"] == "ConfigError"
    assert "seed" in err["message"]


def test_bad_connection_spec(capsys):
    assert main(["theory", "--conn", "triangle:0.2", "--lambda", "1", "--mu", "1"]) == 2


def test_config_file_flags_win(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg_file.write_text(
        "# sweep defaults\n"
        "conn = boolean:0.5\n"
        "lambda = 2\n"
        "mu = 3\n"
        "seed = 11\n"
        "L = 4,8\n"
        "grid = 1:4:4\n"
        "fix = mu=3\n"
        "reps = 20\n"
    )
    args = build_parser().parse_args(["percolate", "--config", str(cfg_file), "--reps", "8", "--L", "8,16", "--lambda", "7"])
    cfg = resolve_config(args)
    assert cfg.reps == 8 and cfg.L_list == [8.0, 16.0] and cfg.lam == 7.0
    assert cfg.seed == 11 and cfg.grid == [1.0, 2.0, 3.0, 4.0] and cfg.fix == ("mu", 3.0)


def test_config_file_typo_exits_2(capsys, tmp_path):
    cfg_file = tmp_path / "typo.cfg"
    cfg_file.write_text("lamda = 5\nmu = 50\nconn = boolean:0.2122\n")
    assert main(["theory", "--config", str(cfg_file), "--lambda", "5"]) == 2
    assert "lamda" in json.loads(capsys.readouterr().err.strip().splitlines()[-1])["message"]


def test_percolate_writes_sweep(capsys, tmp_path):
    out = tmp_path / "run"
    code = main([
        "percolate", "--conn", "boolean:0.5", "--fix", "mu=4", "--grid", "0.5:8:4",
        "--L", "4,6", "--reps", "4", "--seed", "2", "--out", str(out), "--json",
    ])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)["summary"]
    assert summary["param"] == "lambda" and "bounds" in summary
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "param,value,L,reps,perc_prob,ci_lo,ci_hi"
    assert len(lines) == 1 + 2 * 4
    assert (out / "run_log.jsonl").exists()


def test_strict_censored_exit_code(capsys, tmp_path):
    code = main([
        "percolate", "--conn", "boolean:0.5", "--fix", "mu=0.1", "--grid", "0.01,0.02",
        "--L", "4,8", "--reps", "4", "--seed", "1", "--strict", "--out", str(tmp_path / "c"),
    ])
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "CensoredThresholdError"
    assert (tmp_path / "c" / "sweep.csv").exists()


def test_window_too_small_exit_code(capsys):
    code = main([
        "percolate", "--conn", "boolean:0.5", "--fix", "mu=1", "--grid", "1,2",
        "--L", "1,2", "--reps", "2", "--seed", "1",
    ])
    assert code == 2


def test_figs_fig1(capsys, tmp_path):
    out = tmp_path / "fig"
    assert main(["figs", "fig1", "--seed", "5", "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"fig1_points.csv", "fig1_f1_edges.csv", "fig1_f2_edges.csv", "summary.json", "manifest.json"} <= names
