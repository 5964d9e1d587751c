import json

import pytest

from wracma.cli import main


def test_list_shows_registry(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for pid in ("f1", "f4", "f8"):
        assert pid in out
    assert "non-sm st-cv" in out


def test_solve_prints_record(capsys):
    code = main([
        "solve", "--problem", "f5", "--b", "1", "--algo", "zo-pgda",
        "--m", "3", "--n", "3", "--seed", "7", "--budget", "4000",
        "--target", "1e-6",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["problem"] == "f5"
    assert payload["algorithm"] == "zo-pgda"
    assert payload["seed"] == 7
    assert payload["fcalls"] <= 4000


def test_solve_baseline_fails_on_bilinear(capsys):
    code = main([
        "solve", "--problem", "f1", "--algo", "zo-pgda",
        "--m", "3", "--n", "3", "--seed", "1", "--budget", "50000",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "budget_exhausted"
    assert payload["final_gap"] > 1e-6


def test_solve_rejects_b_for_fixed_problems(capsys):
    assert main(["solve", "--problem", "f2", "--b", "3", "--algo", "zo-pgda",
                 "--budget", "100"]) == 2


def test_unknown_problem_exits_2(capsys):
    assert main(["solve", "--problem", "f9", "--algo", "zo-pgda"]) == 2


def test_unknown_flag_exits_2(capsys):
    assert main(["solve", "--problem", "f5", "--algo", "zo-pgda", "--frobnicate", "1"]) == 2


def test_run_missing_config_exits_2(capsys):
    assert main(["run", "--config", "/nonexistent/config.json"]) == 2


def test_run_invalid_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"problems": [{"id": "f5"}], "trials": 0}))
    assert main(["run", "--config", str(cfg)]) == 2
    cfg.write_text("{not json")
    assert main(["run", "--config", str(cfg)]) == 2


def test_run_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "problems": [{"id": "f5", "b": [1.0]}],
        "m": 5, "n": 5,
        "algorithms": ["wra-cmaes"],
        "trials": 2,
        "budget": 60000,
        "seed_base": 1,
        "workers": 1,
        "output_dir": str(tmp_path / "out"),
    }))
    assert main(["run", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "success 2/2" in out
    assert (tmp_path / "out" / "results.csv").is_file()
    assert (tmp_path / "out" / "results.json").is_file()
    assert (tmp_path / "out" / "scaling.csv").is_file()
    assert (tmp_path / "out" / "gap_f5_b1.png").is_file()


def test_run_no_figures(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "problems": [{"id": "f5", "b": [1.0]}],
        "algorithms": ["zo-pgda"],
        "trials": 1,
        "budget": 4000,
        "workers": 1,
    }))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o2"),
                 "--no-figures"]) == 0
    files = {p.name for p in (tmp_path / "o2").iterdir()}
    assert files == {"results.csv", "results.json", "scaling.csv"}


def test_verify_small_battery(capsys):
    code = main(["verify", "--problems", "f5", "f8", "--samples", "12",
                 "--resolution", "101", "--dims", "1", "2", "--seed", "3"])
    assert code == 0
    out = capsys.readouterr().out
    assert "f5: 12 points, ok" in out
    assert "f8: 12 points, ok" in out


def test_verify_rejects_large_dims(capsys):
    assert main(["verify", "--dims", "4"]) == 2


def test_report_from_results(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "problems": [{"id": "f5", "b": [1.0]}],
        "algorithms": ["zo-pgda"],
        "trials": 1,
        "budget": 4000,
        "workers": 1,
        "figures": False,
        "output_dir": str(tmp_path / "res"),
    }))
    assert main(["run", "--config", str(cfg)]) == 0
    capsys.readouterr()
    assert main(["report", "--results", str(tmp_path / "res" / "results.json"),
                 "--out", str(tmp_path / "figs")]) == 0
    assert (tmp_path / "figs" / "gap_f5_b1.png").is_file()


def test_report_missing_file(capsys):
    assert main(["report", "--results", "/nope.json"]) == 2
