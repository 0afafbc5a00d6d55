import json
import subprocess
import sys

import pytest

from gsemod.cli import (EXIT_DATA, EXIT_EXCESS_TRUNCATION, EXIT_OK, EXIT_TRUNCATED,
                        EXIT_USAGE, main)


def test_run_tiny_reaches_optimum(tmp_path, capsys):
    assert main(["run", "--n", "3", "--seed", "1", "--init", "almost-balanced",
                 "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / "run_n3_seed1_last-stage.json").read_text())
    assert summary["diversity"] == 12 and not summary["truncated"]
    assert "final diversity:       12" in capsys.readouterr().out


def test_run_even_n_is_usage_error(capsys):
    assert main(["run", "--n", "4", "--init", "almost-balanced"]) == EXIT_USAGE
    assert "n must be odd" in capsys.readouterr().err


def test_run_truncated(tmp_path):
    assert main(["run", "--n", "63", "--max-iters", "5", "--out", str(tmp_path)]) == EXIT_TRUNCATED


def test_run_random_init_even_n(tmp_path):
    assert main(["run", "--n", "8", "--init", "random", "--trace", str(tmp_path / "t.jsonl"),
                 "--out", str(tmp_path)]) == EXIT_OK


def test_run_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        main(["run", "--n", "31", "--seed", "7", "--out", str(tmp_path / d),
              "--trace", str(tmp_path / d / "t.jsonl")])
    for f in ("run_n31_seed7_last-stage.json", "t.jsonl"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GSEMOD_OUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--n", "5", "--seed", "2"]) == EXIT_OK
    assert (tmp_path / "env" / "run_n5_seed2_last-stage.json").exists()


@pytest.mark.parametrize("argv", [
    ["scale", "--n", "15"],
    ["scale", "--n", "15,30"],
    ["scale", "--n", "a,b"],
    ["verify", "--n", "15"],
    ["verify", "--n", "8"],
    ["verify", "--n", "3"],
    ["run"],
    ["run", "--n", "0"],
    ["run", "--n", "5", "--seed", "-1"],
    ["bogus"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == EXIT_USAGE


def test_scale_writes_files(tmp_path, capsys):
    assert main(["scale", "--n", "7,11", "--trials", "5", "--seed", "1", "--jobs", "1",
                 "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "slope" in out
    lines = (tmp_path / "results.csv").read_text().splitlines()
    assert len(lines) == 1 + 10
    assert (tmp_path / "fit.json").exists() and (tmp_path / "plot_data.csv").exists()


def test_scale_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_list": [5, 7], "trials": 3, "seed": 4,
                               "out_dir": str(tmp_path / "o")}))
    assert main(["scale", "--config", str(cfg), "--jobs", "1"]) == EXIT_OK
    assert len((tmp_path / "o" / "results.csv").read_text().splitlines()) == 7


def test_scale_excess_truncation(tmp_path, capsys):
    code = main(["scale", "--n", "31,33", "--trials", "4", "--max-iters", "10",
                 "--jobs", "1", "--out", str(tmp_path)])
    assert code == EXIT_EXCESS_TRUNCATION
    assert "warning" in capsys.readouterr().err


def test_verify(tmp_path, capsys):
    assert main(["verify", "--n", "7", "--samples", "10", "--seed", "1",
                 "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "I01" in out and "J10" in out
    lines = (tmp_path / "verify_n7_seed1.jsonl").read_text().splitlines()
    assert len(lines) == 10


def test_phases(tmp_path, capsys):
    t = tmp_path / "t.jsonl"
    main(["run", "--n", "15", "--seed", "3", "--trace", str(t), "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["phases", str(t)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "final phase ended optimal: true" in out
    assert "state 3:" in out


def test_phases_bad_input(tmp_path):
    empty = tmp_path / "e.jsonl"
    empty.write_text("")
    assert main(["phases", str(empty)]) == EXIT_DATA
    bad = tmp_path / "b.jsonl"
    bad.write_text("{nope\n")
    assert main(["phases", str(bad)]) == EXIT_DATA
    assert main(["phases", str(tmp_path / "missing.jsonl")]) == EXIT_DATA


def test_help_documents_exit_codes():
    out = subprocess.run([sys.executable, "-m", "gsemod", "run", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for code in ("0", "2", "3", "64", "65"):
        assert f"  {code} " in out
