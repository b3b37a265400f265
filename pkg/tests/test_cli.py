from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from geoquad.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, main
from geoquad.sim import COLUMNS


def test_run_to_stdout(capsys):
    assert main(["run", "--config", "hover", "--set", "sim.t_final=0.01"]) == EXIT_OK
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == 11


def test_run_to_file_prints_summary(tmp_path, capsys):
    dest = tmp_path / "hover.csv"
    assert main(["run", "--config", "hover", "--set", "sim.t_final=0.05", "--out", str(dest)]) == EXIT_OK
    assert dest.read_text().startswith("t,x1")
    assert "rms=" in capsys.readouterr().err


def test_run_from_config_file(tmp_path, capsys):
    path = tmp_path / "s.ini"
    assert main(["preset", "step90", "--set", "sim.t_final=0.02", "--out", str(path)]) == EXIT_OK
    assert main(["run", "--config", str(path)]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 21


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--config", "nope"],
        ["run", "--config", "hover", "--set", "gains.k_R=abc"],
        ["run", "--config", "hover", "--set", "broken"],
        ["sweep", "--config", "hover"],
        ["sweep", "--config", "hover", "--grid", "gains.k_R"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_blowup_exits_3(capsys):
    assert main(["run", "--config", "step90", "--set", "sim.dt=0.05"]) == EXIT_BLOWUP
    assert "blow-up" in capsys.readouterr().err


def test_compare_json(capsys):
    assert main(["compare", "--config", "step90", "--set", "sim.t_final=0.3"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert {"proposed", "benchmark", "faster_settling", "lower_error"} <= set(report)


def test_compare_with_effort_matching(capsys):
    argv = ["compare", "--config", "step90", "--set", "sim.t_final=0.3", "--match-effort"]
    assert main(argv) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["proposed"]["rms"] == pytest.approx(report["benchmark"]["rms"], rel=2e-3)
    assert len(report["benchmark_gains_after_matching"]["k_R"]) == 3


def test_basin_json(capsys):
    assert main(["basin", "--config", "hover"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report[0]["position"]["inside"] is True


def test_sweep_csv(capsys):
    argv = ["sweep", "--config", "hover", "--grid", "gains.k_R=4000,5625", "--grid", "gains.a=0.5,0.6"]
    assert main(argv) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 4
    assert rows[0]["gains.k_R"] == "4000"
    assert float(rows[0]["theta_max"]) > 0.0


def test_sweep_in_parallel_matches_serial(capsys):
    argv = ["sweep", "--config", "hover", "--grid", "gains.k_x=800,900,1000"]
    main(argv)
    serial = capsys.readouterr().out
    main(argv + ["--workers", "2"])
    assert capsys.readouterr().out == serial


def test_preset_output(capsys):
    assert main(["preset", "flip_full"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "[sim]" in text and "[gains]" in text


def test_console_script_entry():
    res = subprocess.run(
        [sys.executable, "-m", "geoquad.cli", "preset", "hover"], capture_output=True, text=True, check=False
    )
    assert res.returncode == 0
    assert "name = hover" in res.stdout
