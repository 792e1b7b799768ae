import json
from dataclasses import replace

import numpy as np
import pytest

from planewave.casefile import write_case
from planewave.cli import EXIT_INVALID, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main
from planewave.modal import TimeSeries
from planewave.pmu import write_series_csv


def test_simulate_writes_bundle(tmp_path, capsys):
    out = tmp_path / "sim"
    code = main(["--out", str(out), "simulate", "wscc9", "--dp", "0.09", "--horizon", "0.5"])
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["rocof_hz_s"] > 0
    assert (out / "trajectory_voltage.csv").exists() and (out / "frequency.svg").exists()
    assert "rocof_hz_s" in capsys.readouterr().out


def test_env_output_directory(tmp_path, monkeypatch):
    monkeypatch.setenv("PLANEWAVE_OUT", str(tmp_path / "env"))
    assert main(["simulate", "wscc9", "--horizon", "0.1"]) == EXIT_OK
    assert (tmp_path / "env" / "manifest.json").exists()


def test_momentum_report(capsys, kappa):
    assert main(["momentum", "wscc9", "--calibrate"]) == EXIT_OK
    out = dict(line.split("\t")[:2] for line in capsys.readouterr().out.splitlines())
    assert float(out["kappa"]) == pytest.approx(kappa, rel=1e-5)
    assert 0 < float(out["system_line_share"]) < 1


def test_sweep_share(tmp_path):
    out = tmp_path / "share"
    assert main(["--out", str(out), "sweep", "share", "wscc9", "--values", "6,3,1"]) == EXIT_OK
    assert (out / "share.svg").read_text().count('<circle data-series="analytic"') == 3


def test_prony_and_migrate(tmp_path, capsys):
    t = np.arange(0, 10, 0.01)
    a = TimeSeries(0.01, np.exp(-0.3 * t) * np.cos(2 * np.pi * 0.8 * t), "f")
    b = TimeSeries(0.01, np.exp(-0.5 * t) * np.cos(2 * np.pi * 0.9 * t), "f")
    pa, pb = write_series_csv(tmp_path / "a.csv", [a]), write_series_csv(tmp_path / "b.csv", [b])
    assert main(["prony", str(pa), "--order", "2", "--detrend", "none"]) == EXIT_OK
    assert "0.8" in capsys.readouterr().out
    out = tmp_path / "mig"
    assert main(["--out", str(out), "migrate", str(pa), str(pb), "--order", "2", "--detrend", "none"]) == EXIT_OK
    assert "reduced_inertia_signature\tTrue" in capsys.readouterr().out
    assert (out / "migration.svg").read_text().count('class="migration"') == 1


def test_invalid_input_exit_code(capsys):
    assert main(["simulate", "wscc10"]) == EXIT_INVALID
    assert "wscc9" in capsys.readouterr().err
    assert main(["sweep", "sensitivity", "wscc9"]) == EXIT_INVALID


def test_missing_file_exit_code(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.toml")]) == EXIT_IO


def test_locked_output_exit_code(tmp_path):
    (tmp_path / ".planewave.lock").touch()
    assert main(["--out", str(tmp_path), "simulate", "wscc9", "--horizon", "0.1"]) == EXIT_IO


def test_numerical_failure_exit_code(tmp_path, wscc9, capsys):
    bad = replace(wscc9, generators=tuple(replace(g, T_v=1e-9) for g in wscc9.generators))
    path = write_case(bad, tmp_path / "bad.toml")
    code = main(["--out", str(tmp_path / "o"), "simulate", str(path), "--dt", "0.01", "--dp", "0.5",
                 "--bus", "5", "--event-time", "0.01", "--horizon", "1"])
    assert code == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err
