import json

import numpy as np
import pytest

from planewave.dynamics import Event, ModelConfig
from planewave.emit import (
    DEFAULT_OUTPUT,
    LOCK_NAME,
    OUTPUT_ENV,
    OutputLockedError,
    emit_results,
    input_digest,
    locked,
    output_dir,
)
from planewave.modal import PronyMode, eigen_migration
from planewave.svg import Figure, mode_figure, series_count, share_figure, time_series_figure


@pytest.fixture(scope="module")
def traj(prep9, kappa):
    return prep9.simulate(ModelConfig(kappa=kappa), [Event.load_step(0.1, 5, 0.09)], dt=1e-3, horizon=0.5)


def _bundle(directory, traj, **kw):
    return emit_results(directory, {"case": "wscc9", "dp": 0.09}, trajectory=traj,
                        summary={"peak": float(np.abs(traj.omega).max())}, **kw)


def test_reruns_are_byte_identical(tmp_path, traj):
    a = _bundle(tmp_path / "a", traj)
    b = _bundle(tmp_path / "b", traj)
    assert a.digest == b.digest
    names = sorted(p.name for p in a.files)
    assert names == sorted(p.name for p in b.files)
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_records_inputs_and_files(tmp_path, traj):
    bundle = _bundle(tmp_path, traj)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["input_digest"] == bundle.digest == input_digest({"dp": 0.09, "case": "wscc9"})
    assert "trajectory_frequency.csv" in manifest["files"]
    assert not (tmp_path / LOCK_NAME).exists()


def test_digest_depends_on_inputs():
    assert input_digest({"dp": 0.09}) != input_digest({"dp": 0.1})


def test_csv_headers_carry_units(tmp_path, traj):
    _bundle(tmp_path, traj)
    header = (tmp_path / "trajectory_frequency.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "t_s" and header[-1] == "f_coi_hz"
    assert all(h.startswith("f_hz[") for h in header[1:-1])


def test_lock_conflict(tmp_path):
    with locked(tmp_path):
        with pytest.raises(OutputLockedError):
            emit_results(tmp_path, {}, summary={"x": 1.0})
    emit_results(tmp_path, {}, summary={"x": 1.0})


def test_output_dir_resolution(monkeypatch, tmp_path):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert str(output_dir()) == DEFAULT_OUTPUT
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert output_dir() == tmp_path / "env"
    assert output_dir(tmp_path / "cli") == tmp_path / "cli"


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_results(tmp_path, {}, formats={"pdf"})


# ---------------------------------------------------------------- figures

class _Curve:
    def __init__(self, H):
        self.H = np.asarray(H, dtype=float)
        self.analytic = 1.0 / (1.0 + self.H)
        self.empirical = self.analytic * 1.1

    def model(self, h):
        return 1.0 / (1.0 + np.asarray(h))


def test_share_plot_has_one_marker_per_inertia():
    grid = [6, 4, 3, 2.15, 1, 0.5, 0.1]
    svg = share_figure(_Curve(grid)).render()
    assert series_count(svg, "analytic") == len(grid)
    assert series_count(svg, "empirical") == len(grid)


def test_mode_scatter_segments_match_pairs():
    send = [PronyMode(-0.3, 2 * np.pi * f, 1.0, 0.0) for f in (0.5, 1.2, 1.9)]
    recv = [PronyMode(-0.2, 2 * np.pi * f, 1.0, 0.0) for f in (0.55, 1.3)]
    rep = eigen_migration(send, recv)
    svg = mode_figure(rep).render()
    assert svg.count('class="migration"') == len(rep.pairs) == 2
    assert series_count(svg, "send") == 3 and series_count(svg, "receive") == 2


def test_ufls_overlay_only_when_configured():
    t = np.linspace(0, 1, 11)
    cols = {"bus1": 60 - t}
    assert 'class="overlay"' not in time_series_figure(t, cols, "f", "Hz").render()
    svg = time_series_figure(t, cols, "f", "Hz", ufls_hz=59.3).render()
    assert svg.count('class="overlay"') == 1 and "UFLS 59.3 Hz" in svg


def test_figure_render_is_deterministic():
    fig = Figure("t", "x", "y").add("a", [0, 1, 2], [1, 0, np.nan], "both")
    assert fig.render() == fig.render()
    assert series_count(fig.render(), "a") == 2  # non-finite points are skipped
