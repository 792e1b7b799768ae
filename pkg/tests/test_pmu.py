import numpy as np
import pytest

from planewave.errors import IngestionError
from planewave.modal import TimeSeries
from planewave.pmu import ResampleWarning, ingest_pmu_csv, write_series_csv


def write(path, t, cols):
    header = "t," + ",".join(cols)
    rows = np.column_stack([t] + list(cols.values()))
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.9f")
    return path


def signal(t):
    return 60 + 0.02 * np.sin(2 * np.pi * 0.7 * t)


def test_uniform_record_keeps_dt(tmp_path):
    t = 0.0333 * np.arange(300)
    rec = ingest_pmu_csv(write(tmp_path / "a.csv", t, {"f": signal(t)}))
    assert len(rec) == 1 and not rec.resampled and rec.gaps == ()
    assert rec.dt == pytest.approx(0.0333, abs=1e-12)
    np.testing.assert_allclose(rec["f"].samples, signal(t), atol=1e-9)


def test_jitter_resampled_with_bound(tmp_path):
    rng = np.random.default_rng(3)
    t = 0.0333 * np.arange(300) + rng.uniform(-1e-3, 1e-3, 300)
    t[0] = 0.0
    with pytest.warns(ResampleWarning, match="resampled"):
        rec = ingest_pmu_csv(write(tmp_path / "j.csv", t, {"f": signal(t)}))
    assert rec.resampled and rec.max_jitter <= 2e-3
    s = rec["f"]
    err = np.abs(s.samples - signal(s.t)).max()
    assert err <= rec.interpolation_bound
    assert rec.interpolation_bound < 1e-3


def test_gap_listed(tmp_path):
    t = 0.02 * np.arange(200)
    t = np.concatenate([t[:100], t[150:]])  # one second missing
    with pytest.warns(ResampleWarning, match="gaps"):
        rec = ingest_pmu_csv(write(tmp_path / "g.csv", t, {"f": signal(t)}))
    assert len(rec.gaps) == 1
    a, b = rec.gaps[0]
    assert (a, b) == (pytest.approx(1.98), pytest.approx(3.0))


def test_non_monotone_rejected(tmp_path):
    t = 0.02 * np.arange(50)
    t[20] = t[18]
    with pytest.raises(IngestionError, match="increasing"):
        ingest_pmu_csv(write(tmp_path / "n.csv", t, {"f": signal(t)}))


def test_column_map_and_errors(tmp_path):
    t = 0.02 * np.arange(50)
    path = write(tmp_path / "m.csv", t, {"f1": signal(t), "f2": signal(t) + 1})
    rec = ingest_pmu_csv(path, {"f2": "remote"})
    assert [s.label for s in rec] == ["remote"]
    with pytest.raises(IngestionError, match="missing"):
        ingest_pmu_csv(path, {"f9": "x"})
    with pytest.raises(IngestionError, match="time column"):
        ingest_pmu_csv(path, time_column="time")
    bad = tmp_path / "bad.csv"
    bad.write_text("t,f\n0,1\n0.1,abc\n0.2,3\n")
    with pytest.raises(IngestionError, match="non-numeric"):
        ingest_pmu_csv(bad)


def test_write_read_round_trip(tmp_path):
    s = TimeSeries(0.01, np.sin(np.arange(100) * 0.1), "x")
    rec = ingest_pmu_csv(write_series_csv(tmp_path / "w.csv", [s]))
    np.testing.assert_allclose(rec["x"].samples, s.samples, rtol=1e-11)
