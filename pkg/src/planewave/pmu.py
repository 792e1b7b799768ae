"""Ingestion of PMU-style CSV records into uniformly sampled series."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import IngestionError
from .modal import TimeSeries

GAP_FACTOR = 5.0
# relative spacing deviation treated as exact (timestamps printed with finite digits)
UNIFORM_RTOL = 1e-6


class ResampleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PmuRecord:
    series: tuple[TimeSeries, ...]
    dt: float
    resampled: bool
    max_jitter: float  # s, largest deviation of a raw timestamp from the uniform grid
    interpolation_bound: float  # largest bound over the series, in signal units
    gaps: tuple[tuple[float, float], ...]  # (start, end) of spacings longer than 5 dt

    def __iter__(self):
        return iter(self.series)

    def __len__(self) -> int:
        return len(self.series)

    def __getitem__(self, label: str | int) -> TimeSeries:
        if isinstance(label, int):
            return self.series[label]
        for s in self.series:
            if s.label == label:
                return s
        raise KeyError(label)


def _read(path: Path) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise IngestionError(f"{path}: not a text CSV ({exc})") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 3:
        raise IngestionError(f"{path}: need a header and at least two data rows")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise IngestionError(f"{path}: non-numeric data ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise IngestionError(f"{path}: rows do not match the {len(header)} header columns")
    return header, data


def _interp_bound(t: np.ndarray, x: np.ndarray, dt: float, jitter: float) -> float:
    """Bound on linear-interpolation error: curvature term h^2/8 max|x''|
    plus the timestamp-jitter term jitter * max|x'|."""
    h = np.diff(t)
    slope = np.diff(x) / h
    curv = np.abs(np.diff(slope)) / (0.5 * (h[1:] + h[:-1])) if slope.size > 1 else np.zeros(1)
    return float(dt**2 / 8 * curv.max() + jitter * np.abs(slope).max())


def ingest_pmu_csv(path: str | Path, column_map: Mapping[str, str] | None = None,
                   time_column: str = "t") -> PmuRecord:
    """Read a CSV with a timestamp column (seconds) into uniform-dt series.

    ``column_map`` maps CSV column names to series labels; by default every
    non-time column is taken under its own name. Non-uniform timestamps are
    resampled by linear interpolation onto a grid whose spacing is
    fitted to the timestamps.
    """
    path = Path(path)
    header, data = _read(path)
    if time_column not in header:
        raise IngestionError(f"{path}: no time column {time_column!r} (columns: {', '.join(header)})")
    ti = header.index(time_column)
    if column_map is None:
        column_map = {h: h for h in header if h != time_column}
    missing = [c for c in column_map if c not in header]
    if missing:
        raise IngestionError(f"{path}: missing columns {missing}")
    if not column_map:
        raise IngestionError(f"{path}: no data columns")
    t = data[:, ti]
    steps = np.diff(t)
    if np.any(steps <= 0):
        k = int(np.flatnonzero(steps <= 0)[0])
        raise IngestionError(f"{path}: timestamps not strictly increasing at row {k + 2} (t = {t[k + 1]})")
    dt = float(np.median(steps))
    # refine dt by a line fit of timestamps against their nominal sample index
    idx = np.round((t - t[0]) / dt)
    if idx[-1] > 0:
        dt = float(np.polyfit(idx, t, 1)[0])
    gaps = tuple((float(t[k]), float(t[k + 1])) for k in np.flatnonzero(steps > GAP_FACTOR * dt))
    uniform = bool(np.all(np.abs(steps - dt) <= UNIFORM_RTOL * dt))
    if uniform:
        grid, jitter = t, 0.0
    else:
        n = int(np.floor((t[-1] - t[0]) / dt + 1e-9)) + 1
        grid = t[0] + dt * np.arange(n)
        ideal = t[0] + dt * idx
        jitter = float(np.abs(t - ideal).max())
        warnings.warn(f"{path}: non-uniform timestamps resampled to dt = {dt:.6g} s "
                      f"(max jitter {jitter:.3g} s)", ResampleWarning, stacklevel=2)
    if gaps:
        listed = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in gaps)
        warnings.warn(f"{path}: gaps longer than {GAP_FACTOR:g} dt at {listed}", ResampleWarning, stacklevel=2)
    series, bound = [], 0.0
    for col, label in column_map.items():
        x = data[:, header.index(col)]
        if not np.all(np.isfinite(x)):
            raise IngestionError(f"{path}: column {col!r} has non-finite values")
        if not uniform:
            bound = max(bound, _interp_bound(t, x, dt, jitter))
            x = np.interp(grid, t, x)
        series.append(TimeSeries(dt, x, label, float(grid[0])))
    return PmuRecord(tuple(series), dt, not uniform, jitter, bound, gaps)


def write_series_csv(path: str | Path, series: list[TimeSeries], time_column: str = "t") -> Path:
    """Write series sharing one time base; 12 significant digits."""
    path = Path(path)
    if not series:
        raise IngestionError("nothing to write")
    n = len(series[0])
    if any(len(s) != n or s.dt != series[0].dt for s in series):
        raise IngestionError("series must share length and dt")
    t = series[0].t
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([time_column] + [s.label for s in series])
        for k in range(n):
            w.writerow([f"{t[k]:.12g}"] + [f"{s.samples[k]:.12g}" for s in series])
    return path
