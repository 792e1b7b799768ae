"""Result emission: trajectory CSVs, a JSON metrics summary, SVG figures and
a run manifest whose digest depends only on the inputs."""

from __future__ import annotations

import hashlib
import json
import math
import os
import platform
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from . import __version__
from .dynamics import Trajectory
from .errors import PlaneWaveError
from .svg import Figure, time_series_figure

OUTPUT_ENV = "PLANEWAVE_OUT"
DEFAULT_OUTPUT = "planewave_out"
LOCK_NAME = ".planewave.lock"
FORMATS = frozenset({"csv", "summary", "svg"})


class OutputLockedError(PlaneWaveError, OSError):
    """Another run holds the output directory."""


def output_dir(explicit: str | os.PathLike | None = None) -> Path:
    """Explicit path, else $PLANEWAVE_OUT, else ./planewave_out."""
    return Path(explicit or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def fmt(x: float) -> str:
    return f"{x:.12g}"


@contextmanager
def locked(directory: Path):
    """Exclusive use of ``directory`` for the duration of the block."""
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as exc:
        raise OutputLockedError(f"{directory} is in use by another run ({lock} exists)") from exc
    try:
        os.close(fd)
        yield directory
    finally:
        lock.unlink(missing_ok=True)


def write_table(path: Path, header: list[str], columns: Iterable[np.ndarray]) -> Path:
    cols = [np.asarray(c, dtype=float) for c in columns]
    if len(cols) != len(header):
        raise ValueError("header and column count differ")
    n = len(cols[0]) if cols else 0
    lines = [",".join(header)]
    for k in range(n):
        lines.append(",".join(fmt(c[k]) for c in cols))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _safe(label: str) -> str:
    return label.replace(",", ";").replace(" ", "_")


def trajectory_tables(traj: Trajectory) -> dict[str, tuple[list[str], list[np.ndarray]]]:
    """One table per quantity group; every header carries its unit."""
    labels = [_safe(s) for s in traj.node_labels]
    t = traj.t
    f = traj.frequency_hz()
    groups = {
        "angle": ("delta_rad", traj.delta),
        "frequency": ("f_hz", f),
        "voltage": ("v_pu", traj.v),
        "line_momentum": ("m_line_pu", traj.m_line),
    }
    out = {}
    for name, (unit, data) in groups.items():
        header = ["t_s"] + [f"{unit}[{lab}]" for lab in labels]
        out[name] = (header, [t] + [data[:, k] for k in range(data.shape[1])])
    out["frequency"][0].append("f_coi_hz")
    out["frequency"][1].append(traj.mean_frequency())
    if traj.branch_flow.size:
        n_br = traj.branch_flow.shape[1]
        header = ["t_s"] + [f"{q}[{k}]" for k in range(n_br) for q in ("p_pu", "q_pu")]
        cols = [t]
        for k in range(n_br):
            cols += [traj.branch_flow[:, k].real, traj.branch_flow[:, k].imag]
        out["branch_flow"] = (header, cols)
    return out


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return float(fmt(v)) if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def input_digest(inputs: Mapping[str, Any]) -> str:
    """SHA-256 over the canonical JSON of the inputs."""
    text = json.dumps(_jsonable(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ResultBundle:
    directory: Path
    files: tuple[Path, ...]
    digest: str


def emit_results(directory: str | os.PathLike | None, inputs: Mapping[str, Any], *,
                 trajectory: Trajectory | None = None, summary: Mapping[str, Any] | None = None,
                 figures: Mapping[str, Figure] | None = None, tables: Mapping[str, tuple] | None = None,
                 formats: Iterable[str] = FORMATS, ufls_hz: float | None = None) -> ResultBundle:
    """Write the requested formats into ``directory`` under an exclusive lock."""
    formats = set(formats)
    unknown = formats - FORMATS
    if unknown:
        raise ValueError(f"unknown formats {sorted(unknown)}")
    directory = output_dir(directory)
    digest = input_digest(inputs)
    written: list[Path] = []
    with locked(directory):
        if "csv" in formats:
            all_tables = dict(tables or {})
            if trajectory is not None:
                all_tables.update({f"trajectory_{k}": v for k, v in trajectory_tables(trajectory).items()})
            for name, (header, cols) in sorted(all_tables.items()):
                written.append(write_table(directory / f"{name}.csv", list(header), cols))
        if "summary" in formats and summary is not None:
            p = directory / "summary.json"
            p.write_text(dumps(summary), encoding="utf-8")
            written.append(p)
        if "svg" in formats:
            figs = dict(figures or {})
            if trajectory is not None:
                figs.setdefault("frequency", time_series_figure(
                    trajectory.t, {lab: trajectory.frequency_hz()[:, k] for k, lab in enumerate(trajectory.node_labels)},
                    "Node frequency", "f (Hz)", ufls_hz))
                figs.setdefault("voltage", time_series_figure(
                    trajectory.t, {lab: trajectory.v[:, k] for k, lab in enumerate(trajectory.node_labels)},
                    "Node voltage", "V (pu)"))
            for name, fig in sorted(figs.items()):
                p = directory / f"{name}.svg"
                p.write_text(fig.render(), encoding="utf-8")
                written.append(p)
        manifest = {
            "input_digest": digest,
            "inputs": inputs,
            "files": sorted(p.name for p in written),
            "versions": {"planewave": __version__, "numpy": np.__version__,
                         "python": ".".join(platform.python_version_tuple()[:2])},
            "determinism": "fixed-step RK4 without random numbers; identical inputs give identical outputs",
        }
        p = directory / "manifest.json"
        p.write_text(dumps(manifest), encoding="utf-8")
        written.append(p)
    return ResultBundle(directory, tuple(written), digest)
