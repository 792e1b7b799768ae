"""Static SVG figures written directly as text: time series, ROCOF against
inertia, momentum-share curves and complex-plane mode scatter with migration
segments. Output depends only on the data, so identical inputs give
byte-identical files."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .errors import ValidationError

WIDTH, HEIGHT = 640, 400
MARGIN = (60, 20, 30, 50)  # left, right, top, bottom
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick(x: float) -> str:
    return f"{x:.4g}"


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    style: str = "line"  # line | points | both


@dataclass
class Figure:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)
    hlines: list[tuple[float, str]] = field(default_factory=list)
    segments: list[tuple[float, float, float, float]] = field(default_factory=list)

    def add(self, label: str, x, y, style: str = "line") -> Figure:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise ValidationError(f"series {label!r}: x and y differ in length")
        self.series.append(Series(label, x, y, style))
        return self

    def _bounds(self) -> tuple[float, float, float, float]:
        xs = [s.x for s in self.series] + [np.array([a, c]) for a, _, c, _ in self.segments]
        ys = [s.y for s in self.series] + [np.array([b, d]) for _, b, _, d in self.segments]
        ys += [np.array([v]) for v, _ in self.hlines]
        x = np.concatenate(xs) if xs else np.zeros(1)
        y = np.concatenate(ys) if ys else np.zeros(1)
        x, y = x[np.isfinite(x)], y[np.isfinite(y)]
        x0, x1 = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
        y0, y1 = (float(y.min()), float(y.max())) if y.size else (0.0, 1.0)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            pad = abs(y0) * 0.05 or 0.5
            y0, y1 = y0 - pad, y1 + pad
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        left, right, top, bottom = MARGIN
        pw, ph = WIDTH - left - right, HEIGHT - top - bottom
        x0, x1, y0, y1 = self._bounds()

        def px(x):
            return left + (x - x0) / (x1 - x0) * pw

        def py(y):
            return top + (y1 - y) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<title>{escape(self.title)}</title>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
            f'<text x="{WIDTH / 2:.1f}" y="{top - 10}" text-anchor="middle" font-size="13">{escape(self.title)}</text>',
            f'<text class="xlabel" x="{left + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(self.xlabel)}</text>',
            f'<text class="ylabel" x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(self.ylabel)}</text>',
        ]
        for k in range(5):
            xv = x0 + (x1 - x0) * k / 4
            yv = y0 + (y1 - y0) * k / 4
            out.append(f'<text x="{_fmt(px(xv))}" y="{top + ph + 15}" text-anchor="middle">{_tick(xv)}</text>')
            out.append(f'<text x="{left - 5}" y="{_fmt(py(yv) + 4)}" text-anchor="end">{_tick(yv)}</text>')
        for value, label in self.hlines:
            out.append(f'<line class="overlay" x1="{left}" x2="{left + pw}" y1="{_fmt(py(value))}" '
                       f'y2="{_fmt(py(value))}" stroke="#000" stroke-dasharray="6 4"/>')
            out.append(f'<text x="{left + pw - 4}" y="{_fmt(py(value) - 4)}" text-anchor="end">{escape(label)}</text>')
        for a, b, c, d in self.segments:
            out.append(f'<line class="migration" x1="{_fmt(px(a))}" y1="{_fmt(py(b))}" '
                       f'x2="{_fmt(px(c))}" y2="{_fmt(py(d))}" stroke="#555"/>')
        for i, s in enumerate(self.series):
            color = PALETTE[i % len(PALETTE)]
            ok = np.isfinite(s.x) & np.isfinite(s.y)
            cls = escape(s.label, {'"': "&quot;"})
            if s.style in ("line", "both") and ok.sum() > 1:
                pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(s.x[ok], s.y[ok]))
                out.append(f'<polyline data-series="{cls}" fill="none" stroke="{color}" points="{pts}"/>')
            if s.style in ("points", "both"):
                for a, b in zip(s.x[ok], s.y[ok]):
                    out.append(f'<circle data-series="{cls}" cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="3" fill="{color}"/>')
            ly = top + 14 + 14 * i
            out.append(f'<text x="{left + 8}" y="{ly}" fill="{color}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def time_series_figure(t, columns: dict[str, np.ndarray], title: str, ylabel: str,
                       ufls_hz: float | None = None) -> Figure:
    fig = Figure(title, "time (s)", ylabel)
    for label, y in columns.items():
        fig.add(label, t, y)
    if ufls_hz is not None:
        fig.hlines.append((float(ufls_hz), f"UFLS {ufls_hz:g} Hz"))
    return fig


def rocof_figure(curve) -> Figure:
    """Both models' ROCOF against H, with the plane-wave hyperbolic fit."""
    fig = Figure("ROCOF against homogeneous inertia", "H (s)", "ROCOF (Hz/s)")
    fig.add("plane wave", curve.H, curve.plane_wave, "points")
    fig.add("classical", curve.H, curve.classical, "points")
    h = np.linspace(curve.H.min(), curve.H.max(), 100)
    c1, c2 = curve.pw_fit
    fig.add(f"fit c1/(H+c2), R2={curve.pw_r2:.4f}", h, c1 / (h + c2))
    return fig


def share_figure(curve) -> Figure:
    """Analytic and empirical shares, one marker per swept H, plus the fit."""
    fig = Figure("Line share of system momentum", "H (s)", "share")
    fig.add("analytic", curve.H, curve.analytic, "points")
    fig.add("empirical", curve.H, curve.empirical, "points")
    h = np.linspace(max(curve.H.min(), 1e-3), curve.H.max(), 100)
    fig.add("constant line momentum fit", h, curve.model(h))
    return fig


def mode_figure(report, title: str = "Mode migration") -> Figure:
    """Send and receive eigenvalues in the complex plane; each pair joined
    by a segment."""
    fig = Figure(title, "sigma (1/s)", "omega (rad/s)")
    send = [p.send for p in report.pairs] + list(report.unpaired_send)
    recv = [p.recv for p in report.pairs] + list(report.unpaired_recv)
    fig.add("send", [m.sigma for m in send], [m.omega for m in send], "points")
    fig.add("receive", [m.sigma for m in recv], [m.omega for m in recv], "points")
    fig.segments = [(p.send.sigma, p.send.omega, p.recv.sigma, p.recv.omega) for p in report.pairs]
    return fig


def sensitivity_figure(report) -> Figure:
    fig = Figure(f"Sensitivity to {report.parameter}", report.parameter, "metric")
    v = np.array([r.value for r in report.rows])
    fig.add("peak |df| (Hz)", v, [r.peak_df for r in report.rows], "both")
    fig.add("peak |dV| (pu)", v, [r.peak_dv for r in report.rows], "both")
    fig.add("zeta", v, [math.nan if r.zeta is None else r.zeta for r in report.rows], "both")
    return fig


def series_count(svg_text: str, label: str, element: str = "circle") -> int:
    """Number of ``element`` markers belonging to one series."""
    return svg_text.count(f'<{element} data-series="{escape(label)}"')


def write_figure(fig: Figure, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(fig.render())


__all__ = [
    "Figure", "Series", "time_series_figure", "rocof_figure", "share_figure", "mode_figure",
    "sensitivity_figure", "series_count", "write_figure",
]
