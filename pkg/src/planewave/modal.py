"""Least-squares Prony identification of damped modes, order selection,
damping ratios and eigenvalue migration between two measurement points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateSignalError, ValidationError

DETRENDS = ("mean", "linear", "none")


@dataclass(frozen=True)
class TimeSeries:
    dt: float
    samples: np.ndarray
    label: str = ""
    start_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if not self.dt > 0:
            raise ValidationError("time series dt must be positive")
        if self.samples.ndim != 1:
            raise ValidationError("time series samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError(f"series {self.label!r} contains non-finite samples")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def t(self) -> np.ndarray:
        return self.start_time + self.dt * np.arange(self.samples.size)

    def window(self, t0: float, t1: float) -> TimeSeries:
        """Samples with t0 <= t <= t1."""
        k0 = max(0, int(math.ceil((t0 - self.start_time) / self.dt - 1e-9)))
        k1 = min(self.samples.size, int(math.floor((t1 - self.start_time) / self.dt + 1e-9)) + 1)
        return TimeSeries(self.dt, self.samples[k0:k1], self.label, self.start_time + k0 * self.dt)


@dataclass(frozen=True)
class PronyMode:
    """One identified mode, reported once per conjugate pair (omega >= 0).

    Amplitude and phase refer to the first sample of the fitted record, so the
    mode contributes amplitude * exp(sigma t) * cos(omega t + phase).
    """

    sigma: float
    omega: float
    amplitude: float
    phase: float
    energy: float = 0.0

    @property
    def eigenvalue(self) -> complex:
        return complex(self.sigma, self.omega)

    @property
    def frequency_hz(self) -> float:
        return self.omega / (2 * math.pi)

    @property
    def zeta(self) -> float:
        return damping_ratio(self)


def damping_ratio(mode: PronyMode) -> float:
    mag = math.hypot(mode.sigma, mode.omega)
    if mag == 0:
        raise ValidationError("damping ratio is undefined for a zero eigenvalue")
    return -mode.sigma / mag


def _detrend(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "none":
        return x
    if kind == "mean":
        return x - x.mean()
    n = np.arange(x.size)
    slope, icpt = np.polyfit(n, x, 1)
    return x - (slope * n + icpt)


def prony_fit(series: TimeSeries, order: int, detrend: str = "mean",
              rank: int | None = None, rcond: float = 1e-12) -> list[PronyMode]:
    """Fit ``order`` complex exponentials by least-squares linear prediction.

    With mean removal a constant term is carried in both the prediction and the
    amplitude regressions, so the offset left by removing the sample mean of a
    decaying signal does not bias the poles.

    ``rank`` truncates the prediction matrix to its leading singular
    directions before solving (useful on noisy records fitted at an order well
    above the number of modes); the extra poles then carry little energy.
    """
    if detrend not in DETRENDS:
        raise ValidationError(f"detrend must be one of {DETRENDS}")
    if order < 1:
        raise ValidationError("Prony order must be at least 1")
    n = len(series)
    if n < 8 * order:
        raise ValidationError(f"order {order} needs at least {8 * order} samples, got {n}")
    x = _detrend(series.samples, detrend)
    offset = detrend != "none"
    scale = float(np.max(np.abs(x)))
    if scale == 0:
        raise DegenerateSignalError(f"series {series.label!r} is identically zero after detrending")
    x = x / scale

    rows = n - order
    cols = [x[order - i - 1: n - i - 1] for i in range(order)]
    if offset:
        cols.append(np.ones(rows))
    a_mat = np.column_stack(cols)
    sv = np.linalg.svd(a_mat, compute_uv=False)
    if rank is None and sv[-1] <= rcond * sv[0]:
        raise DegenerateSignalError(
            f"prediction matrix is rank deficient at order {order} (condition {sv[0] / max(sv[-1], 1e-300):.2e})"
        )
    if rank is None:
        coef = np.linalg.lstsq(a_mat, x[order:], rcond=None)[0]
    else:
        if not 1 <= rank <= a_mat.shape[1]:
            raise ValidationError(f"rank must lie in [1, {a_mat.shape[1]}]")
        u, sv, vt = np.linalg.svd(a_mat, full_matrices=False)
        coef = vt[:rank].T @ ((u[:, :rank].T @ x[order:]) / sv[:rank])
    poly = np.concatenate([[1.0], -coef[:order]])
    z = np.roots(poly)
    if np.any(z == 0):
        raise DegenerateSignalError("zero pole in the characteristic polynomial")

    k = np.arange(n)
    basis = z[None, :] ** k[:, None]
    if offset:
        basis = np.column_stack([basis, np.ones(n)])
    amp = np.linalg.lstsq(basis, x.astype(complex), rcond=None)[0][:order] * scale

    s = np.log(z.astype(complex)) / series.dt
    contrib = np.abs(amp[None, :] * z[None, :] ** k[:, None]) ** 2
    energy = contrib.sum(axis=0)

    modes = []
    used = np.zeros(order, dtype=bool)
    tol = 1e-8
    for i in np.argsort(-s.imag):
        if used[i]:
            continue
        used[i] = True
        sig, om = float(s[i].real), float(s[i].imag)
        if abs(om) <= tol * max(1.0, abs(s[i])) or abs(abs(om) - math.pi / series.dt) <= tol / series.dt:
            # real pole (dc or Nyquist)
            c = amp[i]
            val = c.real if abs(c.imag) <= 1e-9 * max(abs(c), 1e-300) else abs(c)
            modes.append((sig, abs(om), abs(val), 0.0 if val >= 0 else math.pi, energy[i]))
            continue
        # pair with the nearest conjugate
        cand = [j for j in range(order) if not used[j]]
        e = energy[i]
        if cand:
            j = min(cand, key=lambda j: abs(z[j] - np.conj(z[i])))
            used[j] = True
            e += energy[j]
        modes.append((sig, abs(om), 2 * abs(amp[i]), float(np.angle(amp[i])) * (1 if om > 0 else -1), e))
    total = sum(m[4] for m in modes) or 1.0
    out = [PronyMode(m[0], m[1], float(m[2]), m[3], float(m[4] / total)) for m in modes]
    out.sort(key=lambda m: -m.energy)
    return out


def reconstruct(modes: Sequence[PronyMode], n: int, dt: float) -> np.ndarray:
    """Real signal synthesized from reported modes (offset excluded)."""
    t = dt * np.arange(n)
    out = np.zeros(n)
    for m in modes:
        out += m.amplitude * np.exp(m.sigma * t) * np.cos(m.omega * t + m.phase)
    return out


@dataclass(frozen=True)
class OrderSelection:
    order: int
    captured: float
    dominant_mode: bool
    singular_values: np.ndarray = field(repr=False, default=None)


def select_order(series: TimeSeries, energy_threshold: float = 0.999,
                 max_rows: int = 400) -> OrderSelection:
    """Smallest order whose leading singular values of the data (Hankel)
    matrix hold at least ``energy_threshold`` of the squared-singular-value
    energy. The record is first-differenced so a constant offset does not
    occupy a slot."""
    if not 0 < energy_threshold < 1:
        raise ValidationError("energy threshold must lie in (0, 1)")
    x = np.diff(series.samples)
    if x.size < 8:
        raise ValidationError("series too short for order selection")
    rows = min(x.size // 2, max_rows)
    cols = x.size - rows + 1
    hankel = np.lib.stride_tricks.sliding_window_view(x, cols)[:rows]
    sv = np.linalg.svd(hankel, compute_uv=False)
    energy = sv**2
    total = energy.sum()
    if total == 0:
        raise DegenerateSignalError("series has no variation")
    cum = np.cumsum(energy) / total
    order = int(np.searchsorted(cum, energy_threshold - 1e-15) + 1)
    top_pair = float(energy[:2].sum() / total)
    return OrderSelection(order, float(cum[order - 1]), top_pair >= 0.5, sv)


@dataclass(frozen=True)
class ModePair:
    send: PronyMode
    recv: PronyMode

    @property
    def d_sigma(self) -> float:
        return self.recv.sigma - self.send.sigma

    @property
    def d_omega(self) -> float:
        return self.recv.omega - self.send.omega

    @property
    def d_magnitude(self) -> float:
        return abs(self.recv.eigenvalue) - abs(self.send.eigenvalue)

    @property
    def moves_outward(self) -> bool:
        return abs(self.recv.sigma) > abs(self.send.sigma) and abs(self.recv.omega) > abs(self.send.omega)


@dataclass(frozen=True)
class MigrationReport:
    pairs: tuple[ModePair, ...]
    unpaired_send: tuple[PronyMode, ...]
    unpaired_recv: tuple[PronyMode, ...]

    @property
    def reduced_inertia_signature(self) -> bool:
        """Every paired mode sits further out on both axes at the receiver."""
        return bool(self.pairs) and all(p.moves_outward for p in self.pairs)


def eigen_migration(modes_send: Sequence[PronyMode], modes_recv: Sequence[PronyMode]) -> MigrationReport:
    """Greedy one-to-one pairing by nearest omega, ties broken by nearest sigma."""
    if not modes_send or not modes_recv:
        raise ValidationError("eigen migration needs modes at both ends")
    cand = sorted(
        (abs(a.omega - b.omega), abs(a.sigma - b.sigma), i, j)
        for i, a in enumerate(modes_send)
        for j, b in enumerate(modes_recv)
    )
    used_a, used_b, pairs = set(), set(), []
    for _, _, i, j in cand:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append(ModePair(modes_send[i], modes_recv[j]))
    pairs.sort(key=lambda p: p.send.omega)
    return MigrationReport(
        tuple(pairs),
        tuple(m for i, m in enumerate(modes_send) if i not in used_a),
        tuple(m for j, m in enumerate(modes_recv) if j not in used_b),
    )
