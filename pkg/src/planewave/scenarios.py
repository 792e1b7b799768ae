"""Benchmark cases and the experiment harness: ROCOF against inertia,
momentum-share curves, technology-mix fault studies, parameter sensitivity
and the two-node decomposition of the generator dynamics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .case import CaseDefinition
from .casefile import parse_case_text
from .dynamics import (
    DampingSpec,
    Event,
    Generator,
    ModelConfig,
    SystemState,
    Trajectory,
    apply_event,
    electrical_power,
    equilibrium,
    integrate,
)
from .electromagnetics import calibrate_momentum_constant, generator_momentum
from .errors import MeasurementError, NumericalError, UnknownCaseError, ValidationError
from .modal import TimeSeries, damping_ratio, prony_fit
from .network import DynamicNetwork, PowerFlowSolution, PowerNetwork, fold_loads_and_augment, solve_power_flow

BENCHMARKS = ("wscc9", "ne39")
REFERENCE_H = 6.0
REFERENCE_SHARE = 0.102
DEFAULT_LOAD_BUS = {"wscc9": 5, "ne39": 16}
# branch between generators 1 and 2 of the 9-bus system
TECH_MIX_FAULT_BRANCH = "5-7"
ROCOF_SEARCH = 0.5


def load_benchmark(name: str) -> CaseDefinition:
    """Embedded benchmark case; the power flow is solved once as a check."""
    if name not in BENCHMARKS:
        raise UnknownCaseError(f"unknown benchmark {name!r}; available: {', '.join(BENCHMARKS)}")
    text = resources.files("planewave").joinpath("data", f"{name}.toml").read_text(encoding="utf-8")
    case = parse_case_text(text, f"{name}.toml")
    solve_power_flow(case.network)
    return case


# ---------------------------------------------------------------- preparation

@dataclass(frozen=True)
class PreparedSystem:
    """Everything needed to integrate from the pre-disturbance equilibrium."""

    network: PowerNetwork
    solution: PowerFlowSolution
    dyn_net: DynamicNetwork
    generators: tuple[Generator, ...]
    initial: SystemState

    def simulate(self, config: ModelConfig, events: Sequence[Event] = (), dt: float = 1e-3,
                 horizon: float = 10.0, **kwargs) -> Trajectory:
        return integrate(config, self.dyn_net, self.generators, self.initial, events, dt, horizon, **kwargs)

    @property
    def generator_momentum(self) -> float:
        return float(sum(g.momentum(self.network.base_mva) for g in self.generators))


def prepare(network: PowerNetwork, generators: Sequence[Generator], reduce: bool = True) -> PreparedSystem:
    solution = solve_power_flow(network)
    dyn = fold_loads_and_augment(network, solution, generators, reduce=reduce)
    gens, state = equilibrium(dyn, generators, solution)
    return PreparedSystem(network, solution, dyn, gens, state)


def prepare_case(case: CaseDefinition, generators: Sequence[Generator] | None = None,
                 network: PowerNetwork | None = None) -> PreparedSystem:
    return prepare(network or case.network, case.generators if generators is None else generators,
                   reduce=case.options.reduce)


def with_sg_inertia(generators: Sequence[Generator], H: float) -> tuple[Generator, ...]:
    """Homogeneous inertia constant on every SG; inverters keep theirs."""
    return tuple(replace(g, H=H) if g.tech == "SG" else g for g in generators)


def reference_kappa(case: CaseDefinition | None = None, H_ref: float = REFERENCE_H,
                    target_share: float = REFERENCE_SHARE) -> float:
    """kappa calibrated on the 9-bus system (or ``case``) at homogeneous H_ref."""
    case = case or load_benchmark("wscc9")
    sol = solve_power_flow(case.network)
    return calibrate_momentum_constant(case.network, sol, case.generators, H_ref, target_share)


# ---------------------------------------------------------------- GFM stand-ins

@dataclass(frozen=True)
class GFMSpec:
    """Grid-forming inverter parameters; impedances on the inverter rating."""

    tech: str = "GFM_droop"
    droop: float = 0.05
    delay: float = 0.005
    T_v: float = 0.02
    z_filter: complex = 0.15j
    H: float = 0.0
    i_limit: float = math.inf

    def build(self, like: Generator, base_mva: float) -> Generator:
        z = complex(self.z_filter) * base_mva / like.rating
        if self.tech == "GFM_VSM":
            damping = DampingSpec("constant_D", D=(like.rating / base_mva) / (self.droop * 2 * math.pi * 60.0))
        else:
            damping = DampingSpec("droop_with_delay", droop=self.droop, delay=self.delay)
        return replace(like, tech=self.tech, H=self.H, damping=damping, T_v=self.T_v, Z_m=z,
                       source_impedance=z, i_limit=self.i_limit * like.rating / base_mva,
                       P_set=None, E_set=None)


def replace_with_gfm(generators: Sequence[Generator], indices: Sequence[int], base_mva: float,
                     spec: GFMSpec = GFMSpec()) -> tuple[Generator, ...]:
    idx = set(indices)
    return tuple(spec.build(g, base_mva) if k in idx else g for k, g in enumerate(generators))


def all_gfm(case: CaseDefinition, spec: GFMSpec = GFMSpec()) -> tuple[Generator, ...]:
    return replace_with_gfm(case.generators, range(len(case.generators)), case.network.base_mva, spec)


# ---------------------------------------------------------------- ROCOF

@dataclass(frozen=True)
class RocofMeasurement:
    value: float  # Hz/s, absolute
    value_pu: float  # per-unit/s
    window: float
    event_time: float
    window_start: float
    method: str = "max_sliding_slope"


def _sliding_slopes(t: np.ndarray, f: np.ndarray, n_win: int) -> np.ndarray:
    """Least-squares slope of every window of n_win consecutive samples."""
    tt = np.lib.stride_tricks.sliding_window_view(t, n_win)
    ff = np.lib.stride_tricks.sliding_window_view(f, n_win)
    tc = tt - tt.mean(axis=1, keepdims=True)
    return np.sum(tc * (ff - ff.mean(axis=1, keepdims=True)), axis=1) / np.sum(tc * tc, axis=1)


def measure_rocof(signal: Trajectory | TimeSeries, event_time: float, window: float = 0.05,
                  search: float = ROCOF_SEARCH, nominal_frequency: float | None = None) -> RocofMeasurement:
    """Largest absolute least-squares slope of the system frequency over
    sliding windows that lie inside [event_time, event_time + search].

    A Trajectory is reduced to its momentum-weighted mean frequency; a
    TimeSeries is taken to be a frequency in Hz.
    """
    if isinstance(signal, Trajectory):
        t, f = signal.t, signal.mean_frequency()
        f_nom = signal.nominal_frequency
    else:
        t, f = signal.t, signal.samples
        f_nom = nominal_frequency or 60.0
    if t.size < 2:
        raise ValidationError("need at least two samples")
    dt = float(t[1] - t[0])
    if window < 2 * dt - 1e-12:
        raise ValidationError(f"window {window} s is shorter than two samples ({2 * dt} s)")
    mask = (t >= event_time - 1e-9 * dt) & (t <= event_time + search + 1e-9)
    tw, fw = t[mask], f[mask]
    n_win = int(round(window / dt)) + 1
    if tw.size < n_win:
        raise ValidationError(f"window {window} s exceeds the {tw.size} samples available after the event")
    slopes = _sliding_slopes(tw, fw, n_win)
    k = int(np.argmax(np.abs(slopes)))
    value = float(abs(slopes[k]))
    return RocofMeasurement(value, value / f_nom, window, event_time, float(tw[k]))


# ---------------------------------------------------------------- shares

@dataclass(frozen=True)
class SharePoint:
    H: float
    m_gen: float
    m_line: float
    rocof: float  # Hz/s
    empirical_momentum: float  # nominal step / ROCOF, pu
    effective_dp: float  # electrical step seen by the machines at the event instant, pu
    nominal_dp: float  # pu

    @property
    def analytic_share(self) -> float:
        total = self.m_gen + self.m_line
        return self.m_line / total if total > 0 else 0.0

    @property
    def empirical_share(self) -> float:
        return (self.empirical_momentum - self.m_gen) / self.empirical_momentum

    @property
    def effective_momentum(self) -> float:
        """Momentum implied by the step the machines actually see; constant
        impedance loads take up part of a nominal load step as their voltage sags."""
        return self.empirical_momentum * self.effective_dp / self.nominal_dp


@dataclass(frozen=True)
class ShareCurve:
    """Line share of system momentum against homogeneous H.

    The constant-line-momentum family share(H) = a / (s H + a) has slope
    s = 2 S_total / S_base fixed by the machine ratings, which leaves ``a``
    (the effective line momentum) as the identifiable fit parameter.
    """

    points: tuple[SharePoint, ...]
    kappa: float
    slope: float
    fit_a: float
    all_gfm_share: float | None = None

    @property
    def H(self) -> np.ndarray:
        return np.array([p.H for p in self.points])

    @property
    def analytic(self) -> np.ndarray:
        return np.array([p.analytic_share for p in self.points])

    @property
    def empirical(self) -> np.ndarray:
        return np.array([p.empirical_share for p in self.points])

    def model(self, H) -> np.ndarray:
        H = np.asarray(H, dtype=float)
        return self.fit_a / (self.slope * H + self.fit_a)

    def crossing(self, share: float) -> float:
        """H at which the fitted curve passes through ``share``."""
        if not 0 < share < 1:
            raise ValidationError("share must lie in (0, 1)")
        return self.fit_a * (1.0 / share - 1.0) / self.slope


def _step_response(prep: PreparedSystem, config: ModelConfig, event: Event, dt: float, window: float,
                   search: float = ROCOF_SEARCH) -> tuple[RocofMeasurement, Trajectory]:
    horizon = event.time + search + 2 * dt
    traj = prep.simulate(config, [event], dt=dt, horizon=horizon, record_flows=False)
    return measure_rocof(traj, event.time, window, search), traj


def effective_step(prep: PreparedSystem, event: Event) -> float:
    """Change of total electrical output at the instant ``event`` is applied."""
    before = electrical_power(prep.initial, prep.dyn_net, prep.generators).sum()
    after_net = apply_event(prep.dyn_net, event, prep.initial.phasors)
    after = electrical_power(prep.initial, after_net, prep.generators).sum()
    return float(abs(after - before))


def momentum_share_sweep(case: CaseDefinition, H_grid: Sequence[float], disturbance: Event,
                         kappa: float, dt: float = 1e-3, window: float = 0.05,
                         include_all_gfm: bool = True, gfm: GFMSpec = GFMSpec()) -> ShareCurve:
    if kappa < 0:
        raise ValidationError("kappa must be non-negative")
    config = ModelConfig(kappa=kappa)
    base = case.network.base_mva
    points = []
    for H in H_grid:
        gens = with_sg_inertia(case.generators, H)
        prep = prepare_case(case, gens)
        m_line = float(prep.simulate(config, (), dt=dt, horizon=0.0, record_flows=False).m_line[0].sum())
        meas, _ = _step_response(prep, config, disturbance, dt, window)
        if meas.value_pu <= 1e-12:
            raise MeasurementError(f"ROCOF is zero at H = {H}; disturbance too small")
        points.append(SharePoint(float(H), prep.generator_momentum, m_line, meas.value,
                                 abs(disturbance.dp) / meas.value_pu, effective_step(prep, disturbance),
                                 abs(disturbance.dp)))
    slope = 2.0 * sum(g.rating for g in case.generators if g.tech == "SG") / base
    shares = np.array([p.analytic_share for p in points])
    Hs = np.array([p.H for p in points])
    a0 = float(np.mean([p.m_line for p in points])) or 1.0
    (a_fit,), _ = curve_fit(lambda h, a: a / (slope * h + a), Hs, shares, p0=[a0])
    gfm_share = None
    if include_all_gfm:
        prep = prepare_case(case, all_gfm(case, gfm))
        tr = prep.simulate(config, (), dt=dt, horizon=0.0, record_flows=False)
        m_l = float(tr.m_line[0].sum())
        m_g = float(tr.m_gen.sum())
        gfm_share = m_l / (m_l + m_g) if m_l + m_g > 0 else 0.0
    return ShareCurve(tuple(points), kappa, slope, float(a_fit), gfm_share)


# ---------------------------------------------------------------- ROCOF vs H

@dataclass(frozen=True)
class RocofCurve:
    H: np.ndarray
    plane_wave: np.ndarray  # Hz/s
    classical: np.ndarray
    dp: float
    pw_fit: tuple[float, float]
    pw_r2: float
    classical_fit: float
    classical_r2: float

    @property
    def divergence(self) -> np.ndarray:
        return np.abs(self.classical - self.plane_wave)


def _r2(y: np.ndarray, yhat: np.ndarray) -> float:
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def rocof_vs_inertia(case: CaseDefinition, dp: float, H_grid: Sequence[float], kappa: float,
                     bus: int | None = None, event_time: float = 0.1, dt: float = 1e-3,
                     window: float = 0.05) -> RocofCurve:
    bus = bus if bus is not None else DEFAULT_LOAD_BUS.get(case.name, case.network.buses[-1].id)
    event = Event.load_step(event_time, bus, dp)
    pw_cfg = ModelConfig(kappa=kappa)
    cl_cfg = ModelConfig(kind="classical")
    pw, cl = [], []
    for H in H_grid:
        prep = prepare_case(case, with_sg_inertia(case.generators, H))
        pw.append(_step_response(prep, pw_cfg, event, dt, window)[0].value)
        cl.append(_step_response(prep, cl_cfg, event, dt, window)[0].value)
    Hs = np.asarray(H_grid, dtype=float)
    pw_a, cl_a = np.array(pw), np.array(cl)
    k = float(np.sum(cl_a / Hs) / np.sum(1.0 / Hs**2))
    if Hs.size < 3:
        # two parameters need at least three points for a meaningful R^2
        return RocofCurve(Hs, pw_a, cl_a, dp, (math.nan, math.nan), math.nan, k, math.nan)
    (c1, c2), _ = curve_fit(lambda h, c1, c2: c1 / (h + c2), Hs, pw_a, p0=[pw_a[0] * Hs[0], 0.1])
    return RocofCurve(Hs, pw_a, cl_a, dp, (float(c1), float(c2)), _r2(pw_a, c1 / (Hs + c2)),
                      k, _r2(cl_a, k / Hs))


# ---------------------------------------------------------------- technology mix

TECH_MIXES = {"3SG": (), "2SG+1GFM": (2,), "1SG+2GFM": (1, 2), "3GFM": (0, 1, 2)}


@dataclass(frozen=True)
class MixResult:
    name: str
    peak_df_fault: float  # Hz, max over nodes while the fault is on
    peak_df: float  # Hz, max over nodes for the whole run
    settling_time: float  # s after clearing
    max_spread: float  # Hz, largest pairwise frequency difference after clearing
    trajectory: Trajectory = field(repr=False, compare=False)


def settling_time(t: np.ndarray, x: np.ndarray, t0: float, band: float = 0.02) -> float:
    """Time after t0 until every column of x stays within ``band`` of its
    largest post-t0 excursion from the final value."""
    x = np.atleast_2d(x.T).T
    post = t >= t0
    dev = np.abs(x[post] - x[-1])
    peak = dev.max(axis=0)
    outside = np.any(dev > band * np.maximum(peak, 1e-300), axis=1)
    idx = np.flatnonzero(outside)
    if idx.size == 0:
        return 0.0
    return float(t[post][idx[-1]] - t0)


def fault_events(branch: str, start: float, duration: float, position: float = 0.5) -> tuple[Event, Event]:
    return Event.fault(start, branch, position), Event.clear(start + duration)


def technology_mix_study(case: CaseDefinition, kappa: float, mixes: Sequence[str] = tuple(TECH_MIXES),
                         branch: str = TECH_MIX_FAULT_BRANCH, fault_start: float = 0.5,
                         duration: float = 0.083, horizon: float = 8.0, dt: float = 1e-3,
                         gfm: GFMSpec = GFMSpec()) -> dict[str, MixResult]:
    """Same loading for every mix; inverters replace the listed machines."""
    out = {}
    events = fault_events(branch, fault_start, duration)
    t_clear = fault_start + duration
    for name in mixes:
        if name not in TECH_MIXES:
            raise ValidationError(f"unknown mix {name!r}; available: {', '.join(TECH_MIXES)}")
        gens = replace_with_gfm(case.generators, TECH_MIXES[name], case.network.base_mva, gfm)
        prep = prepare_case(case, gens)
        tr = prep.simulate(ModelConfig(kappa=kappa), events, dt=dt, horizon=horizon, record_flows=False)
        df = tr.omega / (2 * math.pi)
        on = (tr.t >= fault_start) & (tr.t <= t_clear + 1e-9)
        post = tr.t >= t_clear - 1e-9
        spread = df[post].max(axis=1) - df[post].min(axis=1)
        out[name] = MixResult(name, float(np.abs(df[on]).max()), float(np.abs(df).max()),
                              settling_time(tr.t, df, t_clear), float(spread.max()), tr)
    return out


# ---------------------------------------------------------------- two-node system

@dataclass(frozen=True)
class TwoNodeSystem:
    """Generator node g feeding load node l.

    M_g is the combined generator and line momentum at g; M_load and T_vl
    belong to the load (kept apart from the line momentum symbol).
    """

    M_g: float
    T_vg: float
    D_g: float
    Z_m: complex
    P_g: float
    E_g: float
    P_l: float
    E_l: float
    M_load: float = 0.0
    T_vl: float = 0.0

    def __post_init__(self):
        if not self.M_g > 0 or not self.T_vg > 0:
            raise ValidationError("generator momentum and voltage time constant must be positive")
        if self.M_load < 0 or self.T_vl < 0:
            raise ValidationError("load momentum and time constant must be non-negative")

    @property
    def phi(self) -> np.ndarray:
        return np.diag([1.0 / self.M_g, 1.0 / self.T_vg])

    @property
    def k(self) -> np.ndarray:
        return np.diag([-self.M_load / self.M_g, -self.T_vl / self.T_vg])


@dataclass(frozen=True)
class TwoNodeState:
    omega_g: float  # deviation from synchronous speed, rad/s
    i_gl: complex  # current from g to l
    omega_l_dot: float = 0.0
    v_l_dot: float = 0.0


@dataclass(frozen=True)
class Decomposition:
    imbalance: np.ndarray
    damping: np.ndarray
    interaction: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.imbalance + self.damping + self.interaction


def two_node_decomposition(sys: TwoNodeSystem, state: TwoNodeState) -> Decomposition:
    """Split [omega_g', V_g'] into imbalance, damping and load-interaction terms."""
    phi = sys.phi
    imbalance = phi @ np.array([sys.P_g - sys.P_l, sys.E_g - sys.E_l])
    damping = -(phi @ np.array([sys.D_g * state.omega_g, abs(sys.Z_m * state.i_gl)]))
    interaction = sys.k @ np.array([state.omega_l_dot, state.v_l_dot])
    return Decomposition(imbalance, damping, interaction)


def two_node_rhs(sys: TwoNodeSystem, state: TwoNodeState) -> np.ndarray:
    """Direct evaluation of the same derivative."""
    w_dot = (sys.P_g - sys.P_l - sys.D_g * state.omega_g - sys.M_load * state.omega_l_dot) / sys.M_g
    v_dot = (sys.E_g - sys.E_l - abs(sys.Z_m * state.i_gl) - sys.T_vl * state.v_l_dot) / sys.T_vg
    return np.array([w_dot, v_dot])


# ---------------------------------------------------------------- sensitivity

SENSITIVITY_PARAMETERS = ("D_omega", "D_v", "P_headroom", "M_omega", "T_v", "X_scale", "R_scale")
SENSITIVITY_DT = 8.3e-4  # puts an 8.3 ms clearing exactly on a step boundary


@dataclass(frozen=True)
class SensitivityRow:
    value: float
    peak_df: float  # Hz at the observed node
    peak_dv: float  # pu, largest |V - V0| at the observed node
    settling_time: float  # s after clearing, frequency at the observed node
    zeta: float | None  # dominant oscillatory mode of the observed node frequency
    node_peak_df: tuple[float, ...] = ()
    node_peak_dv: tuple[float, ...] = ()
    stable: bool = True
    t_fail: float | None = None


@dataclass(frozen=True)
class SensitivityReport:
    parameter: str
    values: tuple[float, ...]
    rows: tuple[SensitivityRow, ...]
    node: int
    targets: tuple[int, ...]

    def row(self, value: float) -> SensitivityRow:
        for r in self.rows:
            if r.value == value:
                return r
        raise KeyError(value)


def case_c(case: CaseDefinition, gfm: GFMSpec = GFMSpec()) -> tuple[Generator, ...]:
    """One SG (bus 1) and two GFMs on the 9-bus system."""
    return replace_with_gfm(case.generators, TECH_MIXES["1SG+2GFM"], case.network.base_mva, gfm)


def _scale_attr(g: Generator, parameter: str, value: float, base_mva: float) -> Generator:
    if parameter == "D_omega":
        d = g.damping
        if d.kind == "droop_with_delay":
            return replace(g, damping=replace(d, droop=d.droop / value))
        return replace(g, damping=replace(d, D=d.D * value))
    if parameter == "D_v":
        return replace(g, Z_m=g.Z_m * value)
    if parameter == "P_headroom":
        return replace(g, p_headroom=value * g.rating / base_mva)
    if parameter == "M_omega":
        return replace(g, H=g.H * value)
    if parameter == "T_v":
        return replace(g, T_v=g.T_v * value)
    raise ValidationError(f"unknown sensitivity parameter {parameter!r}")


def dominant_zeta(t: np.ndarray, x: np.ndarray, t0: float, order: int = 40, rank: int = 8,
                  decimate: int = 1) -> float | None:
    """Damping ratio of the most energetic oscillatory Prony mode after t0."""
    post = t >= t0
    xs = x[post][::decimate]
    dt = float(t[1] - t[0]) * decimate
    if xs.size < 8 * order or np.ptp(xs) == 0:
        return None
    try:
        modes = prony_fit(TimeSeries(dt, xs), order, rank=rank)
    except NumericalError:
        return None
    osc = [m for m in modes if m.omega > 2 * math.pi * 0.05 and m.sigma < 0]
    return damping_ratio(osc[0]) if osc else None


def run_fault_metrics(prep: PreparedSystem, kappa: float, node: int, fault_start: float, duration: float,
                      branch: str, horizon: float, dt: float) -> SensitivityRow:
    events = fault_events(branch, fault_start, duration)
    t_clear = fault_start + duration
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            tr = prep.simulate(ModelConfig(kappa=kappa), events, dt=dt, horizon=horizon, record_flows=False)
    except NumericalError as exc:
        return SensitivityRow(math.nan, math.nan, math.nan, math.nan, None, stable=False,
                              t_fail=getattr(exc, "t_last", None))
    df = tr.omega / (2 * math.pi)
    dv = tr.v - tr.v[0]
    if np.abs(dv).max() > 0.9:
        bad = np.flatnonzero(np.abs(dv).max(axis=1) > 0.9)[0]
        return SensitivityRow(math.nan, math.nan, math.nan, math.nan, None, stable=False,
                              t_fail=float(tr.t[bad]))
    decim = max(1, int(round(5e-3 / dt)))
    return SensitivityRow(
        value=math.nan,
        peak_df=float(np.abs(df[:, node]).max()),
        peak_dv=float(np.abs(dv[:, node]).max()),
        settling_time=settling_time(tr.t, df[:, node], t_clear),
        zeta=dominant_zeta(tr.t, tr.omega[:, node], t_clear + 0.02, decimate=decim),
        node_peak_df=tuple(float(v) for v in np.abs(df).max(axis=0)),
        node_peak_dv=tuple(float(v) for v in np.abs(dv).max(axis=0)),
    )


def sensitivity_sweep(case: CaseDefinition, parameter: str, values: Sequence[float], kappa: float,
                      generators: Sequence[Generator] | None = None, targets: Sequence[int] | None = None,
                      node: int = 1, branch: str = TECH_MIX_FAULT_BRANCH, fault_start: float = 0.249,
                      duration: float = 0.0083, horizon: float = 3.0,
                      dt: float = SENSITIVITY_DT) -> SensitivityReport:
    """One parameter varied per sweep on ``generators`` (default: the
    one-SG/two-GFM mix). Network parameters scale every branch; generator
    parameters apply to ``targets`` (default: all machines). Metrics are
    taken at dynamic node ``node`` (generator 2 by default)."""
    if parameter not in SENSITIVITY_PARAMETERS:
        raise ValidationError(f"unknown parameter {parameter!r}; available: {', '.join(SENSITIVITY_PARAMETERS)}")
    gens0 = tuple(generators) if generators is not None else case_c(case)
    targets = tuple(range(len(gens0))) if targets is None else tuple(targets)
    rows = []
    for value in sorted(values):
        net = case.network
        gens = gens0
        if parameter == "X_scale":
            net = net.scale_branches(x_scale=value)
        elif parameter == "R_scale":
            net = net.scale_branches(r_scale=value)
        else:
            gens = tuple(_scale_attr(g, parameter, value, net.base_mva) if k in targets else g
                         for k, g in enumerate(gens0))
        prep = prepare(net, gens, reduce=case.options.reduce)
        row = run_fault_metrics(prep, kappa, node, fault_start, duration, branch, horizon, dt)
        rows.append(replace(row, value=float(value)))
    return SensitivityReport(parameter, tuple(sorted(float(v) for v in values)), tuple(rows), node, targets)


def relative_change(a: float, b: float) -> float:
    return abs(b - a) / abs(a) if a != 0 else (0.0 if b == 0 else math.inf)


# ---------------------------------------------------------------- corrupted controllers

@dataclass(frozen=True)
class CorruptionResult:
    """Differences between a corrupted and the healthy run, all in per-unit:
    frequency deviations divided by the nominal frequency, voltages in pu."""

    parameter: str
    local_dv: float
    local_df: float
    remote_dv: float
    remote_df: float


def corrupted_controller(case: CaseDefinition, parameter: str, factor: float, kappa: float,
                         generators: Sequence[Generator] | None = None, node: int = 1,
                         branch: str = TECH_MIX_FAULT_BRANCH, fault_start: float = 0.249,
                         duration: float = 0.0083, horizon: float = 3.0,
                         dt: float = SENSITIVITY_DT) -> CorruptionResult:
    """Corrupt one controller (``D_omega`` or ``D_v``) at dynamic node
    ``node`` and compare every node against the healthy trajectory."""
    if parameter not in ("D_omega", "D_v"):
        raise ValidationError("corruption applies to D_omega or D_v")
    gens0 = tuple(generators) if generators is not None else case_c(case)
    bad = tuple(_scale_attr(g, parameter, factor, case.network.base_mva) if k == node else g
                for k, g in enumerate(gens0))
    events = fault_events(branch, fault_start, duration)
    runs = []
    for gens in (gens0, bad):
        prep = prepare(case.network, gens, reduce=case.options.reduce)
        runs.append(prep.simulate(ModelConfig(kappa=kappa), events, dt=dt, horizon=horizon, record_flows=False))
    base, corr = runs
    f_nom = case.network.nominal_frequency
    ddf = np.abs(corr.omega - base.omega).max(axis=0) / (2 * math.pi * f_nom)
    ddv = np.abs(corr.v - base.v).max(axis=0)
    remote = [k for k in range(len(gens0)) if k != node]
    return CorruptionResult(parameter, float(ddv[node]), float(ddf[node]),
                            float(ddv[remote].max()), float(ddf[remote].max()))


def em_share_at(case: CaseDefinition, H: float, kappa: float) -> float:
    """Analytic system line share at homogeneous H."""
    prep = prepare_case(case, with_sg_inertia(case.generators, H))
    tr = prep.simulate(ModelConfig(kappa=kappa), (), horizon=0.0, record_flows=False)
    m_l = float(tr.m_line[0].sum())
    return m_l / (m_l + float(tr.m_gen.sum()))


def generator_momentum_total(generators: Sequence[Generator], base_mva: float) -> float:
    return float(sum(generator_momentum(g.H, g.rating, base_mva) for g in generators))


Metric = Callable[[SensitivityRow], float]
