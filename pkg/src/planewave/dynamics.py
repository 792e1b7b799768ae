"""Node dynamics: the coupled angle/voltage model with line momentum, the
classical swing equation, generator technology models, disturbance events
and a fixed-step RK4 integrator.

Units: angles in rad, frequency deviations in rad/s, powers and voltages in
per-unit on the system base, momenta M = 2 H S / S_base in seconds. The
angle equation is written (M / omega_s) * d(omega)/dt = P - D*omega - f.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .electromagnetics import MomentumBudget, section_momentum
from .errors import (
    NumericalBlowup,
    ProtocolError,
    SingularMomentumError,
    ValidationError,
)
from .network import DynamicNetwork, LineSections, PowerFlowSolution, PowerNetwork

TECHS = ("SG", "GFL", "GFM_droop", "GFM_VSM", "GFM_VOC")
INVERTER_TECHS = ("GFL", "GFM_droop", "GFM_VSM", "GFM_VOC")
DAMPING_KINDS = ("constant_D", "droop_with_delay", "none")
EVENT_KINDS = ("load_step", "three_phase_fault", "clear_fault", "line_trip")
DEFAULT_FAULT_ADMITTANCE = 1.0 / 1e-5j


@dataclass(frozen=True)
class DampingSpec:
    kind: str = "constant_D"
    D: float = 0.0
    droop: float = 0.0
    delay: float = 0.0

    def __post_init__(self):
        if self.kind not in DAMPING_KINDS:
            raise ValidationError(f"unknown damping kind {self.kind!r}")
        if self.kind == "droop_with_delay" and not self.droop > 0:
            raise ValidationError("droop_with_delay needs a positive droop coefficient")
        if self.delay < 0:
            raise ValidationError("damping delay must be non-negative")


def damping_power(spec: DampingSpec, d_omega: float, filter_state: float = 0.0,
                  omega_s: float = 2 * math.pi * 60.0, scale: float = 1.0) -> tuple[float, float]:
    """Damping/control power and the time derivative of the droop filter.

    constant_D gives D*d_omega; droop_with_delay is a first-order lag (time
    constant ``delay``) of scale*(d_omega/omega_s)/droop, where ``scale``
    converts from the machine rating to the system base.
    """
    if spec.kind == "constant_D":
        return spec.D * d_omega, 0.0
    if spec.kind == "none":
        return 0.0, 0.0
    target = scale * (d_omega / omega_s) / spec.droop
    if spec.delay == 0:
        return target, 0.0
    return filter_state, (target - filter_state) / spec.delay


@dataclass(frozen=True)
class Generator:
    """One generating unit. Impedances are per-unit on the system base.

    ``source_impedance`` connects the internal node to the terminal bus
    (transient reactance for SGs); inverters default to ``Z_m``.
    """

    bus: int
    tech: str = "SG"
    H: float = 0.0
    rating: float = 100.0
    damping: DampingSpec = field(default_factory=DampingSpec)
    T_v: float = 1.0
    Z_m: complex = 0.1j
    source_impedance: complex | None = None
    P_set: float | None = None
    E_set: float | None = None
    q_limit: float = math.inf
    i_limit: float = math.inf
    p_headroom: float = math.inf
    track_lag: float = 0.02

    def __post_init__(self):
        where = f"generator at bus {self.bus}"
        if self.tech not in TECHS:
            raise ValidationError(f"{where}: unknown technology {self.tech!r}")
        if self.H < 0:
            raise ValidationError(f"{where}: H must be non-negative")
        if not self.rating > 0:
            raise ValidationError(f"{where}: rating must be positive")
        if not self.T_v > 0:
            raise ValidationError(f"{where}: T_v must be positive")
        if abs(self.Z_m) == 0:
            raise ValidationError(f"{where}: Z_m must be non-zero")
        for name in ("q_limit", "i_limit", "p_headroom"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{where}: {name} must be non-negative")
        if self.tech == "SG" and self.source_impedance is None:
            raise ValidationError(f"{where}: SG needs a source (transient) impedance")
        if self.tech in ("GFM_droop", "GFM_VOC") and self.damping.kind != "droop_with_delay":
            raise ValidationError(f"{where}: {self.tech} requires a droop value (droop_with_delay damping)")
        if self.tech == "GFL" and not self.track_lag > 0:
            raise ValidationError(f"{where}: GFL tracking lag must be positive")

    @property
    def z_source(self) -> complex:
        return complex(self.Z_m if self.source_impedance is None else self.source_impedance)

    def momentum(self, base_mva: float) -> float:
        return 2.0 * self.H * self.rating / base_mva


@dataclass(frozen=True)
class Event:
    kind: str
    time: float
    bus: int | None = None
    dp: float = 0.0
    dq: float = 0.0
    branch: str | None = None
    position: float = 0.5
    y_fault: complex = DEFAULT_FAULT_ADMITTANCE

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValidationError(f"unknown event kind {self.kind!r}")
        if self.time < 0:
            raise ValidationError("event time must be non-negative")
        if self.kind == "load_step" and self.bus is None:
            raise ValidationError("load_step needs a bus")
        if self.kind in ("three_phase_fault", "line_trip") and self.branch is None:
            raise ValidationError(f"{self.kind} needs a branch")
        if not 0.0 <= self.position <= 1.0:
            raise ValidationError("fault position must lie in [0, 1]")

    @classmethod
    def load_step(cls, time: float, bus: int, dp: float, dq: float = 0.0) -> Event:
        return cls("load_step", time, bus=bus, dp=dp, dq=dq)

    @classmethod
    def fault(cls, time: float, branch: str, position: float = 0.5,
              y_fault: complex = DEFAULT_FAULT_ADMITTANCE) -> Event:
        return cls("three_phase_fault", time, branch=branch, position=position, y_fault=y_fault)

    @classmethod
    def clear(cls, time: float) -> Event:
        return cls("clear_fault", time)

    @classmethod
    def trip(cls, time: float, branch: str) -> Event:
        return cls("line_trip", time, branch=branch)

    def check(self, network: PowerNetwork) -> None:
        if self.bus is not None and self.bus not in network.bus_ids:
            raise ValidationError(f"event references missing bus {self.bus}")
        if self.branch is not None:
            branch_index(network, self.branch)


def validate_events(events: Sequence[Event]) -> None:
    times = [e.time for e in events]
    if times != sorted(times):
        raise ValidationError("events must be sorted by time")
    open_faults = 0
    for e in events:
        if e.kind == "three_phase_fault":
            open_faults += 1
        elif e.kind == "clear_fault":
            open_faults -= 1
            if open_faults < 0:
                raise ProtocolError(f"clear_fault at t={e.time} without an active fault")
    if open_faults:
        raise ProtocolError("every fault needs a matching clear_fault")


def branch_index(network: PowerNetwork, label: str) -> int:
    for k, br in enumerate(network.branches):
        if br.label == label or f"{br.to_bus}-{br.from_bus}" == label:
            return k
    raise ValidationError(f"no branch {label!r}")


# ---------------------------------------------------------------- events

def _section_stamp(sec: LineSections, k: int) -> tuple[complex, complex, complex, complex]:
    ys, half, t = sec.y_series[k], 0.5j * sec.b_shunt[k], sec.tap[k]
    return (ys + half) / t**2, -ys / t, -ys / t, ys + half


def _add_stamp(y: np.ndarray, a: int, b: int, stamp, sign: float = 1.0) -> None:
    yff, yft, ytf, ytt = stamp
    y[a, a] += sign * yff
    y[a, b] += sign * yft
    y[b, a] += sign * ytf
    y[b, b] += sign * ytt


def apply_event(dyn_net: DynamicNetwork, event: Event, v_nodes: np.ndarray | None = None) -> DynamicNetwork:
    """Return the network after ``event``.

    Load steps use the pre-event bus voltage (from ``v_nodes`` when given,
    otherwise the voltage the loads were folded at).
    """
    network = dyn_net.network
    if event.kind == "load_step":
        k = network.index(event.bus)
        if v_nodes is not None:
            vk = abs(dyn_net.full_voltages(v_nodes)[k])
        else:
            vk = dyn_net.fold_voltage[k]
        dy = complex(event.dp, -event.dq) / vk**2
        y = dyn_net.y_aug.copy()
        y[k, k] += dy
        loads = dyn_net.load_admittance.copy()
        loads[k] += dy
        return dyn_net.modified(y_aug=y, load_admittance=loads)

    if event.kind == "clear_fault":
        if dyn_net.prior is None:
            raise ProtocolError("clear_fault without an active fault")
        return dyn_net.prior

    b = branch_index(network, event.branch)
    sec = dyn_net.sections
    rows = np.flatnonzero(sec.branch == b)

    if event.kind == "line_trip":
        if rows.size == 0:
            raise ProtocolError(f"branch {event.branch} is already out of service")
        if rows.size > 1:
            raise ProtocolError(f"branch {event.branch} is faulted; clear before tripping")
        y = dyn_net.y_aug.copy()
        k = int(rows[0])
        _add_stamp(y, sec.node_a[k], sec.node_b[k], _section_stamp(sec, k), sign=-1.0)
        # exact zeroing so the connectivity check sees the opening
        a, bb = sec.node_a[k], sec.node_b[k]
        if not any(((sec.node_a[j], sec.node_b[j]) in ((a, bb), (bb, a))) for j in range(len(sec.branch)) if j != k):
            y[a, bb] = y[bb, a] = 0.0
        keep_mask = np.ones(len(sec.branch), dtype=bool)
        keep_mask[k] = False
        return dyn_net.modified(y_aug=y, sections=sec.subset(keep_mask))

    # three-phase fault
    if dyn_net.prior is not None:
        raise ProtocolError("only one fault may be active at a time")
    if rows.size != 1:
        raise ProtocolError(f"branch {event.branch} is not in service")
    k = int(rows[0])
    a, bb = int(sec.node_a[k]), int(sec.node_b[k])
    p = event.position
    if p in (0.0, 1.0):
        y = dyn_net.y_aug.copy()
        node = a if p == 0.0 else bb
        y[node, node] += event.y_fault
        return dyn_net.modified(y_aug=y, prior=dyn_net)
    n = dyn_net.y_aug.shape[0]
    y = np.zeros((n + 1, n + 1), dtype=complex)
    y[:n, :n] = dyn_net.y_aug
    _add_stamp(y, a, bb, _section_stamp(sec, k), sign=-1.0)
    y[a, bb] = y[bb, a] = 0.0 if _single_link(sec, k) else y[a, bb]
    first = LineSections(
        np.array([a, n]), np.array([n, bb]),
        np.array([sec.y_series[k] / p, sec.y_series[k] / (1 - p)]),
        np.array([sec.b_shunt[k] * p, sec.b_shunt[k] * (1 - p)]),
        np.array([sec.tap[k], 1.0]),
        np.array([sec.length[k] * p, sec.length[k] * (1 - p)]),
        np.array([b, b]),
    )
    for j in range(2):
        _add_stamp(y, first.node_a[j], first.node_b[j], _section_stamp(first, j))
    y[n, n] += event.y_fault
    mask = np.ones(len(sec.branch), dtype=bool)
    mask[k] = False
    sections = LineSections.concat(sec.subset(mask), first)
    labels = dyn_net.labels + (f"fault@{event.branch}",)
    return dyn_net.modified(y_aug=y, sections=sections, labels=labels, prior=dyn_net)


def _single_link(sec: LineSections, k: int) -> bool:
    a, b = sec.node_a[k], sec.node_b[k]
    for j in range(len(sec.branch)):
        if j != k and {sec.node_a[j], sec.node_b[j]} == {a, b}:
            return False
    return True


# ---------------------------------------------------------------- state

@dataclass
class SystemState:
    t: float
    delta: np.ndarray
    omega: np.ndarray
    v: np.ndarray
    aux: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.delta, self.omega, self.v, self.aux])

    @classmethod
    def from_vector(cls, t: float, y: np.ndarray) -> SystemState:
        n = y.size // 4
        return cls(t, y[:n].copy(), y[n:2 * n].copy(), y[2 * n:3 * n].copy(), y[3 * n:].copy())

    @property
    def phasors(self) -> np.ndarray:
        return self.v * np.exp(1j * self.delta)


@dataclass(frozen=True)
class ModelConfig:
    """kind: plane_wave | classical. voltage: dynamic | algebraic (the
    algebraic form holds V at its initial value). ``line_momentum`` False
    forces M_l = 0; ``frozen_budgets`` evaluates M_l once at the initial
    state instead of at every stage."""

    kind: str = "plane_wave"
    voltage: str = "dynamic"
    line_momentum: bool = True
    kappa: float = 0.0
    attribution: str = "sending"
    frozen_budgets: bool = False

    def __post_init__(self):
        if self.kind not in ("plane_wave", "classical"):
            raise ValidationError(f"unknown model {self.kind!r}")
        if self.voltage not in ("dynamic", "algebraic"):
            raise ValidationError(f"unknown voltage mode {self.voltage!r}")


def _generator_nodes(dyn_net: DynamicNetwork, generators: Sequence[Generator]) -> np.ndarray:
    if not dyn_net.reduced:
        raise ValidationError("dynamic nodes without a generator are not supported; fold with reduce=True")
    if len(generators) != dyn_net.n_nodes:
        raise ValidationError("generator count does not match the dynamic nodes")
    return np.arange(len(generators))


class _Model:
    """Arrays for one network topology; rebuilt whenever an event fires."""

    def __init__(self, dyn_net: DynamicNetwork, generators: Sequence[Generator], config: ModelConfig,
                 frozen_m_line: np.ndarray | None = None):
        _generator_nodes(dyn_net, generators)
        net = dyn_net.network
        self.dyn_net = dyn_net
        self.config = config
        self.n = n = len(generators)
        self.omega_s = net.omega_s
        self.y = dyn_net.y_red
        self.ymag = np.abs(self.y)
        self.alpha = np.angle(self.y)
        self.recon = dyn_net.recon
        self.sections = dyn_net.sections
        self.n_aug = dyn_net.y_aug.shape[0]
        absr = np.abs(self.recon)
        rows = absr.sum(axis=1, keepdims=True)
        dist = np.divide(absr, rows, out=np.zeros_like(absr), where=rows > 0)
        sec = self.sections
        ns = len(sec.branch)
        self.n_sec = ns
        # one operator mapping node phasors to end voltages and end currents
        r_a, r_b = self.recon[sec.node_a], self.recon[sec.node_b]
        half = 0.5j * sec.b_shunt
        c_aa = ((sec.y_series + half) / sec.tap**2)[:, None]
        c_ab = (sec.y_series / sec.tap)[:, None]
        self.flow_op = np.vstack([r_a, r_b, c_aa * r_a - c_ab * r_b, -c_ab * r_a + (sec.y_series + half)[:, None] * r_b])
        # section-end momentum -> dynamic node
        self.attr_a = dist[sec.node_a].T
        self.attr_b = dist[sec.node_b].T
        self.length = sec.length
        self.m_gen = np.array([g.momentum(net.base_mva) for g in generators])
        self.p_set = np.array([g.P_set for g in generators], dtype=float)
        self.e_set = np.array([g.E_set for g in generators], dtype=float)
        self.t_v = np.array([g.T_v for g in generators])
        self.z_m = np.array([complex(g.Z_m) for g in generators])
        self.headroom = np.array([g.p_headroom for g in generators])
        self.i_limit = np.array([g.i_limit if g.tech in INVERTER_TECHS else math.inf for g in generators])
        self.limited = bool(np.any(np.isfinite(self.i_limit)))
        kinds = [g.damping.kind for g in generators]
        self.d_const = np.array([g.damping.D if k == "constant_D" else 0.0 for g, k in zip(generators, kinds)])
        self.droop = np.array([k == "droop_with_delay" for k in kinds])
        self.droop_gain = np.array([
            (g.rating / net.base_mva) / (g.damping.droop * self.omega_s) if k == "droop_with_delay" else 0.0
            for g, k in zip(generators, kinds)
        ])
        self.droop_delay = np.array([g.damping.delay if k == "droop_with_delay" else 0.0
                                     for g, k in zip(generators, kinds)])
        self.lagged = self.droop & (self.droop_delay > 0)
        self.direct = self.droop & ~self.lagged
        self.gfl = np.array([g.tech == "GFL" for g in generators])
        self.any_gfl = bool(self.gfl.any())
        self.gfl_lag = np.array([g.track_lag for g in generators])
        self.terminal = np.array([net.index(g.bus) for g in generators])
        self.gfl_offset = np.zeros(n)
        self.use_m_line = config.kind == "plane_wave" and config.line_momentum and config.kappa > 0
        self.frozen_m_line = frozen_m_line
        self.any_lagged = bool(np.any(self.lagged))
        self.d_linear = self.d_const + self.direct * self.droop_gain
        self.dynamic_v = config.kind == "plane_wave" and config.voltage == "dynamic"
        # line momentum is non-negative, so positive generator momentum everywhere skips the mask
        self.all_massive = bool(np.all(self.m_gen > 0))

    # -- network quantities

    def flows(self, vc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = self.flow_op @ vc
        ns = self.n_sec
        return w[:ns] * np.conj(w[2 * ns:3 * ns]), w[ns:2 * ns] * np.conj(w[3 * ns:])

    def m_line(self, vc: np.ndarray) -> np.ndarray:
        if not self.use_m_line:
            return np.zeros(self.n)
        if self.frozen_m_line is not None:
            return self.frozen_m_line
        s_a, s_b = self.flows(vc)
        m_a, m_b = section_momentum(s_a, s_b, self.length, self.config.kappa, self.config.attribution)
        return self.attr_a @ m_a + self.attr_b @ m_b

    def f_flow(self, delta: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Real power leaving each node, written as the cosine sum."""
        dd = delta[:, None] - delta[None, :] - self.alpha
        return v * ((self.ymag * np.cos(dd)) @ v)

    def g_flow(self, vc: np.ndarray) -> np.ndarray:
        return np.abs(self.z_m * (self.y @ vc))

    def p_electric(self, vc: np.ndarray) -> np.ndarray:
        """Real power leaving each node from the complex product (classical path)."""
        return (vc * np.conj(self.y @ vc)).real

    # -- right-hand sides

    def rhs(self, y: np.ndarray) -> np.ndarray:
        n = self.n
        delta, omega, v, aux = y[:n], y[n:2 * n], y[2 * n:3 * n], y[3 * n:]
        vc = v * np.exp(1j * delta)
        if self.config.kind == "classical":
            m_total = self.m_gen
            p_e = self.p_electric(vc)
        else:
            m_total = self.m_gen + self.m_line(vc)
            p_e = self.f_flow(delta, v)
        damping = self.d_linear * omega + self.lagged * aux
        p_mech = np.minimum(self.p_set - damping, self.p_set + self.headroom)

        if self.limited:
            i_mag = np.abs(self.y @ vc)
            scale = np.where(i_mag > self.i_limit, self.i_limit / np.maximum(i_mag, 1e-300), 1.0)
            p_e = p_e * scale
        else:
            scale = None

        accel = p_mech - p_e
        if self.all_massive:
            d_omega = self.omega_s * accel / m_total
        else:
            d_omega = np.zeros(n)
            ok = m_total > 0
            if not np.all(ok | self.gfl):
                bad = ~ok & ~self.gfl & (np.abs(accel) > 1e-12)
                if np.any(bad):
                    raise SingularMomentumError(
                        f"zero momentum at node(s) {np.flatnonzero(bad).tolist()} with non-zero power imbalance"
                    )
            d_omega[ok] = self.omega_s * accel[ok] / m_total[ok]

        if self.any_gfl:
            theta = np.angle((self.recon @ vc)[self.terminal])
            err = np.angle(np.exp(1j * (theta + self.gfl_offset - delta)))
            lag = self.gfl_lag
            d_omega = np.where(self.gfl, (err / lag - omega) / lag, d_omega)

        if self.dynamic_v:
            g = self.g_flow(vc)
            if scale is not None:
                g = g * scale
            d_v = (self.e_set - v - g) / self.t_v
        else:
            d_v = np.zeros(n)

        d_aux = np.zeros(n)
        if self.any_lagged:
            target = self.droop_gain * omega
            d_aux[self.lagged] = (target[self.lagged] - aux[self.lagged]) / self.droop_delay[self.lagged]
        return np.concatenate([omega, d_omega, d_v, d_aux])


def _budgets_from(m_gen: np.ndarray, m_line: np.ndarray) -> list[MomentumBudget]:
    return [MomentumBudget(k, float(m_gen[k]), float(m_line[k])) for k in range(len(m_gen))]


def node_budgets(state: SystemState, dyn_net: DynamicNetwork, generators: Sequence[Generator],
                 kappa: float, attribution: str = "sending") -> list[MomentumBudget]:
    """Momentum budget of every dynamic node at ``state``."""
    model = _Model(dyn_net, generators, ModelConfig(kappa=kappa, attribution=attribution))
    return _budgets_from(model.m_gen, model.m_line(state.phasors))


def plane_wave_rhs(state: SystemState, dyn_net: DynamicNetwork, generators: Sequence[Generator],
                   budgets: Sequence[MomentumBudget] | None = None,
                   voltage: str = "dynamic") -> np.ndarray:
    """Derivative of [delta, omega, V, aux] under the plane wave model.

    ``budgets`` supply the node momenta (generator plus attributed line
    momentum); without them the line term is zero.
    """
    model = _Model(dyn_net, generators, ModelConfig(voltage=voltage, line_momentum=False))
    if budgets is not None:
        m_line = np.array([b.line_momentum for b in budgets])
        model.m_gen = np.array([b.generator_momentum for b in budgets])
        model.all_massive = bool(np.all(model.m_gen > 0))
        model.use_m_line = True
        model.frozen_m_line = m_line
    return model.rhs(state.vector())


def classical_swing_rhs(state: SystemState, dyn_net: DynamicNetwork,
                        generators: Sequence[Generator]) -> np.ndarray:
    """Classical swing equation with voltages held at their current values."""
    model = _Model(dyn_net, generators, ModelConfig(kind="classical"))
    return model.rhs(state.vector())


def electrical_power(state: SystemState, dyn_net: DynamicNetwork,
                     generators: Sequence[Generator]) -> np.ndarray:
    """Real power f_i leaving every dynamic node at ``state``."""
    model = _Model(dyn_net, generators, ModelConfig(line_momentum=False))
    return model.f_flow(state.delta, state.v)


def lossless_energy(traj: "Trajectory", dyn_net: DynamicNetwork, generators: Sequence[Generator]) -> np.ndarray:
    """Kinetic analog plus network potential along a trajectory,
    sum 1/2 (M/omega_s) omega^2 - sum P_set delta - sum_{i<j} V_i V_j B_ij cos(delta_i - delta_j).

    Conserved by the undamped dynamics when the reduced admittance is purely
    imaginary and voltages are held, with constant node momentum.
    """
    y = dyn_net.y_red
    if np.abs(y.real).max() > 1e-12 * max(np.abs(y).max(), 1.0):
        raise ValidationError("energy function needs a lossless reduced network (purely imaginary Y)")
    b = y.imag
    m = traj.m_gen + traj.m_line[0]
    p_set = np.array([g.P_set for g in generators], dtype=float)
    kinetic = 0.5 * (traj.omega**2) @ (m / traj.omega_s)
    d = traj.delta[:, :, None] - traj.delta[:, None, :]
    vv = traj.v[:, :, None] * traj.v[:, None, :]
    upper = np.triu(np.ones_like(b, dtype=bool), 1)
    potential = -traj.delta @ p_set - np.sum((vv * b * np.cos(d))[:, upper], axis=1)
    return kinetic + potential


# ---------------------------------------------------------------- equilibrium

def equilibrium(dyn_net: DynamicNetwork, generators: Sequence[Generator],
                solution: PowerFlowSolution) -> tuple[tuple[Generator, ...], SystemState]:
    """Internal-node state at the power-flow point, with P_set and E_set
    chosen so that every derivative vanishes."""
    net = dyn_net.network
    _generator_nodes(dyn_net, generators)
    vt = solution.phasors
    e = np.empty(len(generators), dtype=complex)
    for k, g in enumerate(generators):
        i = net.index(g.bus)
        bus = net.buses[i]
        s_gen = complex(solution.p[i] + bus.load_p, solution.q[i] + bus.load_q)
        current = np.conj(s_gen / vt[i])
        e[k] = vt[i] + g.z_source * current
    delta, v = np.angle(e), np.abs(e)
    model = _Model(dyn_net, [replace(g, P_set=0.0, E_set=0.0) for g in generators], ModelConfig())
    p = model.f_flow(delta, v)
    g_val = model.g_flow(v * np.exp(1j * delta))
    out = tuple(replace(g, P_set=float(p[k]), E_set=float(v[k] + g_val[k])) for k, g in enumerate(generators))
    n = len(generators)
    return out, SystemState(0.0, delta, np.zeros(n), v, np.zeros(n))


# ---------------------------------------------------------------- integration

@dataclass
class Trajectory:
    t: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    v: np.ndarray
    m_line: np.ndarray
    m_gen: np.ndarray
    branch_flow: np.ndarray
    node_labels: tuple[str, ...]
    nominal_frequency: float
    model: str = "plane_wave"

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    @property
    def omega_s(self) -> float:
        return 2 * math.pi * self.nominal_frequency

    def frequency_hz(self) -> np.ndarray:
        return self.nominal_frequency + self.omega / (2 * math.pi)

    def weights(self) -> np.ndarray:
        w = self.m_gen + self.m_line[0]
        return w if w.sum() > 0 else np.ones_like(w)

    def mean_frequency(self, weights: np.ndarray | None = None) -> np.ndarray:
        """Momentum-weighted (centre-of-inertia) frequency in Hz."""
        w = self.weights() if weights is None else np.asarray(weights, dtype=float)
        return self.frequency_hz() @ w / w.sum()

    def budgets(self, k: int) -> list[MomentumBudget]:
        return _budgets_from(self.m_gen, self.m_line[k])

    def state(self, k: int) -> SystemState:
        n = self.delta.shape[1]
        return SystemState(float(self.t[k]), self.delta[k].copy(), self.omega[k].copy(),
                           self.v[k].copy(), np.zeros(n))


def _snap_events(events: Sequence[Event], dt: float) -> list[tuple[int, Event]]:
    out = []
    for e in events:
        k = int(round(e.time / dt))
        if abs(k * dt - e.time) > 1e-9 * max(dt, 1.0):
            warnings.warn(f"event at t={e.time} snapped to {k * dt} (dt={dt})", stacklevel=3)
        out.append((k, e))
    return out


def _branch_flows(model: _Model, vc: np.ndarray, n_branch: int) -> np.ndarray:
    s_a, s_b = model.flows(vc)
    out = np.zeros(n_branch, dtype=complex)
    sec = model.sections
    # for split branches keep the section at the original from-end
    for j in range(len(sec.branch) - 1, -1, -1):
        if sec.node_a[j] < model.dyn_net.n_bus:
            out[sec.branch[j]] = s_a[j]
    return out


def integrate(config: ModelConfig, dyn_net: DynamicNetwork, generators: Sequence[Generator],
              initial: SystemState, events: Sequence[Event] = (), dt: float = 1e-3,
              horizon: float = 10.0, record_every: int = 1, record_flows: bool = True) -> Trajectory:
    """Fixed-step classical RK4. Events fire at step boundaries; the network
    (and line-momentum attribution) is rebuilt after each one."""
    if not dt > 0:
        raise ValidationError("dt must be positive")
    validate_events(events)
    n_steps = int(round(horizon / dt))
    schedule = _snap_events(events, dt)
    # dry run of the event sequence so topology errors surface before stepping
    probe = dyn_net
    for _, ev in schedule:
        probe = apply_event(probe, ev)
    frozen = None
    model = _Model(dyn_net, generators, config)
    y = initial.vector().astype(float)
    if config.frozen_budgets:
        frozen = model.m_line(initial.phasors)
        model.frozen_m_line = frozen
    if model.any_gfl:
        theta0 = np.angle((model.recon @ initial.phasors)[model.terminal])
        model.gfl_offset = initial.delta - theta0
    gfl_offset = model.gfl_offset
    n_branch = len(dyn_net.network.branches)

    n_rec = n_steps // record_every + 1
    n = model.n
    rec_t = np.empty(n_rec)
    rec = {k: np.empty((n_rec, n)) for k in ("delta", "omega", "v", "m_line")}
    rec_flow = np.zeros((n_rec, n_branch), dtype=complex) if record_flows else np.zeros((0, n_branch), dtype=complex)

    def record(slot, k):
        vc = y[2 * n:3 * n] * np.exp(1j * y[:n])
        rec_t[slot] = k * dt
        rec["delta"][slot] = y[:n]
        rec["omega"][slot] = y[n:2 * n]
        rec["v"][slot] = y[2 * n:3 * n]
        rec["m_line"][slot] = model.m_line(vc)
        if record_flows:
            rec_flow[slot] = _branch_flows(model, vc, n_branch)

    pending = list(schedule)
    slot = 0
    # overflow on a diverging run is reported as NumericalBlowup below
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps + 1):
            while pending and pending[0][0] == k:
                _, ev = pending.pop(0)
                vc = y[2 * n:3 * n] * np.exp(1j * y[:n])
                dyn_net = apply_event(dyn_net, ev, vc)
                model = _Model(dyn_net, generators, config, frozen_m_line=frozen)
                model.gfl_offset = gfl_offset
            if k % record_every == 0:
                record(slot, k)
                slot += 1
            if k == n_steps:
                break
            f = model.rhs
            k1 = f(y)
            k2 = f(y + 0.5 * dt * k1)
            k3 = f(y + 0.5 * dt * k2)
            k4 = f(y + dt * k3)
            y_next = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.isfinite(y_next).all():
                raise NumericalBlowup(k * dt)
            y = y_next

    return Trajectory(
        t=rec_t[:slot], delta=rec["delta"][:slot], omega=rec["omega"][:slot], v=rec["v"][:slot],
        m_line=rec["m_line"][:slot], m_gen=model.m_gen.copy(), branch_flow=rec_flow[:slot],
        node_labels=dyn_net.node_labels, nominal_frequency=dyn_net.network.nominal_frequency,
        model=config.kind,
    )

