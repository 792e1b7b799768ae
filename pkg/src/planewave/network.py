"""Per-unit network model, admittance assembly, Newton power flow and the
reduced dynamic network the ODE models are evaluated on."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    DegenerateBranchError,
    NetworkError,
    PowerFlowDivergence,
    SingularFoldError,
    ValidationError,
)

BUS_KINDS = ("slack", "generator", "load")


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str = "load"
    voltage_setpoint: float = 1.0
    load_p: float = 0.0
    load_q: float = 0.0
    gen_p: float = 0.0
    base_kv: float = 230.0

    def __post_init__(self):
        if self.kind not in BUS_KINDS:
            raise ValidationError(f"bus {self.id}: unknown kind {self.kind!r}")
        if not self.voltage_setpoint > 0:
            raise ValidationError(f"bus {self.id}: voltage setpoint must be positive")
        for name in ("load_p", "load_q", "gen_p"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"bus {self.id}: {name} is not finite")


@dataclass(frozen=True)
class Branch:
    """Pi-model branch. ``tap`` is an off-nominal ratio on the from side
    (1.0 for lines); ``length`` is in meters and is zero for transformers."""

    from_bus: int
    to_bus: int
    r: float
    x: float
    b: float = 0.0
    length: float = 0.0
    rating: float = 0.0
    tap: float = 1.0

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise ValidationError(f"branch {self.label}: from and to bus coincide")
        if self.length < 0:
            raise ValidationError(f"branch {self.label}: negative length")
        if not self.tap > 0:
            raise ValidationError(f"branch {self.label}: tap ratio must be positive")

    @property
    def label(self) -> str:
        return f"{self.from_bus}-{self.to_bus}"

    @property
    def series_admittance(self) -> complex:
        if self.x == 0:
            raise DegenerateBranchError(self.label, f"branch {self.label} has X = 0")
        return 1.0 / complex(self.r, self.x)


@dataclass(frozen=True)
class PowerNetwork:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    base_mva: float = 100.0
    nominal_frequency: float = 60.0
    allow_any_frequency: bool = False

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.base_mva > 0:
            raise ValidationError("base_mva must be positive")
        if not self.nominal_frequency > 0:
            raise ValidationError("nominal frequency must be positive")
        if self.nominal_frequency not in (50.0, 60.0) and not self.allow_any_frequency:
            raise ValidationError(
                f"nominal frequency {self.nominal_frequency} Hz is neither 50 nor 60"
            )
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate bus ids")
        n_slack = sum(b.kind == "slack" for b in self.buses)
        if n_slack != 1:
            raise ValidationError(f"expected exactly one slack bus, found {n_slack}")
        known = set(ids)
        for br in self.branches:
            if br.from_bus not in known or br.to_bus not in known:
                raise ValidationError(f"branch {br.label} references a missing bus")

    @property
    def omega_s(self) -> float:
        return 2.0 * np.pi * self.nominal_frequency

    @property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)

    def index(self, bus_id: int) -> int:
        try:
            return self.bus_ids.index(bus_id)
        except ValueError:
            raise NetworkError(f"no bus with id {bus_id}") from None

    def bus(self, bus_id: int) -> Bus:
        return self.buses[self.index(bus_id)]

    def scale_branches(self, x_scale: float = 1.0, r_scale: float = 1.0) -> PowerNetwork:
        branches = tuple(replace(br, x=br.x * x_scale, r=br.r * r_scale) for br in self.branches)
        return replace(self, branches=branches)


@dataclass(frozen=True)
class AdmittanceMatrix:
    y: np.ndarray
    bus_ids: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.y)

    @property
    def angle(self) -> np.ndarray:
        return np.angle(self.y)

    def entry(self, i: int, j: int) -> complex:
        idx = self.bus_ids.index
        return complex(self.y[idx(i), idx(j)])


def branch_stamp(branch: Branch) -> tuple[complex, complex, complex, complex]:
    """(Y_ff, Y_ft, Y_tf, Y_tt) of one branch."""
    ys = branch.series_admittance
    half_b = 0.5j * branch.b
    t = branch.tap
    return (ys + half_b) / t**2, -ys / t, -ys / t, ys + half_b


def _check_connected(y: np.ndarray, labels: Sequence) -> None:
    pattern = csr_matrix(np.abs(y) > 0)
    n_comp, comp = connected_components(pattern, directed=False)
    if n_comp > 1:
        main = np.bincount(comp).argmax()
        stray = [labels[i] for i in np.flatnonzero(comp != main)]
        raise NetworkError(f"network is disconnected; isolated nodes: {stray}")


def build_admittance_matrix(network: PowerNetwork) -> AdmittanceMatrix:
    n = len(network.buses)
    y = np.zeros((n, n), dtype=complex)
    for br in network.branches:
        i, j = network.index(br.from_bus), network.index(br.to_bus)
        yff, yft, ytf, ytt = branch_stamp(br)
        y[i, i] += yff
        y[i, j] += yft
        y[j, i] += ytf
        y[j, j] += ytt
    _check_connected(y, network.bus_ids)
    return AdmittanceMatrix(y, network.bus_ids)


@dataclass(frozen=True)
class PowerFlowSolution:
    bus_ids: tuple[int, ...]
    v: np.ndarray
    delta: np.ndarray
    p: np.ndarray
    q: np.ndarray
    iterations: int
    max_mismatch: float

    @property
    def phasors(self) -> np.ndarray:
        return self.v * np.exp(1j * self.delta)


def power_injections(y: np.ndarray, v: np.ndarray, delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vc = v * np.exp(1j * delta)
    s = vc * np.conj(y @ vc)
    return s.real, s.imag


def solve_power_flow(
    network: PowerNetwork,
    tolerance: float = 1e-8,
    max_iterations: int = 20,
    v0: np.ndarray | None = None,
    delta0: np.ndarray | None = None,
) -> PowerFlowSolution:
    """Newton-Raphson in polar coordinates from a flat start (or the given
    warm start). The slack bus absorbs the residual P and Q."""
    if not tolerance > 0:
        raise ValidationError("tolerance must be positive")
    y = build_admittance_matrix(network).y
    n = y.shape[0]
    kinds = np.array([b.kind for b in network.buses])
    pv = np.flatnonzero(kinds == "generator")
    pq = np.flatnonzero(kinds == "load")
    pvpq = np.concatenate([pv, pq])
    p_sched = np.array([b.gen_p - b.load_p for b in network.buses])
    q_sched = np.array([-b.load_q for b in network.buses])

    v = np.ones(n) if v0 is None else np.array(v0, dtype=float)
    delta = np.zeros(n) if delta0 is None else np.array(delta0, dtype=float)
    for k, b in enumerate(network.buses):
        if b.kind != "load":
            v[k] = b.voltage_setpoint
    slack = int(np.flatnonzero(kinds == "slack")[0])
    delta[slack] = 0.0

    def mismatch():
        p, q = power_injections(y, v, delta)
        return np.concatenate([p[pvpq] - p_sched[pvpq], q[pq] - q_sched[pq]])

    f = mismatch()
    err = float(np.max(np.abs(f))) if f.size else 0.0
    it = 0
    while err > tolerance:
        if it >= max_iterations:
            raise PowerFlowDivergence(it, err)
        vc = v * np.exp(1j * delta)
        ibus = y @ vc
        # complex derivative form of the polar Jacobian
        ds_dth = 1j * np.diag(vc) @ np.conj(np.diag(ibus) - y @ np.diag(vc))
        ds_dv = np.diag(vc) @ np.conj(y @ np.diag(vc / v)) + np.diag(np.conj(ibus) * vc / v)
        jac = np.block([
            [ds_dth.real[np.ix_(pvpq, pvpq)], ds_dv.real[np.ix_(pvpq, pq)]],
            [ds_dth.imag[np.ix_(pq, pvpq)], ds_dv.imag[np.ix_(pq, pq)]],
        ])
        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            raise PowerFlowDivergence(it, err) from None
        delta[pvpq] += dx[: len(pvpq)]
        v[pq] += dx[len(pvpq):]
        it += 1
        f = mismatch()
        err = float(np.max(np.abs(f)))
        if not np.isfinite(err):
            raise PowerFlowDivergence(it, err)
    p, q = power_injections(y, v, delta)
    return PowerFlowSolution(network.bus_ids, v, delta, p, q, it, err)


def kron_reduce(y: np.ndarray, keep: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Eliminate every node not in ``keep``.

    Returns the reduced matrix and the reconstruction matrix R (n x len(keep))
    such that the full voltage vector is ``R @ v_keep``.
    """
    n = y.shape[0]
    keep = np.asarray(keep, dtype=int)
    elim = np.setdiff1d(np.arange(n), keep)
    recon = np.zeros((n, len(keep)), dtype=complex)
    recon[keep, np.arange(len(keep))] = 1.0
    if elim.size == 0:
        return y[np.ix_(keep, keep)].copy(), recon
    y_kk = y[np.ix_(keep, keep)]
    y_ke = y[np.ix_(keep, elim)]
    y_ek = y[np.ix_(elim, keep)]
    y_ee = y[np.ix_(elim, elim)]
    try:
        sol = np.linalg.solve(y_ee, y_ek)
    except np.linalg.LinAlgError:
        raise NetworkError("eliminated block of the admittance matrix is singular") from None
    recon[elim] = -sol
    return y_kk - y_ke @ sol, recon


@dataclass(frozen=True)
class LineSections:
    """Vectorised pi-sections carrying physical line flows.

    A branch normally maps to one section; a mid-line fault splits it in two.
    Indices refer to rows of the augmented admittance matrix.
    """

    node_a: np.ndarray
    node_b: np.ndarray
    y_series: np.ndarray
    b_shunt: np.ndarray
    tap: np.ndarray
    length: np.ndarray
    branch: np.ndarray

    def flows(self, v_full: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        va, vb = v_full[self.node_a], v_full[self.node_b]
        half = 0.5j * self.b_shunt
        ia = (self.y_series + half) / self.tap**2 * va - self.y_series / self.tap * vb
        ib = -self.y_series / self.tap * va + (self.y_series + half) * vb
        return va * np.conj(ia), vb * np.conj(ib)

    def subset(self, mask: np.ndarray) -> LineSections:
        return LineSections(*(getattr(self, f)[mask] for f in _SECTION_FIELDS))

    @staticmethod
    def concat(*parts: LineSections) -> LineSections:
        return LineSections(*(np.concatenate([getattr(p, f) for p in parts]) for f in _SECTION_FIELDS))


_SECTION_FIELDS = ("node_a", "node_b", "y_series", "b_shunt", "tap", "length", "branch")


@dataclass(frozen=True)
class DynamicNetwork:
    """Load-folded network with generator internal nodes appended.

    ``y_aug`` rows 0..n_bus-1 are the buses (network order), followed by one
    internal node per generator, followed by any event-created nodes.  The
    dynamic nodes are ``keep``; everything else is Kron-eliminated.
    ``prior`` holds the pre-fault network while a fault is active.
    """

    network: PowerNetwork
    y_aug: np.ndarray
    keep: np.ndarray
    sections: LineSections
    load_admittance: np.ndarray
    fold_voltage: np.ndarray
    labels: tuple[str, ...]
    prior: DynamicNetwork | None = None
    y_red: np.ndarray = field(repr=False, default=None)
    recon: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.y_red is None or self.recon is None:
            _check_connected(self.y_aug, self.labels)
            y_red, recon = kron_reduce(self.y_aug, self.keep)
            object.__setattr__(self, "y_red", y_red)
            object.__setattr__(self, "recon", recon)

    @property
    def n_bus(self) -> int:
        return len(self.network.buses)

    @property
    def n_nodes(self) -> int:
        return len(self.keep)

    @property
    def node_labels(self) -> tuple[str, ...]:
        return tuple(self.labels[k] for k in self.keep)

    @property
    def reduced(self) -> bool:
        return bool(np.all(self.keep >= self.n_bus))

    @property
    def fault_active(self) -> bool:
        return self.prior is not None

    def modified(self, **changes) -> DynamicNetwork:
        """Copy with some fields replaced; the reduction is recomputed."""
        return replace(self, y_red=None, recon=None, **changes)

    def full_voltages(self, v_nodes: np.ndarray) -> np.ndarray:
        return self.recon @ v_nodes

    def admittance(self) -> AdmittanceMatrix:
        return AdmittanceMatrix(self.y_red, tuple(range(self.n_nodes)))


def fold_loads_and_augment(
    network: PowerNetwork,
    solution: PowerFlowSolution,
    generators: Sequence,
    reduce: bool = True,
) -> DynamicNetwork:
    """Convert loads to constant admittances at the solved voltages and append
    one internal node per generator behind its source impedance.

    ``generators`` only need ``bus`` and ``source_impedance`` attributes.
    """
    n = len(network.buses)
    m = len(generators)
    y_bus = build_admittance_matrix(network).y
    y_load = np.zeros(n, dtype=complex)
    for k, b in enumerate(network.buses):
        if b.load_p == 0 and b.load_q == 0:
            continue
        vk = solution.v[k]
        if vk == 0:
            raise SingularFoldError(f"bus {b.id}: zero voltage, cannot fold load")
        y_load[k] = complex(b.load_p, -b.load_q) / vk**2
    y = np.zeros((n + m, n + m), dtype=complex)
    y[:n, :n] = y_bus + np.diag(y_load)
    for k, g in enumerate(generators):
        z = complex(g.source_impedance)
        if z == 0:
            raise DegenerateBranchError(f"generator at bus {g.bus}", "generator source impedance is zero")
        ys = 1.0 / z
        i, j = network.index(g.bus), n + k
        y[i, i] += ys
        y[j, j] += ys
        y[i, j] -= ys
        y[j, i] -= ys

    idx = network.index
    brs = network.branches
    sections = LineSections(
        node_a=np.array([idx(b.from_bus) for b in brs], dtype=int),
        node_b=np.array([idx(b.to_bus) for b in brs], dtype=int),
        y_series=np.array([b.series_admittance for b in brs], dtype=complex),
        b_shunt=np.array([b.b for b in brs], dtype=float),
        tap=np.array([b.tap for b in brs], dtype=float),
        length=np.array([b.length for b in brs], dtype=float),
        branch=np.arange(len(brs), dtype=int),
    )
    labels = tuple(f"bus{b.id}" for b in network.buses) + tuple(f"gen{g.bus}" for g in generators)
    keep = np.arange(n, n + m) if reduce else np.arange(n + m)
    return DynamicNetwork(network, y, keep, sections, y_load, solution.v.copy(), labels)
