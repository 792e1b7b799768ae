"""Circuit-reduced electromagnetic quantities of transmission lines: stored
field energy, the delivered/dissipated split of line power, the momentum of
the energy-carrying field and its per-unit calibration, nodal momentum
budgets and the polarization implied by the power factor."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import CalibrationError, ValidationError
from .network import Branch, PowerFlowSolution, PowerNetwork

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class EnergyBreakdown:
    """Magnitudes of the three energy terms of a line section.

    The field energy leaves the volume, which the physics writes with a leading
    minus sign; here every term is stored as a non-negative magnitude.
    """

    magnetic: float = 0.0
    electric: float = 0.0
    dissipated: float = 0.0

    @property
    def total(self) -> float:
        return self.magnetic + self.electric + self.dissipated


def line_field_energy(
    branch: Branch,
    current: complex,
    voltage: complex,
    dt: float,
    accumulator: EnergyBreakdown | None = None,
    omega_s: float = 2 * math.pi * 60.0,
) -> EnergyBreakdown:
    """Stored magnetic/electric energy at one instant plus accumulated ohmic
    loss over the step ``dt`` (per-unit energy, L = X/omega_s, C = B/omega_s)."""
    if dt < 0:
        raise ValidationError("dt must be non-negative")
    acc = accumulator or EnergyBreakdown()
    inductance = branch.x / omega_s
    capacitance = branch.b / omega_s
    i2 = abs(current) ** 2
    return EnergyBreakdown(
        magnetic=0.5 * inductance * i2,
        electric=0.5 * capacitance * abs(voltage) ** 2,
        dissipated=acc.dissipated + branch.r * i2 * dt,
    )


def phasor_power(branch: Branch, v_i: float, delta_i: float, v_j: float, delta_j: float) -> complex:
    """conj(Y) * V_i * (V_j e^{j(delta_i - delta_j)} - V_i) for the series admittance."""
    y = branch.series_admittance
    return np.conj(y) * v_i * (v_j * np.exp(1j * (delta_i - delta_j)) - v_i)


def line_power_terms(branch: Branch, v_i: float, delta_i: float, v_j: float, delta_j: float) -> tuple[float, float]:
    """Split the power of a branch seen from end i into (delivered, loss).

    delivered is the reactance term X|Y|^2 V_i (V_j e^{j(di-dj)} - V_i) taken
    as real power sent from i; loss is the ohmic term summed over both ends,
    i.e. the power dissipated in the conductor (non-negative for R >= 0).
    """
    y = branch.series_admittance
    y2 = abs(y) ** 2
    bracket_i = v_i * (v_j * np.exp(1j * (delta_i - delta_j)) - v_i)
    delivered = branch.x * y2 * bracket_i.imag
    ohmic_i = branch.r * y2 * v_i * (v_j * np.exp(1j * (delta_j - delta_i)) - v_i)
    ohmic_j = branch.r * y2 * v_j * (v_i * np.exp(1j * (delta_i - delta_j)) - v_j)
    loss = -(ohmic_i + ohmic_j).real
    return float(delivered), float(loss)


@dataclass(frozen=True)
class LineMomentum:
    line: str
    direction: tuple[int, int]
    physical: float
    per_unit: float
    flow_magnitude: float


def physical_momentum(power_w: float, length_m: float) -> float:
    """|S| * length / c^2 in kg m/s."""
    return abs(power_w) * length_m / SPEED_OF_LIGHT**2


def line_momentum(
    flow: complex,
    length: float,
    base_mva: float = 100.0,
    kappa: float = 0.0,
    line: str = "",
    direction: tuple[int, int] = (0, 0),
) -> LineMomentum:
    if length < 0:
        raise ValidationError("line length must be non-negative")
    s_pu = abs(flow)
    return LineMomentum(
        line=line,
        direction=direction,
        physical=physical_momentum(s_pu * base_mva * 1e6, length),
        per_unit=kappa * s_pu * length,
        flow_magnitude=s_pu,
    )


def section_momentum(s_a: np.ndarray, s_b: np.ndarray, length: np.ndarray, kappa: float,
                     attribution: str = "sending") -> tuple[np.ndarray, np.ndarray]:
    """Per-unit momentum of each section attributed to its a- and b-end.

    With ``sending`` attribution the whole momentum goes to the end that
    exports active power, evaluated with that end's apparent power.
    """
    a_sends = s_a.real > 0
    m_send = kappa * np.where(a_sends, np.abs(s_a), np.abs(s_b)) * length
    if attribution == "split":
        return 0.5 * m_send, 0.5 * m_send
    return np.where(a_sends, m_send, 0.0), np.where(a_sends, 0.0, m_send)


def branch_flows(network: PowerNetwork, solution: PowerFlowSolution) -> list[tuple[Branch, complex, complex]]:
    """(branch, S_from, S_to) at the solved operating point."""
    vc = solution.phasors
    out = []
    for br in network.branches:
        i, j = network.index(br.from_bus), network.index(br.to_bus)
        ys = br.series_admittance
        half = 0.5j * br.b
        t = br.tap
        i_f = (ys + half) / t**2 * vc[i] - ys / t * vc[j]
        i_t = -ys / t * vc[i] + (ys + half) * vc[j]
        out.append((br, complex(vc[i] * np.conj(i_f)), complex(vc[j] * np.conj(i_t))))
    return out


def flow_length_sum(network: PowerNetwork, solution: PowerFlowSolution) -> float:
    """Sum over lines of sending-end |S| (pu) times length (m)."""
    total = 0.0
    for br, s_f, s_t in branch_flows(network, solution):
        total += (abs(s_f) if s_f.real > 0 else abs(s_t)) * br.length
    return total


def generator_momentum(H: float, rating: float, base_mva: float) -> float:
    """M = 2 H S / S_base, in seconds on the system base."""
    return 2.0 * H * rating / base_mva


def system_share(kappa: float, network: PowerNetwork, solution: PowerFlowSolution,
                 generators: Sequence, H: float | None = None) -> float:
    """Line share of total system momentum; ``H`` overrides every machine's
    inertia constant (homogeneous-inertia studies)."""
    m_g = sum(generator_momentum(g.H if H is None else H, g.rating, network.base_mva) for g in generators)
    m_l = kappa * flow_length_sum(network, solution)
    total = m_g + m_l
    return m_l / total if total > 0 else 0.0


def calibrate_momentum_constant(network: PowerNetwork, solution: PowerFlowSolution, generators: Sequence,
                                H_ref: float = 6.0, target_share: float = 0.102) -> float:
    """kappa such that the system line share equals ``target_share`` at
    homogeneous H = H_ref.

    The share is kappa*L / (M_g + kappa*L), strictly increasing in kappa, so
    the inverse is closed form.
    """
    if not 0 <= target_share < 1:
        raise CalibrationError("target share must lie in [0, 1)")
    if target_share == 0:
        return 0.0
    flow_len = flow_length_sum(network, solution)
    if flow_len <= 0:
        raise CalibrationError("no loaded line with positive length; target share unreachable")
    m_g = sum(generator_momentum(H_ref, g.rating, network.base_mva) for g in generators)
    return target_share * m_g / ((1.0 - target_share) * flow_len)


@dataclass(frozen=True)
class MomentumBudget:
    node: int
    generator_momentum: float
    line_momentum: float

    @property
    def total(self) -> float:
        return self.generator_momentum + self.line_momentum

    @property
    def em_share(self) -> float:
        return self.line_momentum / self.total if self.total > 0 else 0.0


def nodal_momentum(node: int, generators: Sequence, line_flows: Sequence, kappa: float,
                   base_mva: float = 100.0, attribution: str = "sending") -> MomentumBudget:
    """Momentum budget of one node.

    ``line_flows`` items are (from_node, to_node, S_from, S_to, length_m);
    a line counts toward the node that exports active power over it.
    """
    m_g = sum(generator_momentum(g.H, g.rating, base_mva) for g in generators if g.bus == node)
    m_l = 0.0
    for a, b, s_a, s_b, length in line_flows:
        if node not in (a, b):
            continue
        m_a, m_b = section_momentum(np.array([s_a]), np.array([s_b]), np.array([length]), kappa, attribution)
        m_l += float(m_a[0] if node == a else m_b[0])
    return MomentumBudget(node, m_g, m_l)


@dataclass(frozen=True)
class PolarizationState:
    power_factor: float
    kind: str
    rotation: str
    leading_or_lagging: str


def classify_polarization(s: complex, eps_pol: float = 1e-3) -> PolarizationState:
    """Linear when reactive power is negligible; otherwise elliptical, with
    lagging (Q > 0) mapped to clockwise and leading to counterclockwise."""
    mag = abs(s)
    if mag == 0:
        raise ValidationError("polarization is undefined for zero apparent power")
    pf = abs(s.real) / mag
    if abs(s.imag) <= eps_pol * mag:
        return PolarizationState(pf, "linear", "none", "unity")
    if s.imag > 0:
        return PolarizationState(pf, "elliptical", "clockwise", "lagging")
    return PolarizationState(pf, "elliptical", "counterclockwise", "leading")


def equivalent_units(total_momentum: float, H_ref: float = 6.0, S_ref: float = 500.0,
                     base_mva: float = 100.0) -> float:
    """How many reference machines (H_ref on S_ref MVA) carry the same momentum."""
    if not (H_ref > 0 and S_ref > 0):
        raise ValidationError("reference unit needs positive H and rating")
    return total_momentum / generator_momentum(H_ref, S_ref, base_mva)


def with_homogeneous_inertia(generators: Sequence, H: float) -> tuple:
    return tuple(replace(g, H=H) for g in generators)
