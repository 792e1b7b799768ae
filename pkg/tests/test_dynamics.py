import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planewave.dynamics import (
    DampingSpec,
    Event,
    Generator,
    ModelConfig,
    SystemState,
    apply_event,
    classical_swing_rhs,
    damping_power,
    electrical_power,
    integrate,
    lossless_energy,
    node_budgets,
    plane_wave_rhs,
    validate_events,
)
from planewave.errors import (
    NetworkError,
    NumericalBlowup,
    ProtocolError,
    SingularMomentumError,
    ValidationError,
)
from planewave.scenarios import GFMSpec, prepare, prepare_case, replace_with_gfm

OMEGA_S = 2 * math.pi * 60


# ---------------------------------------------------------------- damping

def test_constant_damping():
    assert damping_power(DampingSpec("constant_D", D=2.0), 0.5) == (1.0, 0.0)
    assert damping_power(DampingSpec("none"), 0.5) == (0.0, 0.0)


def test_droop_steady_state_output():
    # 5 % droop, 1 % frequency deviation: full-power fraction 0.2 after the lag settles
    spec = DampingSpec("droop_with_delay", droop=0.05, delay=0.005)
    x, dt = 0.0, 1e-5
    d_omega = 0.01 * OMEGA_S
    for _ in range(int(5 * spec.delay / dt) * 2):
        _, dx = damping_power(spec, d_omega, x)
        x += dt * dx
    assert x == pytest.approx(0.2, rel=1e-4)
    direct, _ = damping_power(replace(spec, delay=0.0), d_omega)
    assert direct == pytest.approx(0.2)


def test_damping_spec_validation():
    with pytest.raises(ValidationError):
        DampingSpec("droop_with_delay", droop=0.0)
    with pytest.raises(ValidationError):
        DampingSpec("magic")
    with pytest.raises(ValidationError):
        DampingSpec("constant_D", delay=-1)


def test_generator_validation():
    with pytest.raises(ValidationError, match="source"):
        Generator(1, "SG")
    with pytest.raises(ValidationError, match="droop"):
        Generator(1, "GFM_droop", source_impedance=0.1j)
    with pytest.raises(ValidationError, match="technology"):
        Generator(1, "diesel", source_impedance=0.1j)
    with pytest.raises(ValidationError, match="H"):
        Generator(1, H=-1, source_impedance=0.1j)
    g = Generator(1, H=3.0, rating=200.0, source_impedance=0.1j)
    assert g.momentum(100.0) == pytest.approx(12.0)


# ---------------------------------------------------------------- events

def test_event_protocol():
    validate_events([Event.fault(0.1, "5-7"), Event.clear(0.2)])
    with pytest.raises(ProtocolError):
        validate_events([Event.clear(0.1)])
    with pytest.raises(ProtocolError):
        validate_events([Event.fault(0.1, "5-7")])
    with pytest.raises(ValidationError):
        validate_events([Event.load_step(0.2, 5, 0.1), Event.load_step(0.1, 5, 0.1)])
    with pytest.raises(ValidationError):
        Event.fault(0.1, "5-7", position=1.5)


def test_fault_then_clear_restores_matrices(prep9):
    dyn = prep9.dyn_net
    faulted = apply_event(dyn, Event.fault(0.0, "5-7"))
    assert faulted.fault_active and faulted.y_aug.shape[0] == dyn.y_aug.shape[0] + 1
    cleared = apply_event(faulted, Event.clear(0.0))
    assert np.array_equal(cleared.y_aug, dyn.y_aug)
    assert np.array_equal(cleared.y_red, dyn.y_red)
    with pytest.raises(ProtocolError):
        apply_event(dyn, Event.clear(0.0))


def test_fault_reversed_label_and_end_fault(prep9):
    dyn = prep9.dyn_net
    mid = apply_event(dyn, Event.fault(0.0, "7-5"))
    assert mid.labels[-1] == "fault@7-5"
    end = apply_event(dyn, Event.fault(0.0, "5-7", position=0.0))
    assert end.y_aug.shape == dyn.y_aug.shape
    # bolted fault collapses the faulted bus voltage
    v = end.full_voltages(prep9.initial.phasors)
    assert abs(v[dyn.network.index(5)]) < 1e-3


def test_load_step_uses_pre_event_voltage(prep9):
    dyn = prep9.dyn_net
    k = dyn.network.index(5)
    after = apply_event(dyn, Event.load_step(0.0, 5, 0.09), prep9.initial.phasors)
    v5 = abs(dyn.full_voltages(prep9.initial.phasors)[k])
    assert after.y_aug[k, k] - dyn.y_aug[k, k] == pytest.approx(0.09 / v5**2, rel=1e-12)
    assert v5 == pytest.approx(0.9956, abs=1e-4)


def test_line_trip_and_radial_trip(prep9):
    dyn = prep9.dyn_net
    tripped = apply_event(dyn, Event.trip(0.0, "6-9"))
    assert len(tripped.sections.branch) == len(dyn.sections.branch) - 1
    with pytest.raises(NetworkError):
        apply_event(dyn, Event.trip(0.0, "1-4"))
    # the integrator surfaces the same error before stepping
    with pytest.raises(NetworkError):
        integrate(ModelConfig(), dyn, prep9.generators, prep9.initial, [Event.trip(5.0, "1-4")], horizon=6.0)


def test_event_snapping_warns(prep9):
    with pytest.warns(UserWarning, match="snapped"):
        integrate(ModelConfig(), prep9.dyn_net, prep9.generators, prep9.initial,
                  [Event.load_step(0.0105, 5, 0.09)], dt=1e-3, horizon=0.02)


# ---------------------------------------------------------------- right-hand sides

def random_state(rng, n, base):
    return SystemState(0.0, base.delta + rng.normal(0, 0.3, n), rng.normal(0, 2.0, n),
                       base.v * rng.uniform(0.9, 1.1, n), np.zeros(n))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_reduction_to_classical_swing_pointwise(prep9, seed):
    st_ = random_state(np.random.default_rng(seed), 3, prep9.initial)
    pw = plane_wave_rhs(st_, prep9.dyn_net, prep9.generators, budgets=None, voltage="algebraic")
    cl = classical_swing_rhs(st_, prep9.dyn_net, prep9.generators)
    np.testing.assert_allclose(pw, cl, rtol=0, atol=1e-12 * max(1.0, np.abs(cl).max()))


def test_equilibrium_is_fixed_point(prep9, prep39, kappa):
    for prep in (prep9, prep39):
        budgets = node_budgets(prep.initial, prep.dyn_net, prep.generators, kappa)
        d = plane_wave_rhs(prep.initial, prep.dyn_net, prep.generators, budgets)
        assert np.abs(d).max() < 1e-10
        assert np.abs(classical_swing_rhs(prep.initial, prep.dyn_net, prep.generators)).max() < 1e-10


def test_budgets_change_momentum_not_balance(prep9, kappa):
    budgets = node_budgets(prep9.initial, prep9.dyn_net, prep9.generators, kappa)
    assert all(b.line_momentum > 0 for b in budgets)
    assert sum(b.line_momentum for b in budgets) / sum(b.total for b in budgets) < 0.2


def test_momentum_scales_acceleration(prep9, kappa):
    st_ = replace(prep9.initial, delta=prep9.initial.delta + np.array([0.05, 0.0, 0.0]))
    no_line = plane_wave_rhs(st_, prep9.dyn_net, prep9.generators)
    budgets = node_budgets(st_, prep9.dyn_net, prep9.generators, kappa)
    with_line = plane_wave_rhs(st_, prep9.dyn_net, prep9.generators, budgets)
    m_g = np.array([b.generator_momentum for b in budgets])
    m_t = np.array([b.total for b in budgets])
    np.testing.assert_allclose(with_line[3:6], no_line[3:6] * m_g / m_t, rtol=1e-12)


def test_zero_momentum_with_imbalance_is_an_error(prep9):
    gens = tuple(replace(g, H=0.0) if k == 0 else g for k, g in enumerate(prep9.generators))
    st_ = replace(prep9.initial, delta=prep9.initial.delta + np.array([0.1, 0.0, 0.0]))
    with pytest.raises(SingularMomentumError):
        plane_wave_rhs(st_, prep9.dyn_net, gens)


def test_electrical_power_matches_setpoints_at_equilibrium(prep9):
    p = electrical_power(prep9.initial, prep9.dyn_net, prep9.generators)
    np.testing.assert_allclose(p, [g.P_set for g in prep9.generators], atol=1e-12)


# ---------------------------------------------------------------- integration

def test_determinism(prep9, kappa):
    ev = [Event.fault(0.1, "5-7"), Event.clear(0.183)]
    a = prep9.simulate(ModelConfig(kappa=kappa), ev, horizon=0.5)
    b = prep9.simulate(ModelConfig(kappa=kappa), ev, horizon=0.5)
    for name in ("delta", "omega", "v", "m_line", "branch_flow"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_synchronisation_after_load_step(prep9, kappa):
    tr = prep9.simulate(ModelConfig(kappa=kappa), [Event.load_step(0.1, 5, 0.09)], horizon=15.0,
                        record_flows=False)
    assert np.ptp(tr.omega[-1]) / OMEGA_S < 1e-6
    assert tr.mean_frequency()[-1] < 60.0


def test_frozen_budgets_equal_dynamic_at_start(prep9, kappa):
    ev = [Event.load_step(0.01, 5, 0.09)]
    a = prep9.simulate(ModelConfig(kappa=kappa), ev, horizon=0.011, record_flows=False)
    b = prep9.simulate(ModelConfig(kappa=kappa, frozen_budgets=True), ev, horizon=0.011, record_flows=False)
    np.testing.assert_array_equal(a.m_line[0], b.m_line[0])
    np.testing.assert_array_equal(a.omega[:11], b.omega[:11])
    # after the step the dynamic budgets follow the new flows, the frozen ones do not
    assert not np.array_equal(a.m_line[-1], b.m_line[-1])
    np.testing.assert_array_equal(b.m_line[-1], b.m_line[0])


def test_energy_conserved_in_lossless_network(wscc9):
    net = wscc9.network
    buses = [replace(b, load_p=0.0, load_q=0.0, gen_p=0.0) for b in net.buses]
    lossless = replace(net, buses=buses).scale_branches(r_scale=0.0)
    gens = tuple(replace(g, damping=DampingSpec("none")) for g in wscc9.generators)
    prep = prepare(lossless, gens)
    st_ = replace(prep.initial, omega=np.array([0.5, -0.3, 0.2]))
    tr = integrate(ModelConfig(kappa=0.0, voltage="algebraic"), prep.dyn_net, prep.generators, st_,
                   dt=1e-3, horizon=10.0, record_flows=False)
    e = lossless_energy(tr, prep.dyn_net, prep.generators)
    assert np.ptp(tr.delta[:, 0]) > 0.5  # a real swing, not a trivial run
    assert np.abs(e - e[0]).max() < 1e-6


def test_energy_function_rejects_lossy_network(prep9):
    tr = prep9.simulate(ModelConfig(), (), horizon=0.0)
    with pytest.raises(ValidationError):
        lossless_energy(tr, prep9.dyn_net, prep9.generators)


def test_blowup_is_reported(prep9):
    gens = tuple(replace(g, T_v=1e-9) for g in prep9.generators)
    with pytest.raises(NumericalBlowup) as info:
        integrate(ModelConfig(), prep9.dyn_net, gens, prep9.initial, [Event.load_step(0.01, 5, 0.5)],
                  dt=1e-2, horizon=1.0)
    assert info.value.t_last >= 0.0


def test_gfm_and_gfl_mixes_run(wscc9, kappa):
    base = wscc9.network.base_mva
    gens = replace_with_gfm(wscc9.generators, [1], base, GFMSpec())
    gens = tuple(replace(g, tech="GFL", H=0.0, damping=DampingSpec("none")) if k == 2 else g
                 for k, g in enumerate(gens))
    prep = prepare_case(wscc9, gens)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tr = prep.simulate(ModelConfig(kappa=kappa), [Event.load_step(0.1, 5, 0.09)], horizon=3.0)
    assert np.all(np.isfinite(tr.omega))
    assert np.abs(tr.omega[-1]).max() < 0.1 * OMEGA_S


def test_current_limit_clips_fault_output(wscc9, kappa):
    base = wscc9.network.base_mva
    ev = [Event.fault(0.05, "5-7"), Event.clear(0.1)]
    runs = []
    for limit in (math.inf, 1.2):
        gens = replace_with_gfm(wscc9.generators, [1, 2], base, GFMSpec(i_limit=limit))
        runs.append(prepare_case(wscc9, gens).simulate(ModelConfig(kappa=kappa), ev, horizon=0.2))
    assert not np.array_equal(runs[0].omega, runs[1].omega)
