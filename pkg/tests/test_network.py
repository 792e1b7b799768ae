import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planewave.errors import DegenerateBranchError, NetworkError, PowerFlowDivergence, ValidationError
from planewave.network import (
    Branch,
    Bus,
    PowerNetwork,
    branch_stamp,
    build_admittance_matrix,
    fold_loads_and_augment,
    kron_reduce,
    power_injections,
    solve_power_flow,
)


def two_bus(load_p=0.5, load_q=0.2, x=0.1, r=0.01):
    return PowerNetwork(
        [Bus(1, "slack", 1.0), Bus(2, "load", load_p=load_p, load_q=load_q)],
        [Branch(1, 2, r, x, 0.0, 1e5)],
    )


def test_series_admittance_and_zero_x():
    assert Branch(1, 2, 0.0, 0.5).series_admittance == pytest.approx(-2j)
    with pytest.raises(DegenerateBranchError, match="1-2"):
        Branch(1, 2, 0.1, 0.0).series_admittance


def test_network_validation():
    with pytest.raises(ValidationError, match="slack"):
        PowerNetwork([Bus(1), Bus(2)], [Branch(1, 2, 0, 0.1)])
    with pytest.raises(ValidationError, match="50 nor 60"):
        PowerNetwork([Bus(1, "slack"), Bus(2)], [Branch(1, 2, 0, 0.1)], nominal_frequency=55.0)
    net = PowerNetwork([Bus(1, "slack"), Bus(2)], [Branch(1, 2, 0, 0.1)], nominal_frequency=55.0,
                       allow_any_frequency=True)
    assert net.omega_s == pytest.approx(2 * np.pi * 55)
    with pytest.raises(ValidationError, match="missing bus"):
        PowerNetwork([Bus(1, "slack")], [Branch(1, 3, 0, 0.1)])


def test_admittance_rows_sum_to_shunts():
    # without shunts or taps every row of Y sums to zero
    net = PowerNetwork([Bus(1, "slack"), Bus(2), Bus(3)],
                       [Branch(1, 2, 0.01, 0.1), Branch(2, 3, 0.02, 0.2), Branch(1, 3, 0.0, 0.3)])
    y = build_admittance_matrix(net).y
    np.testing.assert_allclose(y.sum(axis=1), 0, atol=1e-12)
    np.testing.assert_allclose(y, y.T)


def test_tap_stamp():
    br = Branch(1, 2, 0.0, 0.1, tap=1.05)
    yff, yft, ytf, ytt = branch_stamp(br)
    ys = 1 / 0.1j
    assert yff == pytest.approx(ys / 1.05**2)
    assert yft == pytest.approx(-ys / 1.05) and ytf == yft
    assert ytt == pytest.approx(ys)


def test_disconnected_network():
    net = PowerNetwork([Bus(1, "slack"), Bus(2), Bus(3)], [Branch(1, 2, 0, 0.1)])
    with pytest.raises(NetworkError, match="3"):
        build_admittance_matrix(net)


def test_two_bus_power_flow_balances():
    net = two_bus()
    sol = solve_power_flow(net)
    # load bus consumes exactly its scheduled power
    assert sol.p[1] == pytest.approx(-0.5, abs=1e-8)
    assert sol.q[1] == pytest.approx(-0.2, abs=1e-8)
    # losses are r |I|^2
    i = (sol.phasors[0] - sol.phasors[1]) / complex(0.01, 0.1)
    assert sol.p.sum() == pytest.approx(0.01 * abs(i) ** 2, rel=1e-8)


def test_wscc9_power_flow_matches_published_voltages(wscc9):
    sol = solve_power_flow(wscc9.network)
    v = dict(zip(sol.bus_ids, sol.v))
    # standard 9-bus load-flow voltages
    assert v[4] == pytest.approx(1.0258, abs=1e-4)
    assert v[5] == pytest.approx(0.9956, abs=1e-4)
    assert v[6] == pytest.approx(1.0127, abs=1e-4)
    assert v[8] == pytest.approx(1.0159, abs=1e-4)
    assert sol.p[0] == pytest.approx(0.7164, abs=1e-4)


def test_power_flow_divergence_is_reported():
    with pytest.raises(PowerFlowDivergence) as info:
        solve_power_flow(two_bus(load_p=20.0, load_q=10.0))
    assert info.value.iterations > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 7), st.integers(0, 2**31 - 1))
def test_kron_reduction_preserves_boundary_behaviour(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 1.0, (n, n)) * (rng.uniform(size=(n, n)) < 0.7)
    a = np.triu(a, 1)
    a = a + a.T + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    y = -1j * a
    y[np.diag_indices(n)] = -y.sum(axis=1) + 0.05 - 0.2j  # some shunt
    keep = np.sort(rng.choice(n, size=2, replace=False))
    y_red, recon = kron_reduce(y, keep)
    v_keep = rng.normal(size=2) + 1j * rng.normal(size=2)
    v_full = recon @ v_keep
    i_full = y @ v_full
    elim = np.setdiff1d(np.arange(n), keep)
    np.testing.assert_allclose(i_full[elim], 0, atol=1e-9)
    np.testing.assert_allclose(i_full[keep], y_red @ v_keep, atol=1e-9)


def test_fold_loads_reproduces_power_flow(wscc9):
    from planewave.dynamics import equilibrium
    sol = solve_power_flow(wscc9.network)
    dyn = fold_loads_and_augment(wscc9.network, sol, wscc9.generators)
    gens, state = equilibrium(dyn, wscc9.generators, sol)
    v_bus = dyn.full_voltages(state.phasors)[: dyn.n_bus]
    np.testing.assert_allclose(v_bus, sol.phasors, atol=1e-10)
    assert dyn.node_labels == ("gen1", "gen2", "gen3")


def test_power_injections_conserve_lossless():
    y = np.array([[-10j, 10j], [10j, -10j]])
    p, q = power_injections(y, np.array([1.0, 0.98]), np.array([0.1, 0.0]))
    assert p.sum() == pytest.approx(0.0, abs=1e-12)
