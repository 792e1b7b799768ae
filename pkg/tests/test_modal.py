import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planewave.errors import DegenerateSignalError, ValidationError
from planewave.modal import (
    PronyMode,
    TimeSeries,
    damping_ratio,
    eigen_migration,
    prony_fit,
    reconstruct,
    select_order,
)

DT = 0.01
TWO_MODES = ((-0.2, 2 * math.pi * 0.5, 1.0, 0.3), (-0.6, 2 * math.pi * 1.3, 0.5, -1.0))


def synth(modes, n=1000, dt=DT, offset=0.0):
    t = dt * np.arange(n)
    x = sum(a * np.exp(s * t) * np.cos(w * t + p) for s, w, a, p in modes)
    return TimeSeries(dt, x + offset)


def test_single_mode_recovered():
    modes = prony_fit(synth([(-0.5, 4.0, 2.0, 0.7)]), 2)
    m = modes[0]
    assert (m.sigma, m.omega) == (pytest.approx(-0.5, abs=1e-9), pytest.approx(4.0, abs=1e-9))
    assert m.amplitude == pytest.approx(2.0, rel=1e-8)
    assert m.phase == pytest.approx(0.7, abs=1e-8)


def test_two_modes_noise_free():
    modes = sorted(prony_fit(synth(TWO_MODES, offset=60.0), 4), key=lambda m: m.omega)
    for m, (s, w, a, _) in zip(modes, TWO_MODES):
        assert abs(m.sigma - s) < 1e-6 and abs(m.omega - w) < 1e-6
        assert m.amplitude == pytest.approx(a, rel=1e-6)


def test_reconstruction_round_trip():
    series = synth(TWO_MODES)
    modes = prony_fit(series, 4, detrend="none")
    np.testing.assert_allclose(reconstruct(modes, len(series), DT), series.samples, atol=1e-8)


def test_noisy_fit_with_rank_truncation():
    rng = np.random.default_rng(7)
    clean = synth(TWO_MODES, n=2000)
    rms = np.sqrt(np.mean(clean.samples**2))
    errs = []
    for _ in range(20):
        noisy = TimeSeries(DT, clean.samples + rng.normal(0, rms * 10 ** (-60 / 20), clean.samples.size))
        top = sorted(prony_fit(noisy, 40, rank=5)[:2], key=lambda m: m.omega)
        for m, (s, w, _, _) in zip(top, TWO_MODES):
            errs += [abs(m.sigma - s) / abs(s), abs(m.omega - w) / w]
    assert np.median(errs) < 0.01


def test_damping_ratio_spot_value():
    assert damping_ratio(PronyMode(-1.0, 1.0, 1.0, 0.0)) == pytest.approx(0.70711, abs=1e-5)
    assert PronyMode(-1.0, 1.0, 1.0, 0.0).zeta == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(ValidationError):
        damping_ratio(PronyMode(0.0, 0.0, 1.0, 0.0))


@settings(max_examples=50)
@given(st.floats(-5, -0.01), st.floats(0.01, 50))
def test_damping_ratio_bounds(sigma, omega):
    z = damping_ratio(PronyMode(sigma, omega, 1.0, 0.0))
    assert 0 < z < 1


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.0, -0.05), st.floats(1.0, 15.0), st.floats(0.1, 5.0), st.floats(-3.0, 3.0))
def test_single_mode_property(sigma, omega, amp, phase):
    m = prony_fit(synth([(sigma, omega, amp, phase)], n=600), 2)[0]
    assert m.sigma == pytest.approx(sigma, abs=1e-6)
    assert m.omega == pytest.approx(omega, abs=1e-6)


def test_constant_signal_with_no_detrend():
    m = prony_fit(TimeSeries(DT, np.full(200, 3.0)), 1, detrend="none")[0]
    assert (m.sigma, m.omega, m.amplitude, m.phase) == (pytest.approx(0, abs=1e-9), 0.0, pytest.approx(3.0), 0.0)


def test_degenerate_inputs():
    with pytest.raises(DegenerateSignalError):
        prony_fit(TimeSeries(DT, np.full(200, 3.0)), 2)
    with pytest.raises(ValidationError, match="samples"):
        prony_fit(synth(TWO_MODES, n=20), 4)
    with pytest.raises(DegenerateSignalError):
        prony_fit(synth([(-0.5, 4.0, 1.0, 0.0)], n=400), 6)  # over-specified, noise free
    with pytest.raises(ValidationError):
        TimeSeries(DT, [1.0, np.nan])
    with pytest.raises(ValidationError):
        prony_fit(synth(TWO_MODES), 4, detrend="cubic")


def test_window_selects_inclusive_range():
    s = TimeSeries(0.1, np.arange(11.0))
    w = s.window(0.3, 0.7)
    assert w.samples.tolist() == [3.0, 4.0, 5.0, 6.0, 7.0]
    assert w.start_time == pytest.approx(0.3)


def test_select_order():
    assert select_order(synth([(-0.3, 5.0, 1.0, 0.0)]), 0.999).order == 2
    sel = select_order(synth(TWO_MODES, offset=60.0), 0.9999)
    assert sel.order == 4 and sel.dominant_mode
    noise = TimeSeries(DT, np.random.default_rng(0).normal(size=800))
    sel = select_order(noise, 0.9)
    assert sel.order > 50 and not sel.dominant_mode


def test_migration_pairs_and_signature():
    send = prony_fit(synth(TWO_MODES), 4)
    slower = [(s * 1.5, w * 1.1, a, p) for s, w, a, p in TWO_MODES]
    recv = prony_fit(synth(slower), 4)
    rep = eigen_migration(send, recv)
    assert len(rep.pairs) == 2 and not rep.unpaired_send and not rep.unpaired_recv
    assert rep.reduced_inertia_signature
    assert all(p.d_sigma < 0 and p.d_omega > 0 for p in rep.pairs)
    back = eigen_migration(recv, send)
    assert not back.reduced_inertia_signature
    with pytest.raises(ValidationError):
        eigen_migration([], recv)


def test_migration_with_unequal_counts():
    send = prony_fit(synth(TWO_MODES), 4)
    recv = prony_fit(synth(TWO_MODES[:1]), 2)
    rep = eigen_migration(send, recv)
    assert len(rep.pairs) == 1 and len(rep.unpaired_send) == 1
    assert rep.pairs[0].send.omega == pytest.approx(TWO_MODES[0][1])
