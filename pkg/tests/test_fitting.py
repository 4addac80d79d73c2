import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memstp import fitting, tm


# ---------------------------------------------------------------------------
# minimize_simplex
# ---------------------------------------------------------------------------


def test_simplex_1d_quadratic():
    res = fitting.minimize_simplex(lambda p: (p[0] - 3.0) ** 2, [0.0])
    assert res.converged
    assert res.params["x0"] == pytest.approx(3.0, abs=1e-6)


def test_simplex_2d_quadratic():
    res = fitting.minimize_simplex(
        lambda p: (p[0] - 1.0) ** 2 + (p[1] + 2.0) ** 2, [0.0, 0.0])
    assert res.converged
    assert res.params["x0"] == pytest.approx(1.0, abs=1e-6)
    assert res.params["x1"] == pytest.approx(-2.0, abs=1e-6)


def test_simplex_rosenbrock():
    res = fitting.minimize_simplex(
        lambda p: (1 - p[0]) ** 2 + 100.0 * (p[1] - p[0] ** 2) ** 2,
        [-1.2, 1.0], x_tol=1e-9, f_tol=1e-18, max_iter=5000)
    assert res.converged
    assert res.params["x0"] == pytest.approx(1.0, abs=1e-3)
    assert res.params["x1"] == pytest.approx(1.0, abs=1e-3)


def test_simplex_respects_bounds_exactly():
    res = fitting.minimize_simplex(
        lambda p: (p[0] + 5.0) ** 2, [0.5], bounds=[(0.0, 1.0)])
    assert 0.0 <= res.params["x0"] <= 1.0
    assert res.params["x0"] == pytest.approx(0.0, abs=1e-6)


def test_simplex_start_outside_bounds_rejected():
    with pytest.raises(ValueError):
        fitting.minimize_simplex(lambda p: p[0] ** 2, [2.0], bounds=[(0.0, 1.0)])


def test_simplex_iteration_cap_flags_nonconvergence():
    res = fitting.minimize_simplex(
        lambda p: (p[0] - 3.0) ** 2, [0.0], max_iter=2)
    assert not res.converged
    assert res.iterations == 2


def test_simplex_best_value_never_increases():
    history = []

    def objective(p):
        val = (1 - p[0]) ** 2 + 100.0 * (p[1] - p[0] ** 2) ** 2
        history.append(val)
        return val

    fitting.minimize_simplex(objective, [-1.2, 1.0], max_iter=500)
    best = math.inf
    bests = []
    for v in history:
        best = min(best, v)
        bests.append(best)
    assert all(a >= b for a, b in zip(bests, bests[1:]))


# ---------------------------------------------------------------------------
# fit_decay
# ---------------------------------------------------------------------------


def test_fit_decay_noiseless_exact():
    t = np.arange(0, 0.5, 1e-3)
    g = 2.9e-6 + 0.2e-6 * np.exp(-t / 0.1)
    res = fitting.fit_decay(t, g, 2.9e-6)
    assert res.converged
    assert res.params["tau_d"] == pytest.approx(0.1, rel=1e-6)
    assert res.params["amplitude"] == pytest.approx(0.2e-6, rel=1e-6)


def test_fit_decay_constant_trace_fails():
    t = np.arange(0, 0.5, 1e-3)
    res = fitting.fit_decay(t, np.full(t.size, 2.9e-6), 2.9e-6)
    assert not res.converged


def test_fit_decay_noisy_within_two_percent():
    rng = np.random.default_rng(12)
    t = np.linspace(0, 0.5, 500)
    g = 2.9e-6 + 0.2e-6 * np.exp(-t / 0.1) * (
        1.0 + 0.01 * rng.standard_normal(t.size))
    res = fitting.fit_decay(t, g, 2.9e-6)
    assert res.converged
    assert res.params["tau_d"] == pytest.approx(0.1, rel=0.02)


# ---------------------------------------------------------------------------
# fit_tm
# ---------------------------------------------------------------------------

VARIED_SPIKES = [0.0, 0.15, 0.55, 0.7, 1.3]


def test_fit_tm_round_trip_noiseless():
    true = tm.TMParams(a=1.0, u_cap=0.1, tau_f=0.5, tau_rec=0.02)
    peaks = tm.peaks_for_train(true, VARIED_SPIKES)
    res = fitting.fit_tm(peaks, VARIED_SPIKES)
    assert res.params["u_cap"] == pytest.approx(0.1, rel=0.10)
    assert res.params["tau_f"] == pytest.approx(0.5, rel=0.10)


def test_fit_tm_depressing_round_trip():
    true = tm.TMParams(a=2.0, u_cap=0.45, tau_f=0.12, tau_rec=0.3)
    peaks = tm.peaks_for_train(true, VARIED_SPIKES)
    res = fitting.fit_tm(peaks, VARIED_SPIKES)
    assert res.params["u_cap"] == pytest.approx(0.45, rel=0.10)
    assert res.params["tau_f"] == pytest.approx(0.12, rel=0.10)


def test_fit_tm_constant_peaks_flagged_degenerate():
    res = fitting.fit_tm([0.2, 0.2, 0.2, 0.2], [0.0, 0.4, 0.8, 1.2])
    assert not res.converged


def test_fit_tm_noise_floor():
    rng = np.random.default_rng(3)
    true = tm.TMParams(a=1.0, u_cap=0.1, tau_f=0.5, tau_rec=0.02)
    clean = np.array(tm.peaks_for_train(true, VARIED_SPIKES))
    noisy = clean * (1.0 + 0.01 * rng.standard_normal(clean.size))
    res = fitting.fit_tm(list(noisy), VARIED_SPIKES)
    noise_var = float(np.mean((noisy - clean) ** 2))
    assert res.sse / len(noisy) <= 3.0 * max(noise_var, 1e-30)


def test_fit_tm_bad_inputs_rejected():
    with pytest.raises(ValueError):
        fitting.fit_tm([0.1], [0.0])
    with pytest.raises(ValueError):
        fitting.fit_tm([0.1, 0.2], [0.4, 0.4])


# ---------------------------------------------------------------------------
# fit_amplitude_curve
# ---------------------------------------------------------------------------


def test_fit_amplitude_round_trip():
    v = np.array([1.5, 2.0, 2.5, 3.0, 3.5, 4.0])
    y = 0.05 * (np.exp((v - 1.0) / 1.5) - 1.0)
    res = fitting.fit_amplitude_curve(list(zip(v, y)), v_th=1.0)
    assert res.params["c_amp"] == pytest.approx(0.05, rel=0.05)
    assert res.params["v0"] == pytest.approx(1.5, rel=0.05)


def test_fit_amplitude_two_points_rejected():
    with pytest.raises(ValueError):
        fitting.fit_amplitude_curve([(2.0, 0.1), (3.0, 0.2)], v_th=1.0)


def test_fit_amplitude_all_zero_degenerate():
    res = fitting.fit_amplitude_curve(
        [(2.0, 0.0), (3.0, 0.0), (4.0, 0.0)], v_th=1.0)
    assert not res.converged
    assert res.params["c_amp"] == 0.0


@given(
    c_amp=st.floats(0.005, 0.5),
    v0=st.floats(0.5, 4.0),
)
@settings(max_examples=20, deadline=None)
def test_fit_amplitude_round_trip_property(c_amp, v0):
    v = np.array([1.5, 2.0, 2.5, 3.0, 3.5, 4.0])
    y = c_amp * (np.exp((v - 1.0) / v0) - 1.0)
    res = fitting.fit_amplitude_curve(list(zip(v, y)), v_th=1.0)
    assert res.params["c_amp"] == pytest.approx(c_amp, rel=0.05)
    assert res.params["v0"] == pytest.approx(v0, rel=0.05)
