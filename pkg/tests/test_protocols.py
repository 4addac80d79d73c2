import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memstp import device as dev
from memstp import protocols as pr
from memstp.device import DeviceParams, EventLabel, Mode


@pytest.fixture
def params():
    return DeviceParams()


def make_plan(**kw):
    base = dict(train=pr.PulseTrain(n=3, v=-4.0, w=1e-5, t_int=0.4),
                repeats=2, t_rec=10.0)
    base.update(kw)
    return pr.ExperimentPlan(**base)


# ---------------------------------------------------------------------------
# type invariants
# ---------------------------------------------------------------------------


def test_pulse_train_validation():
    with pytest.raises(ValueError):
        pr.PulseTrain(n=0, v=-4.0, w=1e-5, t_int=0.4)
    with pytest.raises(ValueError):
        pr.PulseTrain(n=3, v=-4.0, w=0.5, t_int=0.4)


def test_plan_validation():
    with pytest.raises(ValueError):
        make_plan(repeats=0)
    with pytest.raises(ValueError):
        make_plan(t_rec=0.5)  # shorter than the train


def test_plan_read_probe_must_be_subthreshold(params):
    plan = make_plan(read_v=2.0)
    with pytest.raises(ValueError, match="read_v"):
        pr.run_protocol(dev.initial_state(params), params, plan,
                        np.random.default_rng(0))


# ---------------------------------------------------------------------------
# run_protocol
# ---------------------------------------------------------------------------


def test_record_count_and_indices(params):
    records, _ = pr.run_protocol(
        dev.initial_state(params), params, make_plan(repeats=2),
        np.random.default_rng(0))
    assert [r.index for r in records] == [0, 1]
    assert all(len(r.peaks) == 3 for r in records)


def test_fig2_protocol_g0_bounds(params):
    plan = make_plan(repeats=600)
    records, _ = pr.run_protocol(
        dev.initial_state(params), params, plan, np.random.default_rng(1))
    assert len(records) == 600
    for r in records:
        assert params.g_min <= r.g0 <= params.g_max


def test_label_matches_classify_event(params):
    records, _ = pr.run_protocol(
        dev.initial_state(params), params, make_plan(repeats=100),
        np.random.default_rng(2))
    for r in records:
        assert r.label is dev.classify_event(r.g0, r.g_post)


def test_long_recovery_means_g0_tracks_equilibrium(params):
    # t_rec = 100 * tau_d_max: volatile part fully relaxed at the next read
    plan = make_plan(repeats=20, t_rec=100.0 * params.tau_d_max)
    records, _ = pr.run_protocol(
        dev.initial_state(params), params, plan, np.random.default_rng(3))
    for r in records:
        peak = max(r.peaks) - r.g_eq_after  # volatile excursion scale
        assert peak > 0.0
        assert abs(r.g0 - r.g_eq_before) < 0.01 * peak


def test_saturating_events_have_lower_g_post(params):
    records, _ = pr.run_protocol(
        dev.initial_state(params), params, make_plan(repeats=400),
        np.random.default_rng(4))
    sat = [r for r in records if r.mode is Mode.SATURATING]
    assert sat, "expected some saturating events in 400 repeats"
    for r in sat:
        assert r.label is EventLabel.STP_S
        assert r.g_eq_after < r.g_eq_before


def test_drift_and_restore(params):
    # drift preset: rises past g_c + 2 sigma, then saturating events restore
    plan = pr.ExperimentPlan(train=pr.PulseTrain(n=3, v=4.0, w=1e-5, t_int=0.2),
                             repeats=150, t_rec=20.0)
    records, _ = pr.run_protocol(
        dev.initial_state(params), params, plan, np.random.default_rng(7))
    g0s = np.array([r.g0 for r in records])
    thr = params.g_c + 2.0 * params.sigma_s
    above = np.nonzero(g0s > thr)[0]
    assert above.size > 0, "g0 never exceeded g_c + 2 sigma"
    k = int(above[0])
    window = records[k:k + 20]
    assert any(r.mode is Mode.SATURATING and r.g_eq_after < r.g_eq_before
               for r in window)
    assert all(max(r.peaks) <= params.g_max + 1e-18 for r in records)


def test_train_trace_shows_peaks_and_relaxation(params):
    train = pr.PulseTrain(n=3, v=-4.0, w=1e-5, t_int=0.4)
    state, trace = pr.train_trace(
        dev.initial_state(params), params, train, 0.0, 1e-3, tail=2.0)
    assert trace.kind == "conductance"
    # pulses lift the conductance above the starting level
    assert float(np.max(trace.values)) > params.g_eq0
    # the tail relaxes back toward the (possibly stepped) equilibrium
    assert trace.values[-1] == pytest.approx(state.g_eq, rel=1e-2)


# ---------------------------------------------------------------------------
# bin_statistics
# ---------------------------------------------------------------------------


def _record(g0, label=EventLabel.STP_F):
    return pr.EventRecord(index=0, g0=g0, g_post=g0, peaks=(g0,), label=label,
                          mode=Mode.FACILITATING, g_eq_before=g0, g_eq_after=g0)


def test_bin_width_17_bins():
    spec = pr.BinSpec(lo=2.85e-6, hi=3.1e-6, n_bins=17)
    assert spec.width == pytest.approx(0.0147059e-6, rel=1e-4)


def test_bin_boundaries():
    spec = pr.BinSpec(lo=2.85e-6, hi=3.1e-6, n_bins=17)
    stats = pr.bin_statistics([_record(2.85e-6), _record(3.1e-6)], spec)
    assert stats.counts[0] == 1
    assert stats.counts[16] == 1


def test_bin_overflow_underflow_not_dropped():
    spec = pr.BinSpec(lo=2.85e-6, hi=3.1e-6, n_bins=17)
    stats = pr.bin_statistics(
        [_record(2.0e-6), _record(3.5e-6), _record(2.9e-6)], spec)
    assert stats.underflow == 1
    assert stats.overflow == 1
    assert int(stats.counts.sum()) == 1


def test_bins_probabilities_sum_to_one():
    spec = pr.BinSpec(lo=0.0, hi=1.0, n_bins=4)
    recs = [_record(0.1, EventLabel.STP_F), _record(0.15, EventLabel.STP_S),
            _record(0.6, EventLabel.STP_S)]
    stats = pr.bin_statistics(recs, spec)
    for k in range(4):
        if not stats.empty[k]:
            assert stats.p_f[k] + stats.p_s[k] == pytest.approx(1.0)
    assert bool(stats.empty[1]) and bool(stats.empty[3])


@given(g0s=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=60))
@settings(max_examples=100, deadline=None)
def test_bin_assignment_total(g0s):
    spec = pr.BinSpec(lo=0.2, hi=0.8, n_bins=7)
    stats = pr.bin_statistics([_record(g) for g in g0s], spec)
    assert int(stats.counts.sum()) + stats.underflow + stats.overflow == len(g0s)


def test_mode_probability_trend_monte_carlo(params):
    # empirical p_S per bin non-decreasing up to 3-sigma binomial noise
    plan = make_plan(repeats=10_000)
    records, _ = pr.run_protocol(
        dev.initial_state(params), params, plan, np.random.default_rng(11))
    stats = pr.bin_statistics(records, pr.BinSpec(lo=2.85e-6, hi=3.1e-6, n_bins=17))
    idx = [k for k in range(17) if not stats.empty[k]]
    for a, b in zip(idx, idx[1:]):
        se = math.sqrt(
            stats.p_s[a] * (1 - stats.p_s[a]) / stats.counts[a]
            + stats.p_s[b] * (1 - stats.p_s[b]) / stats.counts[b])
        assert stats.p_s[b] - stats.p_s[a] >= -3.0 * max(se, 1e-12)


# ---------------------------------------------------------------------------
# decay_sweep / amplitude_sweep
# ---------------------------------------------------------------------------


def test_decay_sweep_strictly_decreasing(params):
    res = pr.decay_sweep(params, [0.02, 0.05, 0.1, 0.15, 0.2],
                         np.random.default_rng(5))
    taus = [r.params["tau_d"] for _, r in res]
    assert all(r.converged for _, r in res)
    assert all(a > b for a, b in zip(taus, taus[1:]))


def test_decay_sweep_single_interval(params):
    res = pr.decay_sweep(params, [0.1], np.random.default_rng(6))
    assert len(res) == 1
    assert res[0][0] == 0.1


def test_decay_sweep_flat_law_when_gamma_zero():
    params = DeviceParams(gamma=0.0)
    res = pr.decay_sweep(params, [0.02, 0.1, 0.2], np.random.default_rng(8))
    taus = [r.params["tau_d"] for _, r in res]
    for t in taus:
        assert t == pytest.approx(taus[0], rel=0.02)


def test_amplitude_sweep_increasing_and_threshold_edge(params):
    pairs = pr.amplitude_sweep(params, [1.5, 2.0, 2.5, 3.0, 3.5, 4.0])
    vals = [d for _, d in pairs]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    edge = pr.amplitude_sweep(params, [params.v_th])
    assert edge[0][1] == 0.0


def test_amplitude_sweep_matches_first_pulse_law(params):
    pairs = pr.amplitude_sweep(params, [1.5, 2.5, 4.0])
    for v, d in pairs:
        s = params.c_amp * (math.exp((abs(v) - params.v_th) / params.v0) - 1.0)
        expect = (params.g_max - params.g_eq0) * s * params.u_dev / params.g_eq0
        assert d == pytest.approx(expect, rel=1e-9)


def test_amplitude_sweep_rejects_subthreshold(params):
    with pytest.raises(ValueError):
        pr.amplitude_sweep(params, [0.5, 2.0])
