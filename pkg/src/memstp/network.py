"""Synapse-to-neuron wiring for the spike-pattern detectors.

Topologies: a sequence detector (static + memristive synapse into one IF
neuron), its passive RC control, and a two-memristor coincidence detector.
The memristive synapse injects G(t) * read_v continuously, so a facilitated
conductance elevation acts as a decaying memory trace; static pulses arriving
on top of that plateau push the membrane over threshold.

The shipped "paper operating point" is a calibration: the hardware threshold,
read bias, and resistor values are chosen so that the BA order spikes on
facilitating trials, saturating trials miss (false negatives), and high
initial-conductance facilitating trials fire on the AB order (false
positives).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from . import device as dev
from . import neuron as nrn
from .device import DeviceParams, EventLabel, Mode, Pulse
from .protocols import PulseTrain
from .trace import Trace

__all__ = [
    "PatternOrder",
    "PatternSpec",
    "StaticSynapse",
    "RCSynapse",
    "MemristiveSynapse",
    "Network",
    "TrialRecord",
    "build_detector",
    "run_trial",
    "monte_carlo",
    "derive_rng",
    "OPERATING_POINT",
]


class PatternOrder(Enum):
    AB = "ab"
    BA = "ba"


@dataclass(frozen=True)
class PatternSpec:
    """Two three-pulse trains: A on the static synapse, B on the dynamic one.

    ``gap`` is the interval from the end of the first train to the start of
    the second. For the coincidence topology (two dynamic synapses) ``gap``
    is instead the offset between the two train starts, so gap=0 means fully
    overlapping trains.
    """

    order: PatternOrder = PatternOrder.BA
    train: PulseTrain = PulseTrain(n=3, v=-4.0, w=10e-6, t_int=0.25)
    gap: float = 0.25

    def __post_init__(self) -> None:
        if self.gap < 0.0:
            raise ValueError("gap must be >= 0")


@dataclass(frozen=True)
class StaticSynapse:
    """Fixed resistor: injects v/R only while one of its pulses is on."""

    resistance: float
    read_v: float = 0.0

    def __post_init__(self) -> None:
        if self.resistance <= 0.0:
            raise ValueError("resistance must be > 0")

    @property
    def g(self) -> float:
        return 1.0 / self.resistance


@dataclass(frozen=True)
class RCSynapse:
    """Resistor-capacitor control: pulse current low-passed with tau = R*C,
    plus the standing read-bias current through R."""

    resistance: float
    capacitance: float
    read_v: float = 0.0

    def __post_init__(self) -> None:
        if self.resistance <= 0.0 or self.capacitance <= 0.0:
            raise ValueError("resistance and capacitance must be > 0")

    @property
    def g(self) -> float:
        return 1.0 / self.resistance

    @property
    def tau(self) -> float:
        return self.resistance * self.capacitance


@dataclass(frozen=True)
class MemristiveSynapse:
    """Volatile memristor under a standing read bias."""

    params: DeviceParams
    read_v: float = 0.2


Synapse = Union[StaticSynapse, RCSynapse, MemristiveSynapse]


@dataclass(frozen=True)
class Network:
    topology: str
    synapses: tuple[Synapse, ...]
    neuron: nrn.NeuronParams
    dt: float = 1e-3
    g0_jitter: float = 0.0
    force_mode: Optional[Mode] = None
    include_write_charge: bool = True
    g_post_delay: float = 10e-3
    lead: float = 0.1
    tail: float = 0.5
    # Inter-trial quiescent gap. Trials run on fresh, fully relaxed devices,
    # so any recovery >= the device's t_rec_min is honored by construction.
    recovery: float = 10.0


@dataclass
class TrialRecord:
    pattern: PatternOrder
    spiked: bool
    membrane: Optional[Trace]
    conductance: Optional[Trace]
    label: Optional[EventLabel]
    g0: float
    mode: Optional[Mode]
    spike_times: tuple[float, ...] = ()


# ---------------------------------------------------------------------------
# Paper operating point (calibrated; see module docstring).
# ---------------------------------------------------------------------------

_OP_NEURON_COMMON = dict(
    c_m=5e-8, g_l=1e-6, e_l=0.0, delta_t=0.0, v_reset=0.0, t_ref=5e-3,
)

OPERATING_POINT = {
    # Memristive synapse: fresh device per trial at g_eq0 with a uniform
    # initial-conductance jitter; non-volatile programming disabled for the
    # short detector sessions.
    "device": dict(g_eq0=3.005e-6, e0=math.inf),
    "read_v": 0.2,
    "g0_jitter": 0.012e-6,
    # Static input resistor.
    "static_resistance": 1.0 / 11.25e-6,
    # Membrane threshold (leaky-IF operating point).
    "theta_sequence": 0.613655,
    "theta_coincidence": 1.2196,
    # RC control matched to the device: R from the mean conductance,
    # R*C equal to the default volatile decay constant.
    "rc_resistance": 1.0 / 3.0e-6,
    "rc_capacitance": 0.5 * 3.0e-6,
    "dt": 1e-3,
}


def _op_neuron(theta: float) -> nrn.NeuronParams:
    return nrn.NeuronParams(v_t=theta, v_peak=theta, **_OP_NEURON_COMMON)


def build_detector(topology: str, **overrides) -> Network:
    """Build one of the named topologies at the paper operating point.

    topology: "sequence_detector", "control_rc", or "coincidence_detector".
    Keyword overrides patch the Network fields (e.g. force_mode, g0_jitter).
    """
    op = OPERATING_POINT
    device_params = DeviceParams(**{**dev.DeviceParams().__dict__, **op["device"]})
    read_v = op["read_v"]
    if topology == "sequence_detector":
        synapses: tuple[Synapse, ...] = (
            StaticSynapse(resistance=op["static_resistance"]),
            MemristiveSynapse(params=device_params, read_v=read_v),
        )
        neuron = _op_neuron(op["theta_sequence"])
        jitter = op["g0_jitter"]
    elif topology == "control_rc":
        synapses = (
            StaticSynapse(resistance=op["static_resistance"]),
            RCSynapse(resistance=op["rc_resistance"],
                      capacitance=op["rc_capacitance"], read_v=read_v),
        )
        neuron = _op_neuron(op["theta_sequence"])
        jitter = 0.0
    elif topology == "coincidence_detector":
        synapses = (
            MemristiveSynapse(params=device_params, read_v=read_v),
            MemristiveSynapse(params=device_params, read_v=read_v),
        )
        neuron = _op_neuron(op["theta_coincidence"])
        jitter = 0.0
    else:
        raise ValueError(f"unknown topology: {topology!r}")
    force_mode = Mode.FACILITATING if topology == "coincidence_detector" else None
    net = Network(topology=topology, synapses=synapses, neuron=neuron,
                  dt=op["dt"], g0_jitter=jitter, force_mode=force_mode)
    if overrides:
        net = replace(net, **overrides)
    return net


# ---------------------------------------------------------------------------
# Trial simulation
# ---------------------------------------------------------------------------


def _pulse_step_indices(times: Sequence[float], dt: float, n: int) -> list[int]:
    return [min(round(t / dt), n - 1) for t in times]


def _memristor_currents(
    syn: MemristiveSynapse,
    params: DeviceParams,
    pulse_times: Sequence[float],
    train: PulseTrain,
    grid: np.ndarray,
    dt: float,
    include_write_charge: bool,
    rng: Optional[np.random.Generator],
    force_mode: Optional[Mode],
    g_post_delay: float,
) -> tuple[np.ndarray, np.ndarray, float, Mode, EventLabel]:
    """Event-driven device simulation pushed onto the sample grid.

    Returns (current series, conductance series, g0, mode, label).
    """
    state = dev.initial_state(params)
    g0 = dev.conductance(state)
    if force_mode is not None:
        state = replace(state, mode=force_mode)
    elif rng is not None:
        state = dev.resample_mode_for_train(state, params, pulse_times[0], rng)
    mode = state.mode

    # Piecewise segments: (start time, g_eq, delta_g, tau_d) after each pulse.
    segments = [(grid[0] if grid.size else 0.0, state.g_eq, 0.0, state.tau_d)]
    write_charges: list[tuple[float, float]] = []
    for t in pulse_times:
        state, _ = dev.apply_pulse(
            state, params, Pulse(t=t, v=train.v, w=train.w))
        segments.append((t, state.g_eq, state.delta_g, state.tau_d))
        write_charges.append((t, dev.conductance(state) * abs(train.v) * train.w))

    # Sample k belongs to the latest segment whose start time <= grid[k].
    g_series = np.empty_like(grid)
    seg_starts = np.array([s[0] for s in segments])
    which = np.clip(np.searchsorted(seg_starts, grid, side="right") - 1,
                    0, len(segments) - 1)
    for i, (t0, g_eq, delta_g, tau_d) in enumerate(segments):
        sel = which == i
        if np.any(sel):
            g_series[sel] = g_eq + delta_g * np.exp(-(grid[sel] - t0) / tau_d)

    current = g_series * syn.read_v
    if include_write_charge:
        for t, charge in write_charges:
            k = min(round(t / dt), grid.size - 1)
            current[k] += charge / dt

    t_post = pulse_times[-1] + g_post_delay
    state = dev.decay_to(state, params, t_post)
    label = dev.classify_event(g0, dev.conductance(state))
    return current, g_series, g0, mode, label


def _static_currents(
    syn: StaticSynapse,
    pulse_times: Sequence[float],
    train: PulseTrain,
    grid: np.ndarray,
    dt: float,
) -> np.ndarray:
    current = np.full(grid.size, syn.g * syn.read_v)
    for k in _pulse_step_indices(pulse_times, dt, grid.size):
        current[k] += syn.g * abs(train.v) * train.w / dt
    return current


def _rc_currents(
    syn: RCSynapse,
    pulse_times: Sequence[float],
    train: PulseTrain,
    grid: np.ndarray,
    dt: float,
) -> np.ndarray:
    drive = np.zeros(grid.size)
    for k in _pulse_step_indices(pulse_times, dt, grid.size):
        drive[k] += syn.g * abs(train.v) * train.w / dt
    # First-order low-pass y' = (x - y)/tau, explicit step.
    y = np.empty_like(drive)
    acc = 0.0
    a = dt / syn.tau
    for k in range(drive.size):
        acc += a * (drive[k] - acc)
        y[k] = acc
    return y + syn.g * syn.read_v


def run_trial(
    network: Network,
    pattern: PatternSpec,
    rng: Optional[np.random.Generator] = None,
    dt: Optional[float] = None,
    record_traces: bool = True,
) -> TrialRecord:
    """Simulate one pattern presentation on a fresh network.

    The membrane starts from its standing-bias steady state; ``spiked`` is
    true if any spike is emitted during the trial.
    """
    dt = network.dt if dt is None else dt
    train = pattern.train
    t_a = network.lead
    if network.topology == "coincidence_detector":
        t_first, t_second = t_a, t_a + pattern.gap
    else:
        t_second = t_a + train.duration + pattern.gap
        t_first = t_a
    t_end = max(t_first, t_second) + train.duration + network.tail
    n = int(math.ceil(t_end / dt))
    grid = dt * np.arange(n)

    if network.topology == "coincidence_detector":
        starts = [t_first, t_second]
    elif pattern.order is PatternOrder.AB:
        starts = [t_first, t_second]   # static first, dynamic second
    else:
        starts = [t_second, t_first]   # dynamic first, static second

    # Jitter the memristive synapses' initial conductance (one rng draw per
    # dynamic synapse, before the mode draw).
    total = np.zeros(n)
    g_trace: Optional[np.ndarray] = None
    g0_out = 0.0
    mode_out: Optional[Mode] = None
    label_out: Optional[EventLabel] = None
    standing_g0 = []
    for idx, syn in enumerate(network.synapses):
        times = train.pulse_times(starts[idx])
        if isinstance(syn, MemristiveSynapse):
            params = syn.params
            if network.g0_jitter > 0.0 and rng is not None:
                g_jit = params.g_eq0 + network.g0_jitter * (2.0 * rng.random() - 1.0)
                g_jit = min(max(g_jit, params.g_min), params.g_max)
                params = replace(params, g_eq0=g_jit)
            current, g_series, g0, mode, label = _memristor_currents(
                syn, params, times, train, grid, dt,
                network.include_write_charge, rng, network.force_mode,
                network.g_post_delay)
            total += current
            standing_g0.append(g0 * syn.read_v)
            if g_trace is None:
                g_trace, g0_out, mode_out, label_out = g_series, g0, mode, label
        elif isinstance(syn, StaticSynapse):
            total += _static_currents(syn, times, train, grid, dt)
        else:
            total += _rc_currents(syn, times, train, grid, dt)

    standing = sum(standing_g0) + sum(
        s.g * s.read_v for s in network.synapses if isinstance(s, RCSynapse))
    v0 = network.neuron.e_l + standing / network.neuron.g_l
    times_out, v, spike_times = nrn.run_trace(network.neuron, total, dt, v0=v0)

    membrane = Trace(times_out, v, kind="vmem") if record_traces else None
    conductance = (
        Trace(times_out, g_trace, kind="conductance")
        if record_traces and g_trace is not None else None)
    return TrialRecord(
        pattern=pattern.order, spiked=bool(spike_times), membrane=membrane,
        conductance=conductance, label=label_out, g0=g0_out, mode=mode_out,
        spike_times=tuple(spike_times))


def derive_rng(seed: int, index: int) -> np.random.Generator:
    """Deterministic per-trial stream: SeedSequence(seed, spawn_key=(index,)).

    Independent of execution order and thread count.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def monte_carlo(
    network: Network,
    pattern: PatternSpec,
    trials: int,
    seed: int,
    threads: int = 1,
    record_traces: bool = False,
) -> tuple[float, list[TrialRecord]]:
    """Independent seeded trials; returns (spike fraction, per-trial records)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def one(idx: int) -> TrialRecord:
        return run_trial(network, pattern, rng=derive_rng(seed, idx),
                         record_traces=record_traces)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, range(trials)))
    else:
        records = [one(i) for i in range(trials)]
    p_spike = sum(r.spiked for r in records) / trials
    return p_spike, records
