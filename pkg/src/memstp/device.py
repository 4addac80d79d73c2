"""Phenomenological volatile memristor model.

A device is described by an equilibrium conductance ``g_eq`` plus a volatile
offset ``delta_g`` that relaxes back to zero between pulses. Supra-threshold
voltage pulses produce conductance jumps shaped by internal facilitation /
resource variables (u, x); the decay time constant of the volatile offset is
re-set on every write pulse from the inter-pulse interval (rapid pulsing
decays slower). Each event train is stochastically either Facilitating or
Saturating: a Saturating train additionally walks the equilibrium conductance
down toward a floor. Pulse energy feeds a leaky accumulator; once it exceeds
a state-dependent barrier the equilibrium conductance takes a discrete
non-volatile step.

All operations are pure: they take a state and return a new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

__all__ = [
    "Mode",
    "EventLabel",
    "DeviceParams",
    "DeviceState",
    "Pulse",
    "initial_state",
    "conductance",
    "decay_to",
    "pulse_energy",
    "energy_barrier",
    "apply_pulse",
    "sample_mode",
    "resample_mode_for_train",
    "classify_event",
    "iv_sweep",
]

# Guard against round-off when the accumulated energy lands exactly on the
# barrier (identical pulses summing to the barrier must trigger).
_BARRIER_REL_TOL = 1e-9


class Mode(Enum):
    FACILITATING = "facilitating"
    SATURATING = "saturating"


class EventLabel(Enum):
    STP_F = "stp_f"
    STP_S = "stp_s"


@dataclass(frozen=True)
class DeviceParams:
    """Device constants. Conductances in siemens, times in seconds.

    Attributes:
        g_min, g_max: hard conductance bounds.
        g_eq0: equilibrium conductance of a fresh device.
        v_th: write threshold; pulses with |v| below it do not write.
        v0, c_amp: scale and gain of the exponential amplitude response
            s(v) = c_amp * (exp((|v| - v_th)/v0) - 1).
        u_dev: per-pulse utilization increment, in (0, 1].
        tau_f_dev, tau_rec_dev: relaxation times of the facilitation and
            resource variables.
        tau_d_base, gamma, tau_d_min, tau_d_max, dt_ref: volatile-decay rate
            law tau_d = clip(tau_d_base * (dt_ref / dt_pulse)**gamma).
        kappa_sat: per-pulse equilibrium decrement rate in Saturating mode.
        g_floor: conductance the Saturating decrement walks toward.
        g_c, sigma_s: midpoint and width of the logistic Saturating-mode
            probability p_S(g0).
        e0, beta: barrier law E_i = e0 * (1 + beta*(g_eq-g_min)/(g_max-g_min)).
        tau_acc: leak time constant of the energy accumulator (inf = no leak).
        dg_nv: equilibrium step taken when the barrier is crossed.
        t_rec_min: quiescent gap after which the next pulse starts a new
            train (mode is re-drawn).
        polarity_sensitive: if True the non-volatile step follows pulse
            polarity (negative pulses potentiate, positive ones depress);
            if False every barrier crossing potentiates.
    """

    g_min: float = 2.5e-6
    g_max: float = 3.5e-6
    g_eq0: float = 2.9e-6
    v_th: float = 1.0
    v0: float = 1.5
    c_amp: float = 0.05
    u_dev: float = 0.2
    tau_f_dev: float = 0.5
    tau_rec_dev: float = 0.05
    tau_d_base: float = 0.5
    gamma: float = 0.5
    tau_d_min: float = 0.1
    tau_d_max: float = 2.0
    dt_ref: float = 0.1
    kappa_sat: float = 0.18
    g_floor: float = 2.5e-6
    g_c: float = 3.02e-6
    sigma_s: float = 0.02e-6
    e0: float = 0.6e-9
    beta: float = 2.0
    tau_acc: float = 30.0
    dg_nv: float = 0.05e-6
    t_rec_min: float = 1.0
    polarity_sensitive: bool = False

    def __post_init__(self) -> None:
        if not (0.0 < self.g_min <= self.g_eq0 <= self.g_max):
            raise ValueError("require 0 < g_min <= g_eq0 <= g_max")
        for name in ("tau_f_dev", "tau_rec_dev", "tau_d_base", "tau_d_min",
                     "tau_d_max", "tau_acc", "dt_ref"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if not (0.0 < self.u_dev <= 1.0):
            raise ValueError("u_dev must be in (0, 1]")
        if not (0.0 <= self.kappa_sat < 1.0):
            raise ValueError("kappa_sat must be in [0, 1)")
        if self.sigma_s <= 0.0:
            raise ValueError("sigma_s must be > 0")
        if self.tau_d_min > self.tau_d_max:
            raise ValueError("tau_d_min must not exceed tau_d_max")


@dataclass(frozen=True)
class DeviceState:
    """Dynamic device state at time ``t_last``."""

    g_eq: float
    u: float
    x: float
    delta_g: float
    tau_d: float
    acc: float
    mode: Mode
    t_last: float
    t_last_pulse: Optional[float]


@dataclass(frozen=True)
class Pulse:
    """A rectangular voltage pulse: onset time, signed amplitude, width."""

    t: float
    v: float
    w: float

    def __post_init__(self) -> None:
        if self.w <= 0.0:
            raise ValueError("pulse width must be > 0")


def initial_state(params: DeviceParams, t0: float = 0.0) -> DeviceState:
    """Fresh device: at equilibrium, resources full, accumulator empty."""
    tau_d = min(max(params.tau_d_base, params.tau_d_min), params.tau_d_max)
    return DeviceState(
        g_eq=params.g_eq0, u=0.0, x=1.0, delta_g=0.0, tau_d=tau_d,
        acc=0.0, mode=Mode.FACILITATING, t_last=t0, t_last_pulse=None,
    )


def conductance(state: DeviceState) -> float:
    """Total conductance G = g_eq + delta_g."""
    return state.g_eq + state.delta_g


def decay_to(state: DeviceState, params: DeviceParams, t: float) -> DeviceState:
    """Relax the volatile variables from ``state.t_last`` to ``t``.

    delta_g and u decay exponentially, x recovers toward 1, the energy
    accumulator leaks with tau_acc. The equilibrium conductance is untouched.
    """
    if t < state.t_last:
        raise ValueError(
            f"time reversal: t={t} is before state.t_last={state.t_last}")
    dt = t - state.t_last
    if dt == 0.0:
        return state
    return replace(
        state,
        delta_g=state.delta_g * math.exp(-dt / state.tau_d),
        u=state.u * math.exp(-dt / params.tau_f_dev),
        x=1.0 - (1.0 - state.x) * math.exp(-dt / params.tau_rec_dev),
        acc=state.acc * math.exp(-dt / params.tau_acc),
        t_last=t,
    )


def pulse_energy(g: float, v: float, w: float) -> float:
    """Joule energy g * v^2 * w deposited by a rectangular pulse."""
    if w <= 0.0:
        raise ValueError("pulse width must be > 0")
    return g * v * v * w


def energy_barrier(params: DeviceParams, g_eq: float) -> float:
    """State-dependent barrier for a non-volatile transition.

    Grows linearly with the equilibrium conductance: already-potentiated
    devices need more energy to step again.
    """
    frac = (g_eq - params.g_min) / (params.g_max - params.g_min)
    return params.e0 * (1.0 + params.beta * frac)


def apply_pulse(
    state: DeviceState, params: DeviceParams, pulse: Pulse
) -> tuple[DeviceState, float]:
    """Apply one voltage pulse; returns (new state, volatile jump).

    Sequence: relax to the pulse time; for write pulses (|v| >= v_th) re-set
    tau_d from the inter-pulse interval, facilitate u, take a headroom-
    proportional jump, deplete x, and in Saturating mode decrement the
    equilibrium toward g_floor. Every pulse (including sub-threshold reads)
    deposits g*v^2*w into the accumulator; crossing the barrier takes a
    non-volatile equilibrium step and resets the accumulator.

    Sub-threshold pulses do not count as write events: they leave tau_d and
    t_last_pulse alone so that periodic read probes cannot drive the rate law.
    """
    state = decay_to(state, params, pulse.t)
    amp = abs(pulse.v)
    jump = 0.0

    if amp >= params.v_th:
        if state.t_last_pulse is None:
            dt_p = math.inf
        else:
            dt_p = pulse.t - state.t_last_pulse
        if dt_p <= 0.0:
            tau_d = params.tau_d_max
        else:
            tau_d = params.tau_d_base * (params.dt_ref / dt_p) ** params.gamma
        tau_d = min(max(tau_d, params.tau_d_min), params.tau_d_max)

        u = state.u + params.u_dev * (1.0 - state.u)
        s = params.c_amp * (math.exp((amp - params.v_th) / params.v0) - 1.0)
        headroom = params.g_max - state.g_eq - state.delta_g
        jump = min(headroom * s * u * state.x, headroom)
        x = state.x * (1.0 - u)
        g_eq = state.g_eq
        if state.mode is Mode.SATURATING:
            g_eq = g_eq - params.kappa_sat * (g_eq - params.g_floor)
        state = replace(
            state, u=u, x=x, delta_g=state.delta_g + jump, g_eq=g_eq,
            tau_d=tau_d, t_last_pulse=pulse.t,
        )

    g_total = conductance(state)
    acc = state.acc + pulse_energy(g_total, pulse.v, pulse.w)
    g_eq = state.g_eq
    if acc >= energy_barrier(params, g_eq) * (1.0 - _BARRIER_REL_TOL):
        step = params.dg_nv
        if params.polarity_sensitive and pulse.v > 0.0:
            step = -step
        # Clamp so the total conductance stays inside [g_min, g_max].
        g_eq = min(max(g_eq + step, params.g_min),
                   params.g_max - state.delta_g)
        acc = 0.0
    return replace(state, acc=acc, g_eq=g_eq), jump


def sample_mode(g0: float, params: DeviceParams, rng: np.random.Generator) -> Mode:
    """Draw the event mode for a train starting at conductance ``g0``.

    Saturating with probability p_S = logistic((g0 - g_c)/sigma_s): high
    initial conductance makes saturating events more likely.
    """
    z = (g0 - params.g_c) / params.sigma_s
    if z >= 0.0:
        p_s = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        p_s = e / (1.0 + e)
    return Mode.SATURATING if rng.random() < p_s else Mode.FACILITATING


def resample_mode_for_train(
    state: DeviceState,
    params: DeviceParams,
    t: float,
    rng: np.random.Generator,
) -> DeviceState:
    """Re-draw the mode if a pulse at ``t`` starts a new train.

    A new train begins at the first pulse after a quiescent gap of at least
    t_rec_min (or at the very first pulse). Within a train the mode is held.
    """
    if state.t_last_pulse is not None and t - state.t_last_pulse < params.t_rec_min:
        return state
    g0 = conductance(decay_to(state, params, t))
    return replace(state, mode=sample_mode(g0, params, rng))


def classify_event(g0: float, g_post: float) -> EventLabel:
    """Label an event from pre-train vs post-train conductance.

    Conductance up -> STP_F, down -> STP_S; exact ties break to STP_F.
    """
    return EventLabel.STP_F if g_post >= g0 else EventLabel.STP_S


def iv_sweep(
    state: DeviceState,
    params: DeviceParams,
    waveform: np.ndarray,
    dt: float,
) -> tuple[DeviceState, np.ndarray, np.ndarray]:
    """Drive the device with a sampled voltage waveform.

    Each sample is treated as a micro-pulse of the sample width; the current
    is i = G * v with G evolving under the volatile dynamics. Returns the
    final state and the (v, i) trace.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    v = np.asarray(waveform, dtype=float)
    i_out = np.empty_like(v)
    t = state.t_last
    for k in range(v.size):
        vk = float(v[k])
        state, _ = apply_pulse(state, params, Pulse(t=t, v=vk, w=dt))
        i_out[k] = conductance(state) * vk
        t += dt
    return state, v, i_out
