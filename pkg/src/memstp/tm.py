"""Reduced Tsodyks-Markram synapse: closed-form updates plus a step oracle.

Between spikes the utilization u decays to zero with tau_f and the resource
pool x recovers to one with tau_rec; at a spike, u jumps by u_cap*(1-u), the
efficacy peak a*u+*x is emitted, and x is depleted by the post-jump u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

__all__ = [
    "TMParams",
    "TMState",
    "advance",
    "on_spike",
    "peaks_for_train",
    "integrate_reference",
]


@dataclass(frozen=True)
class TMParams:
    a: float = 1.0
    u_cap: float = 0.2
    tau_rec: float = 0.05
    tau_f: float = 0.5

    def __post_init__(self) -> None:
        if self.a <= 0.0:
            raise ValueError("a must be > 0")
        if not (0.0 <= self.u_cap <= 1.0):
            raise ValueError("u_cap must be in [0, 1]")
        if self.tau_rec <= 0.0 or self.tau_f <= 0.0:
            raise ValueError("time constants must be > 0")

    @classmethod
    def facilitation_only(cls, a: float, u_cap: float, tau_f: float) -> "TMParams":
        """Facilitation-only reduction: resources recover effectively
        instantly, so every peak is a * u+ alone."""
        return cls(a=a, u_cap=u_cap, tau_rec=1e-9, tau_f=tau_f)


@dataclass(frozen=True)
class TMState:
    u: float = 0.0
    x: float = 1.0
    t_last: float = 0.0


def advance(state: TMState, dt: float, params: TMParams) -> TMState:
    """Relax (u, x) over a spike-free interval dt."""
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    if dt == 0.0:
        return state
    return replace(
        state,
        u=state.u * math.exp(-dt / params.tau_f),
        x=1.0 - (1.0 - state.x) * math.exp(-dt / params.tau_rec),
        t_last=state.t_last + dt,
    )


def on_spike(state: TMState, params: TMParams) -> tuple[TMState, float]:
    """Spike update: facilitate, emit peak a*u+*x, deplete resources."""
    u_plus = state.u + params.u_cap * (1.0 - state.u)
    peak = params.a * u_plus * state.x
    return replace(state, u=u_plus, x=state.x * (1.0 - u_plus)), peak


def peaks_for_train(params: TMParams, spike_times: Sequence[float]) -> list[float]:
    """Efficacy peaks for a spike train, starting from rest (u=0, x=1)."""
    times = list(spike_times)
    for earlier, later in zip(times, times[1:]):
        if later <= earlier:
            raise ValueError("spike times must be strictly increasing")
    peaks: list[float] = []
    state = TMState(t_last=times[0] if times else 0.0)
    prev = state.t_last
    for t in times:
        state = advance(state, t - prev, params)
        state, peak = on_spike(state, params)
        peaks.append(peak)
        prev = t
    return peaks


def _rk4_decay_multiplier(h: float) -> float:
    """One RK4 step for y' = -y/tau, expressed as y_new = m(h)*y, h = dt/tau."""
    return 1.0 - h + h * h / 2.0 - h ** 3 / 6.0 + h ** 4 / 24.0


def _integrate_interval(y: float, span: float, tau: float, dt: float) -> float:
    """RK4-integrate y' = -y/tau over ``span`` using steps of dt plus one
    final partial step, so the interval boundary is hit exactly.

    Steps are capped at tau/10 to keep the scheme stable for very fast
    time constants.
    """
    dt = min(dt, tau / 10.0)
    n = int(span // dt)
    rem = span - n * dt
    m = _rk4_decay_multiplier(dt / tau)
    y = y * m ** n
    if rem > 0.0:
        y *= _rk4_decay_multiplier(rem / tau)
    return y


def integrate_reference(
    params: TMParams, spike_times: Sequence[float], dt: float
) -> list[float]:
    """Step-integrator oracle for :func:`peaks_for_train`.

    Integrates du/dt = -u/tau_f and dx/dt = (1-x)/tau_rec numerically between
    spikes (classical RK4 on the decaying variables) with the same spike maps.
    Independent of the closed-form exponentials; converges to them as dt
    shrinks.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    times = list(spike_times)
    for earlier, later in zip(times, times[1:]):
        if later <= earlier:
            raise ValueError("spike times must be strictly increasing")
    peaks: list[float] = []
    u, x = 0.0, 1.0
    prev = times[0] if times else 0.0
    for t in times:
        span = t - prev
        if span > 0.0:
            u = _integrate_interval(u, span, params.tau_f, dt)
            x = 1.0 - _integrate_interval(1.0 - x, span, params.tau_rec, dt)
        u_plus = u + params.u_cap * (1.0 - u)
        peaks.append(params.a * u_plus * x)
        x = x * (1.0 - u_plus)
        u = u_plus
        prev = t
    return peaks
