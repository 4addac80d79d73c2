"""Parameter estimation: decay fits, TM fits, amplitude-law fits, and the
derivative-free simplex minimizer underneath them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import tm

__all__ = [
    "FitResult",
    "minimize_simplex",
    "fit_decay",
    "fit_tm",
    "fit_amplitude_curve",
]


@dataclass
class FitResult:
    """Named parameter estimates plus goodness-of-fit bookkeeping."""

    params: dict[str, float]
    sse: float
    iterations: int
    converged: bool
    message: str = ""

    def __post_init__(self) -> None:
        if self.sse < 0.0:
            raise ValueError("sse must be >= 0")


def minimize_simplex(
    objective: Callable[[np.ndarray], float],
    start: Sequence[float],
    bounds: Optional[Sequence[tuple[float, float]]] = None,
    x_tol: float = 1e-8,
    f_tol: float = 1e-12,
    max_iter: int = 2000,
) -> FitResult:
    """Nelder-Mead simplex descent with bound clipping.

    Converges when the simplex diameter falls below x_tol and the objective
    spread below f_tol (both, so a simplex straddling the minimizer
    symmetrically cannot stop early); hitting the iteration cap returns
    converged=False. Candidate points are projected back into the bounds, so
    returned parameters respect them exactly.
    """
    x0 = np.asarray(start, dtype=float)
    ndim = x0.size
    if bounds is not None:
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        if np.any(x0 < lo) or np.any(x0 > hi):
            raise ValueError("start point must lie within bounds")
    else:
        lo = np.full(ndim, -np.inf)
        hi = np.full(ndim, np.inf)

    def clip(x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, lo), hi)

    # Initial simplex: perturb each coordinate by 5% (or an absolute nudge).
    simplex = [x0.copy()]
    for i in range(ndim):
        p = x0.copy()
        nudge = 0.05 * abs(p[i]) if p[i] != 0.0 else 0.00025
        p[i] += nudge
        if p[i] > hi[i]:
            p[i] = x0[i] - nudge
        simplex.append(clip(p))
    fvals = [float(objective(p)) for p in simplex]

    alpha, gamma_e, rho, sigma = 1.0, 2.0, 0.5, 0.5
    it = 0
    while it < max_iter:
        order = np.argsort(fvals)
        simplex = [simplex[i] for i in order]
        fvals = [fvals[i] for i in order]

        diam = max(np.max(np.abs(p - simplex[0])) for p in simplex[1:])
        if diam < x_tol and fvals[-1] - fvals[0] < f_tol:
            return FitResult(
                params={f"x{i}": float(v) for i, v in enumerate(simplex[0])},
                sse=float(fvals[0]), iterations=it, converged=True)

        it += 1
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]

        reflected = clip(centroid + alpha * (centroid - worst))
        f_r = float(objective(reflected))
        if fvals[0] <= f_r < fvals[-2]:
            simplex[-1], fvals[-1] = reflected, f_r
            continue
        if f_r < fvals[0]:
            expanded = clip(centroid + gamma_e * (reflected - centroid))
            f_e = float(objective(expanded))
            if f_e < f_r:
                simplex[-1], fvals[-1] = expanded, f_e
            else:
                simplex[-1], fvals[-1] = reflected, f_r
            continue
        contracted = clip(centroid + rho * (worst - centroid))
        f_c = float(objective(contracted))
        if f_c < fvals[-1]:
            simplex[-1], fvals[-1] = contracted, f_c
            continue
        # Shrink toward the best vertex.
        for i in range(1, len(simplex)):
            simplex[i] = clip(simplex[0] + sigma * (simplex[i] - simplex[0]))
            fvals[i] = float(objective(simplex[i]))

    order = np.argsort(fvals)
    best = simplex[order[0]]
    return FitResult(
        params={f"x{i}": float(v) for i, v in enumerate(best)},
        sse=float(fvals[order[0]]), iterations=it, converged=False,
        message="iteration cap reached")


def fit_decay(
    times: Sequence[float],
    values: Sequence[float],
    g_eq: float,
) -> FitResult:
    """Fit G(t) = g_eq + amplitude * exp(-t/tau_d) by log-linear regression.

    Samples at or below the baseline are excluded; fewer than 3 usable
    samples is a failure.
    """
    t = np.asarray(times, dtype=float)
    g = np.asarray(values, dtype=float)
    resid = g - g_eq
    usable = resid > 0.0
    if int(np.count_nonzero(usable)) < 3:
        return FitResult(params={"tau_d": math.nan, "amplitude": math.nan},
                         sse=0.0, iterations=0, converged=False,
                         message="fewer than 3 samples above baseline")
    t_u, ln_r = t[usable], np.log(resid[usable])
    slope, intercept = np.polyfit(t_u, ln_r, 1)
    if slope >= 0.0:
        return FitResult(params={"tau_d": math.nan, "amplitude": math.nan},
                         sse=0.0, iterations=0, converged=False,
                         message="non-decaying residual")
    tau_d = -1.0 / slope
    amplitude = math.exp(intercept)
    sse = float(np.sum((resid[usable] - amplitude * np.exp(-t_u / tau_d)) ** 2))
    return FitResult(params={"tau_d": float(tau_d), "amplitude": amplitude},
                     sse=sse, iterations=0, converged=True)


def fit_tm(peaks: Sequence[float], spike_times: Sequence[float]) -> FitResult:
    """Least-squares fit of the TM peak map to measured peaks.

    Parameters (a, u_cap, tau_rec, tau_f) are estimated with the simplex
    minimizer from a small multi-start grid: u_cap in {0.1, 0.5} crossed with
    fast/slow time-constant combinations, a seeded from the first peak.
    """
    pk = np.asarray(peaks, dtype=float)
    ts = list(spike_times)
    if pk.size != len(ts) or pk.size < 2:
        raise ValueError("need equal-length peaks and spike_times, >= 2")
    for earlier, later in zip(ts, ts[1:]):
        if later <= earlier:
            raise ValueError("spike times must be strictly increasing")

    a_hi = max(float(np.max(pk)), 1e-12)

    def objective(p: np.ndarray) -> float:
        a, u_cap, tau_rec, tau_f = p
        model = tm.peaks_for_train(
            tm.TMParams(a=a, u_cap=u_cap, tau_rec=tau_rec, tau_f=tau_f), ts)
        return float(np.sum((pk - np.asarray(model)) ** 2))

    bounds = [(1e-12, 1e6 * a_hi), (1e-3, 1.0), (1e-3, 100.0), (1e-3, 100.0)]
    starts = []
    for u0 in (0.1, 0.5):
        for tau_rec0, tau_f0 in ((0.05, 0.5), (0.5, 0.05), (0.2, 0.2), (0.02, 1.0)):
            starts.append([a_hi / u0, u0, tau_rec0, tau_f0])

    best: Optional[FitResult] = None
    for s in starts:
        res = minimize_simplex(objective, s, bounds=bounds,
                               x_tol=1e-10, f_tol=1e-24, max_iter=4000)
        if best is None or res.sse < best.sse:
            best = res
    assert best is not None
    a, u_cap, tau_rec, tau_f = (best.params[f"x{i}"] for i in range(4))
    degenerate = float(np.ptp(pk)) <= 1e-12 * a_hi
    return FitResult(
        params={"a": a, "u_cap": u_cap, "tau_rec": tau_rec, "tau_f": tau_f},
        sse=best.sse, iterations=best.iterations,
        converged=best.converged and not degenerate,
        message="peaks constant: time constants unidentifiable" if degenerate
        else best.message)


def fit_amplitude_curve(
    points: Sequence[tuple[float, float]], v_th: float = 1.0
) -> FitResult:
    """Fit dG_norm(v) = c_amp * (exp((|v| - v_th)/v0) - 1) to (v, dG) points."""
    if len(points) < 3:
        raise ValueError("need at least 3 points above the write threshold")
    v = np.array([abs(p[0]) for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(v <= v_th):
        raise ValueError("all amplitudes must exceed v_th")

    if np.all(y == 0.0):
        return FitResult(params={"c_amp": 0.0, "v0": math.nan}, sse=0.0,
                         iterations=0, converged=False,
                         message="all responses zero: v0 unidentifiable")

    def objective(p: np.ndarray) -> float:
        c_amp, v0 = p
        # Cap the exponent so extreme v0 trials stay finite.
        arg = np.minimum((v - v_th) / v0, 50.0)
        model = c_amp * (np.exp(arg) - 1.0)
        return float(np.sum((y - model) ** 2))

    y_top = max(float(np.max(np.abs(y))), 1e-12)
    best: Optional[FitResult] = None
    for c0 in (0.01, 0.1, y_top):
        for v00 in (0.5, 1.5, 4.0):
            res = minimize_simplex(
                objective, [c0, v00],
                bounds=[(1e-12, 1e6), (1e-3, 100.0)],
                x_tol=1e-12, f_tol=1e-28, max_iter=4000)
            if best is None or res.sse < best.sse:
                best = res
    assert best is not None
    return FitResult(
        params={"c_amp": best.params["x0"], "v0": best.params["x1"]},
        sse=best.sse, iterations=best.iterations, converged=best.converged,
        message=best.message)
