"""Single-mass switching oscillator.

A mass on a spring whose anchor jumps between two references. The anchor
moves to ``r2`` when the mass passes ``x1`` going up and back to ``r1``
when it passes ``x2`` going down, so the spring injects energy at every
switch while the damper removes it continuously. The balance of the two
settles on a limit cycle, which is detected with a Poincare section at the
upward crossings of ``x1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

TRACE_COLUMNS = ["t", "x", "xdot", "r", "E"]


@dataclass(frozen=True)
class ToyParams:
    m: float = 1.0
    c: float = 0.5
    k: float = 10.0
    r1: float = 1.0
    r2: float = -1.0
    x1: float = 0.8
    x2: float = -0.8

    def __post_init__(self):
        for name in ("m", "k"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        # c = 0 is accepted so the undamped case can be studied
        if not self.c >= 0:
            raise ValueError("c must be non-negative")
        if not self.x2 < self.x1:
            raise ValueError("x2 must lie below x1")
        if not all(map(math.isfinite, (self.m, self.c, self.k, self.r1, self.r2, self.x1, self.x2))):
            raise ValueError("toy parameters must be finite")


def toy_reference(x: float, xdot: float, p: ToyParams, previous: float | None = None) -> float:
    """Active reference for a state.

    Outside the switching conditions (inside the band between ``x2`` and
    ``x1``) the previous reference is kept. Without a previous reference the
    direction of motion decides.
    """
    if xdot >= 0 and x >= p.x1:
        return p.r2
    if xdot <= 0 and x <= p.x2:
        return p.r1
    if previous is not None:
        return previous
    return p.r1 if xdot >= 0 else p.r2


def toy_energy(x, xdot, r, p: ToyParams):
    return 0.5 * p.m * np.square(xdot) + 0.5 * p.k * np.square(np.subtract(x, r))


@njit(cache=True)
def _toy_kernel(m, c, k, r1, r2, x1, x2, x0, v0, r0, n_steps, dt, every, out, cross, events):
    """Integrate in place. ``out`` rows are (t, x, xdot, r, E); ``cross`` rows
    are (t, xdot, W_inj, W_diss) at upward crossings of x1; ``events`` rows
    are (t, x, r_old, r_new, jump). Returns (n_rows, n_cross, n_events, W_inj, W_diss)."""
    x, v, r = x0, v0, r0
    w_inj = 0.0
    w_diss = 0.0
    n_out = 0
    n_cross = 0
    n_ev = 0
    out[0, 0] = 0.0
    out[0, 1] = x
    out[0, 2] = v
    out[0, 3] = r
    out[0, 4] = 0.5 * m * v * v + 0.5 * k * (x - r) ** 2
    n_out = 1
    for i in range(1, n_steps + 1):
        x_old = x
        v_old = v
        a = (-c * v - k * (x - r)) / m
        v_new = v + dt * a
        w_diss += c * v_new * v_new * dt
        v = v_new
        x = x + dt * v
        t = i * dt
        if v > 0.0 and x_old < x1 <= x:
            if n_cross < cross.shape[0]:
                # crossing time and speed interpolated inside the step
                frac = (x1 - x_old) / (x - x_old)
                cross[n_cross, 0] = t - dt * (1.0 - frac)
                cross[n_cross, 1] = v_old + frac * (v - v_old)
            n_cross += 1
        r_new = r
        if v >= 0.0 and x >= x1:
            r_new = r2
        elif v <= 0.0 and x <= x2:
            r_new = r1
        if r_new != r:
            jump = 0.5 * k * ((x - r_new) ** 2 - (x - r) ** 2)
            w_inj += jump
            if n_ev < events.shape[0]:
                events[n_ev, 0] = t
                events[n_ev, 1] = x
                events[n_ev, 2] = r
                events[n_ev, 3] = r_new
                events[n_ev, 4] = jump
            n_ev += 1
            r = r_new
        if v > 0.0 and x_old < x1 <= x and n_cross - 1 < cross.shape[0]:
            cross[n_cross - 1, 2] = w_inj
            cross[n_cross - 1, 3] = w_diss
        if i % every == 0 and n_out < out.shape[0]:
            out[n_out, 0] = t
            out[n_out, 1] = x
            out[n_out, 2] = v
            out[n_out, 3] = r
            out[n_out, 4] = 0.5 * m * v * v + 0.5 * k * (x - r) ** 2
            n_out += 1
        if not (math.isfinite(x) and math.isfinite(v)):
            break
    return n_out, n_cross, n_ev, w_inj, w_diss


@dataclass
class ToyTrace:
    samples: np.ndarray  # columns TRACE_COLUMNS
    crossings: np.ndarray  # (t, xdot, W_inj, W_diss) at upward crossings of x1
    switches: np.ndarray  # (t, x, r_old, r_new, jump)
    w_injected: float
    w_dissipated: float
    params: ToyParams = field(default_factory=ToyParams)

    def column(self, name: str) -> np.ndarray:
        return self.samples[:, TRACE_COLUMNS.index(name)]


def toy_simulate(
    p: ToyParams,
    ic: tuple[float, float],
    T: float,
    dt: float = 1e-5,
    record_every: int = 1,
    r0: float | None = None,
) -> ToyTrace:
    """Semi-implicit Euler integration of ``m x'' + c x' + k (x - r) = 0``.

    Switches are detected at sample resolution; the energy jump of each
    switch is booked at the switching sample.
    """
    if not (dt > 0 and T > 0):
        raise ValueError("need dt > 0 and T > 0")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    x0, v0 = map(float, ic)
    r_init = toy_reference(x0, v0, p) if r0 is None else float(r0)
    n_steps = int(round(T / dt))
    out = np.zeros((n_steps // record_every + 1, 5))
    # the period is set by the spring, so crossings and switches are bounded
    period = 2 * math.pi * math.sqrt(p.m / p.k)
    cap = int(4 * T / period) + 16
    cross = np.zeros((cap, 4))
    events = np.zeros((2 * cap, 5))
    n_out, n_cross, n_ev, w_inj, w_diss = _toy_kernel(
        p.m, p.c, p.k, p.r1, p.r2, p.x1, p.x2, x0, v0, r_init, n_steps, dt, record_every, out, cross, events
    )
    return ToyTrace(
        out[:n_out].copy(), cross[: min(n_cross, cap)].copy(), events[: min(n_ev, 2 * cap)].copy(), w_inj, w_diss, p
    )


@dataclass(frozen=True)
class PoincareResult:
    sequences: list[np.ndarray]
    limits: list[float]
    converged: list[bool]
    spread: float | None  # None with a single initial condition

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


def is_cauchy(seq, tol: float = 1e-6) -> bool:
    """A crossing sequence has settled when its last three steps are below
    ``tol`` relative to the value."""
    seq = np.asarray(seq, dtype=float)
    if seq.size < 4 or not np.all(np.isfinite(seq)):
        return False
    d = np.abs(np.diff(seq))
    return bool(np.max(d[-3:]) <= tol * (1.0 + abs(seq[-1])))


def poincare_convergence(
    p: ToyParams, ics, T: float = 60.0, dt: float = 1e-5, tol: float = 1e-6
) -> PoincareResult:
    """Section velocities at the upward crossings of ``x1`` for each initial
    condition, the per-ic limit and the spread of the limits.

    A trajectory that never crosses the section, or whose crossings do not
    settle, is reported as non-convergent.
    """
    ics = [tuple(map(float, ic)) for ic in ics]
    if not ics:
        raise ValueError("need at least one initial condition")
    seqs, limits, conv = [], [], []
    for ic in ics:
        tr = toy_simulate(p, ic, T, dt, record_every=max(1, int(round(T / dt))))
        seq = tr.crossings[:, 1]
        seqs.append(seq)
        limits.append(float(seq[-1]) if seq.size else math.nan)
        conv.append(is_cauchy(seq, tol))
    spread = None
    if len(ics) > 1:
        spread = float(max(limits) - min(limits)) if all(conv) else math.inf
    return PoincareResult(seqs, limits, conv, spread)


def period_balance(trace: ToyTrace) -> tuple[float, float]:
    """Switch-injected and damper-dissipated energy over the last full period
    (between the last two section crossings)."""
    c = trace.crossings
    if len(c) < 2:
        raise ValueError("need two section crossings for a period")
    return float(c[-1, 2] - c[-2, 2]), float(c[-1, 3] - c[-2, 3])


def write_phase_csv(trace: ToyTrace, path) -> None:
    np.savetxt(path, trace.samples, delimiter=",", header=",".join(TRACE_COLUMNS), comments="", fmt="%.10g")
