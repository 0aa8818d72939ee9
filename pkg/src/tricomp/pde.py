"""Time-dependent cross-checks: method-of-lines simulation and the nonlocal
delayed system.

step_local advances the three-species system in original population
coordinates with a second-order central Laplacian, reflecting (zero-flux)
lateral boundaries and Heun (explicit RK2) time stepping, dt capped by the
diffusion stability bound.

The nonlocal two-species system replaces the third field by the space-time
convolution

    (g**v)(x,t) = int_0^inf  e^{-s/tau}/tau * [heat smoothing by s] v(., t-s) ds,

the kernel being the heat kernel times an exponential memory factor,
normalized so that g**1 = 1.  Numerically the spatial smoothing uses the
exact semigroup of the SAME discrete mirror Laplacian the simulations use
(diagonal in the DCT-I basis), so the defining identity

    w_t = w_xx + (v - w)/tau     for  w = g**v

holds exactly in semidiscrete form and the only quadrature errors are the
piecewise-linear treatment of the time integrand (O(step^2), refinable) and
the e^{-horizon/tau} truncation tail.  The time integral uses
exponential-weighted product-trapezoid weights, which integrate the memory
factor exactly; in particular the discrete mass of the kernel is
1 - e^{-horizon/tau} independent of the step.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .bvp import Grid
from .errors import (
    BlowUpError,
    InsufficientHistoryError,
    NoCrossingError,
    NonMonotoneFrontError,
)
from .model import ModelParams, reaction_original

__all__ = [
    "SimState",
    "KernelSpec",
    "VHistory",
    "step_local",
    "run_local",
    "step_nonlocal",
    "run_nonlocal",
    "convolution_identity_check",
    "measure_speed",
    "laplacian_mirror",
    "stable_dt",
]

_FIELD_LO = -0.05
_FIELD_HI = 1.05


def laplacian_mirror(f: np.ndarray, h: float) -> np.ndarray:
    """Second-order Laplacian with whole-sample mirror (zero-flux) ends."""
    lap = np.empty_like(f)
    lap[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
    lap[0] = 2.0 * (f[1] - f[0])
    lap[-1] = 2.0 * (f[-2] - f[-1])
    return lap / (h * h)


def _mirror_eigenvalues(m: int, h: float) -> np.ndarray:
    """Eigenvalues of laplacian_mirror in the DCT-I basis."""
    k = np.arange(m)
    return (2.0 * np.cos(np.pi * k / (m - 1)) - 2.0) / (h * h)


def stable_dt(grid: Grid, safety: float = 0.2) -> float:
    """Diffusion-limited step: safety * h^2 (the hard bound is h^2/2)."""
    return safety * grid.h * grid.h


@dataclass
class SimState:
    """Fields of one simulation frame in original coordinates.

    w is None for the nonlocal two-species system.  Fields must stay inside
    [-0.05, 1.05]; leaving it raises BlowUpError.
    """

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray | None
    t: float = 0.0

    def fields(self):
        if self.w is None:
            return (self.u, self.v)
        return (self.u, self.v, self.w)

    def check(self):
        for f in self.fields():
            if not np.all(np.isfinite(f)):
                raise BlowUpError(f"non-finite field at t={self.t:g}")
            if f.min() < _FIELD_LO or f.max() > _FIELD_HI:
                raise BlowUpError(
                    f"field left [{_FIELD_LO}, {_FIELD_HI}] at t={self.t:g} "
                    f"(range [{f.min():.3g}, {f.max():.3g}])"
                )
        return self


def _check_dt(grid: Grid, dt: float):
    if dt > 0.5 * grid.h * grid.h:
        raise ValueError(
            f"dt={dt:g} exceeds the diffusion stability bound "
            f"h^2/2 = {0.5 * grid.h ** 2:g}"
        )


def step_local(state: SimState, p: ModelParams, dt: float) -> SimState:
    """One Heun step of the three-species system with zero-flux ends."""
    _check_dt(state.grid, dt)
    h = state.grid.h

    def rhs(u, v, w):
        g1, g2, g3 = reaction_original(p, u, v, w)
        return (
            laplacian_mirror(u, h) + g1,
            laplacian_mirror(v, h) + g2,
            laplacian_mirror(w, h) + g3,
        )

    k1 = rhs(state.u, state.v, state.w)
    mid = (state.u + dt * k1[0], state.v + dt * k1[1], state.w + dt * k1[2])
    k2 = rhs(*mid)
    new = SimState(
        grid=state.grid,
        u=state.u + 0.5 * dt * (k1[0] + k2[0]),
        v=state.v + 0.5 * dt * (k1[1] + k2[1]),
        w=state.w + 0.5 * dt * (k1[2] + k2[2]),
        t=state.t + dt,
    )
    return new.check()


def run_local(state: SimState, p: ModelParams, T: float,
              dt: float | None = None, snapshot_every: float | None = None):
    """Advance to t + T; returns (times, frames) of snapshots including the
    initial and final states.  Frames are (u, v, w) triples of copies."""
    dt = stable_dt(state.grid) if dt is None else dt
    n_steps = int(round(T / dt))
    dt = T / n_steps
    every = max(1, int(round((snapshot_every or T) / dt)))
    times = [state.t]
    frames = [tuple(f.copy() for f in state.fields())]
    for k in range(1, n_steps + 1):
        state = step_local(state, p, dt)
        if k % every == 0 or k == n_steps:
            times.append(state.t)
            frames.append(tuple(f.copy() for f in state.fields()))
    return times, frames, state


@dataclass
class KernelSpec:
    """Discretization of the memory kernel.

    time_horizon defaults to tau * ln(1e6), bounding the neglected tail mass
    by 1e-6; quadrature_step is the snapshot/quadrature spacing of the time
    integral.
    """

    tau: float
    time_horizon: float | None = None
    quadrature_step: float = 0.05

    def __post_init__(self):
        if self.time_horizon is None:
            self.time_horizon = self.tau * math.log(1e6)
        if not (self.tau > 0 and self.time_horizon > 0
                and self.quadrature_step > 0):
            raise ValueError("kernel parameters must be positive")

    @property
    def slots(self) -> int:
        return int(math.ceil(self.time_horizon / self.quadrature_step)) + 1

    def mass(self) -> float:
        """Discrete g**1 over the truncated horizon: 1 - e^{-horizon/tau}
        exactly (the exponential weights integrate constants exactly)."""
        sigma_last = (self.slots - 1) * self.quadrature_step
        return 1.0 - math.exp(-sigma_last / self.tau)


def _exp_trapezoid_weights(offsets: np.ndarray, tau: float) -> np.ndarray:
    """Weights q with  sum_j q_j G(sigma_j) = int e^{-s/tau}/tau G(s) ds
    for piecewise-linear G on the nodes `offsets` (increasing)."""
    w = np.zeros_like(offsets)
    Ea = np.exp(-offsets[:-1] / tau)
    Eb = np.exp(-offsets[1:] / tau)
    d = np.diff(offsets)
    w[:-1] += ((d - tau) * Ea + tau * Eb) / d
    w[1:] += (tau * Ea - (d + tau) * Eb) / d
    return w


class VHistory:
    """Ring buffer of v-snapshots in smoothing-ready (DCT) form.

    Snapshots are pushed at the fixed kernel spacing.  Each stored row keeps
    the snapshot's DCT coefficients pre-multiplied by the heat decay
    accumulated since it was taken, so evaluating the delayed average is one
    small matrix-vector product per call.
    """

    def __init__(self, grid: Grid, kernel: KernelSpec):
        self.grid = grid
        self.kernel = kernel
        m = grid.nodes.size
        self._lam = _mirror_eigenvalues(m, grid.h)
        self._step_decay = np.exp(self.kernel.quadrature_step * self._lam)
        self._rows: deque[np.ndarray] = deque()   # newest first
        self._times: deque[float] = deque()       # newest first
        self._decayed = np.empty((0, m))

    def _dct(self, f: np.ndarray) -> np.ndarray:
        # Plain (unnormalized) DCT-I: a genuine cosine expansion, so scaling
        # coefficient k by exp(sigma lambda_k) applies the exact heat
        # semigroup of the mirror Laplacian.  norm="ortho" would rescale the
        # end SAMPLES and break the eigenvector correspondence.
        return scipy.fft.dct(f, type=1)

    def _idct(self, coef: np.ndarray) -> np.ndarray:
        return scipy.fft.idct(coef, type=1)

    @property
    def latest_time(self) -> float:
        if not self._times:
            raise InsufficientHistoryError("history is empty")
        return self._times[0]

    def covers(self, t: float) -> bool:
        if not self._times:
            return False
        span = t - self._times[-1]
        return (span >= self.kernel.time_horizon - 1e-9
                and t >= self._times[0] - 1e-9)

    def seed_constant(self, v0: np.ndarray, t0: float):
        """Install a constant pre-history v(., s) = v0 for s <= t0."""
        self._rows.clear()
        self._times.clear()
        coef = self._dct(np.asarray(v0, dtype=float))
        ds = self.kernel.quadrature_step
        for k in range(self.kernel.slots):
            self._rows.append(coef)
            self._times.append(t0 - k * ds)
        self._rebuild()

    def _rebuild(self):
        ds = self.kernel.quadrature_step
        rows = []
        for k, coef in enumerate(self._rows):
            rows.append(coef * np.exp(k * ds * self._lam))
        self._decayed = np.array(rows)

    def push(self, t: float, v: np.ndarray):
        ds = self.kernel.quadrature_step
        if self._times:
            gap = t - self._times[0]
            if abs(gap - ds) > 1e-9 * max(1.0, abs(t)):
                raise ValueError(
                    f"snapshots must arrive at the kernel spacing {ds}; "
                    f"got gap {gap:g}"
                )
        coef = self._dct(np.asarray(v, dtype=float))
        self._rows.appendleft(coef)
        self._times.appendleft(t)
        # Age existing rows by one spacing of heat decay, prepend the new one.
        if self._decayed.size:
            aged = self._decayed * self._step_decay
        else:
            aged = self._decayed
        self._decayed = np.vstack([coef[None, :], aged])
        while len(self._times) > self.kernel.slots:
            self._times.pop()
            self._rows.pop()
            self._decayed = self._decayed[:-1]

    def delayed_average(self, t: float, v_now: np.ndarray | None = None) -> np.ndarray:
        """Evaluate (g**v)(., t) from the stored snapshots.

        v_now supplies the integrand at lag zero when t is ahead of the last
        snapshot; at an aligned time it may be omitted.
        """
        if not self.covers(t):
            raise InsufficientHistoryError(
                f"history spans [{self._times[-1] if self._times else '-'}, "
                f"{self._times[0] if self._times else '-'}], cannot evaluate "
                f"at t={t:g} with horizon {self.kernel.time_horizon:g}"
            )
        tau = self.kernel.tau
        gap = t - self._times[0]
        offsets = gap + self.kernel.quadrature_step * np.arange(len(self._times))
        if gap > 1e-12 and v_now is not None:
            nodes = np.concatenate([[0.0], offsets])
            q = _exp_trapezoid_weights(nodes, tau)
            head = q[0] * self._dct(np.asarray(v_now, dtype=float))
            hist = q[1:] @ self._decayed
            coef = head + np.exp(gap * self._lam) * hist
        else:
            q = _exp_trapezoid_weights(offsets, tau)
            coef = q @ self._decayed
            if gap > 1e-12:
                coef = np.exp(gap * self._lam) * coef
        return self._idct(coef)


def step_nonlocal(history: VHistory, state: SimState, p: ModelParams,
                  kernel: KernelSpec, dt: float) -> SimState:
    """One Heun step of the delayed two-species system.

    The delayed competition field g**v is evaluated once at the step's start
    and held frozen across the two stages (an O(dt) approximation inside an
    O(dt^2) scheme; the delay field varies on the slow tau scale).
    """
    _check_dt(state.grid, dt)
    if state.w is not None:
        raise ValueError("nonlocal stepping expects a two-field state")
    h = state.grid.h
    w_eff = history.delayed_average(state.t, state.v)

    def rhs(u, v):
        g1 = u * (1.0 - u - p.a1 * w_eff)
        g2 = p.r * v * (1.0 - p.a2 * u - v)
        return (laplacian_mirror(u, h) + g1, laplacian_mirror(v, h) + g2)

    k1 = rhs(state.u, state.v)
    mid = (state.u + dt * k1[0], state.v + dt * k1[1])
    k2 = rhs(*mid)
    new = SimState(
        grid=state.grid,
        u=state.u + 0.5 * dt * (k1[0] + k2[0]),
        v=state.v + 0.5 * dt * (k1[1] + k2[1]),
        w=None,
        t=state.t + dt,
    )
    return new.check()


def run_nonlocal(state: SimState, p: ModelParams, kernel: KernelSpec,
                 T: float, dt: float | None = None,
                 history: VHistory | None = None,
                 snapshot_every: float | None = None):
    """Advance the delayed system to t + T.

    Without an explicit history, a constant pre-history equal to the initial
    v is installed.  dt is snapped to divide the kernel spacing so snapshot
    pushes stay aligned.
    """
    ds = kernel.quadrature_step
    dt = min(stable_dt(state.grid), ds) if dt is None else dt
    per_slot = max(1, int(round(ds / dt)))
    dt = ds / per_slot
    _check_dt(state.grid, dt)

    if history is None:
        history = VHistory(state.grid, kernel)
        history.seed_constant(state.v, state.t)
    if not history.covers(state.t):
        raise InsufficientHistoryError(
            "history does not span the kernel horizon at the start time"
        )

    n_steps = int(round(T / dt))
    every = max(1, int(round((snapshot_every or T) / dt)))
    times = [state.t]
    frames = [(state.u.copy(), state.v.copy())]
    for k in range(1, n_steps + 1):
        state = step_nonlocal(history, state, p, kernel, dt)
        if k % per_slot == 0:
            history.push(state.t, state.v)
        if k % every == 0 or k == n_steps:
            times.append(state.t)
            frames.append((state.u.copy(), state.v.copy()))
    return times, frames, state, history


def convolution_identity_check(v_fn, kernel: KernelSpec, grid: Grid,
                               times=(0.5,), dt_deriv: float | None = None) -> dict:
    """Residual of w_t = w_xx + (v - w)/tau for w built by the kernel
    quadrature from an analytic field v_fn(x_array, t).

    The spatial operator is the same discrete mirror Laplacian the
    simulations use, so the residual isolates the time-quadrature and
    time-derivative errors; both shrink quadratically under refinement of
    the kernel's quadrature_step (dt_deriv defaults to half of it).
    """
    hist = VHistory(grid, kernel)
    x = grid.nodes
    ds = kernel.quadrature_step
    delta = ds / 2.0 if dt_deriv is None else dt_deriv

    def w_at(t: float) -> np.ndarray:
        offsets = ds * np.arange(kernel.slots)
        q = _exp_trapezoid_weights(offsets, kernel.tau)
        coef = np.zeros(x.size)
        for sigma, qj in zip(offsets, q):
            coef += qj * np.exp(sigma * hist._lam) * hist._dct(v_fn(x, t - sigma))
        return hist._idct(coef)

    worst = 0.0
    details = []
    for t in times:
        w0 = w_at(t)
        wp = w_at(t + delta)
        wm = w_at(t - delta)
        w_t = (wp - wm) / (2.0 * delta)
        res = w_t - laplacian_mirror(w0, grid.h) - (v_fn(x, t) - w0) / kernel.tau
        sup = float(np.max(np.abs(res[1:-1])))
        details.append({"t": t, "residual": sup})
        worst = max(worst, sup)
    return {"residual": worst, "details": details,
            "kernel_mass": kernel.mass()}


def _level_crossing(x: np.ndarray, f: np.ndarray, level: float) -> float:
    """Position of the unique level crossing of a monotone front."""
    s = f - level
    sign_change = np.nonzero(s[:-1] * s[1:] < 0)[0]
    exact = np.nonzero(s == 0)[0]
    n_cross = sign_change.size + exact.size
    if n_cross == 0:
        raise NoCrossingError(f"field never crosses level {level}")
    if n_cross > 1:
        raise NonMonotoneFrontError(
            f"field crosses level {level} {n_cross} times"
        )
    if exact.size:
        return float(x[exact[0]])
    i = int(sign_change[0])
    frac = s[i] / (s[i] - s[i + 1])
    return float(x[i] + frac * (x[i + 1] - x[i]))


def measure_speed(times, profiles, grid: Grid, level: float = 0.5) -> dict:
    """Empirical front speed from level-crossing positions.

    Linear regression of the interpolated crossing position against time over
    the last half of the run; returns slope, R^2 and the positions.
    """
    x = grid.nodes
    pos = np.array([_level_crossing(x, f, level) for f in profiles])
    t = np.asarray(times, dtype=float)
    half = t >= 0.5 * (t[0] + t[-1])
    th, ph = t[half], pos[half]
    A = np.column_stack([np.ones_like(th), th])
    coef, *_ = np.linalg.lstsq(A, ph, rcond=None)
    fitted = A @ coef
    ss_res = float(np.sum((ph - fitted) ** 2))
    ss_tot = float(np.sum((ph - np.mean(ph)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return {"speed": float(coef[1]), "r_squared": r2,
            "positions": pos.tolist(), "times": t.tolist()}
