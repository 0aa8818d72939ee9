"""Monotone pulled-front solutions of scalar KPP problems.

The building blocks of the upper/lower solution constructions are fronts of

    w'' - c w' + f(w) = 0,   w(-inf) = 0,  w(+inf) = b,

with f of KPP type: f > 0 on (0, b), f(0) = f(b) = 0, f'(0) = abar > 0,
f'(b) = -b1 < 0.  A monotone front exists exactly for c >= 2 sqrt(abar); at
-infinity it decays like e^{lambda xi} with lambda = (c - sqrt(c^2-4 abar))/2,
picking up a (A + B xi) factor at the critical speed, and at +infinity it
approaches b like e^{mu xi} with mu = (c - sqrt(c^2+4 b1))/2.

The solver runs damped Newton on the central-difference discretization with a
tridiagonal Jacobian; if Newton leaves the bracket [0, b] or stalls it falls
back to contractive Picard sweeps

    y'' - c y' - beta y = -f(y) - beta y,   beta = max |f'| on [0, b],

which pull the iterate back into the basin, and then retries Newton.  Fronts
are unique only up to translation, so the converged profile is pinned to
w(0) = b/2 by a post-hoc interpolation shift followed by a short Newton
re-polish that restores the discrete residual.

Truncation detail that matters: for c above the critical speed the
linearization at 0 has two positive roots lambda_minus < lambda_plus, and a
profile that is exactly zero at the left end cannot carry the slow
e^{lambda_minus xi} tail of the pulled front -- the zero value forces the
steep-mode combination, and the only such solution parks its interface at the
right boundary.  The left Dirichlet value is therefore anchored at the
matched tail value b e^{-lambda_minus L} (~1e-13 at the default domain): any
small positive anchor selects a genuine translate of the front, and the
anchor is rescaled whenever the phase is shifted.  At the critical speed the
double root makes a zero value harmless, and the same formula produces an
anchor that is zero to machine precision anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .asymptotics import MINUS, PLUS, DecayFit, fit_tail
from .bvp import Grid, Profile, apply_wave_operator, assemble, solve
from .errors import ConvergenceError, NoMonotoneWaveError, TailTooShortError

__all__ = [
    "KppProblem",
    "KppWave",
    "solve_kpp",
    "kpp_plus_decay",
    "normalize_phase",
]

_CRITICAL_TOL = 1e-9


@dataclass(frozen=True)
class KppProblem:
    """A KPP nonlinearity together with the requested front speed.

    Use the factories: `logistic` covers every nonlinearity the wave
    constructions need (they are all abar*u*(1-u/b) for various b); `custom`
    accepts an arbitrary KPP-type f with its derivative.
    """

    f: Callable
    df: Callable
    b: float
    abar: float
    b1: float
    c: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("right equilibrium b must be positive")
        if not self.abar > 0:
            raise ValueError("f'(0) must be positive")
        if not self.b1 > 0:
            raise ValueError("-f'(b) must be positive")
        if abs(float(self.f(0.0))) > 1e-12 or abs(float(self.f(self.b))) > 1e-12:
            raise ValueError("f must vanish at 0 and b")
        samples = self.b * np.linspace(0.015625, 0.984375, 63)
        if np.any(np.asarray(self.f(samples)) <= 0):
            raise ValueError("f must be positive on (0, b)")

    @classmethod
    def logistic(cls, abar: float, b: float, c: float) -> "KppProblem":
        """f(u) = abar * u * (1 - u/b); f'(0) = abar, f'(b) = -abar."""
        return cls(
            f=lambda u: abar * u * (1.0 - u / b),
            df=lambda u: abar * (1.0 - 2.0 * u / b),
            b=b, abar=abar, b1=abar, c=c,
        )

    @classmethod
    def custom(cls, f: Callable, df: Callable, b: float, c: float) -> "KppProblem":
        return cls(f=f, df=df, b=b, abar=float(df(0.0)), b1=-float(df(b)), c=c)

    @property
    def critical_speed(self) -> float:
        return 2.0 * math.sqrt(self.abar)

    @property
    def is_critical(self) -> bool:
        return abs(self.c - self.critical_speed) < _CRITICAL_TOL

    @property
    def rate_minus(self) -> float:
        """Decay rate toward 0: (c - sqrt(c^2 - 4 abar))/2."""
        disc = max(self.c * self.c - 4.0 * self.abar, 0.0)
        return (self.c - math.sqrt(disc)) / 2.0

    @property
    def rate_plus(self) -> float:
        """Approach rate toward b: (c - sqrt(c^2 + 4 b1))/2 (negative)."""
        return (self.c - math.sqrt(self.c * self.c + 4.0 * self.b1)) / 2.0


@dataclass
class KppWave:
    """A converged, phase-normalized front."""

    profile: Profile
    problem: KppProblem
    c: float
    critical: bool
    decay_minus: DecayFit | None
    decay_plus: DecayFit | None
    residual: float
    newton_iterations: int
    picard_sweeps: int

    def report(self) -> dict:
        return {
            "c": self.c,
            "critical": self.critical,
            "residual": self.residual,
            "rate_minus": None if self.decay_minus is None else self.decay_minus.rate,
            "rate_plus": None if self.decay_plus is None else self.decay_plus.rate,
            "rate_minus_predicted": self.problem.rate_minus
            if not self.critical else math.sqrt(self.problem.abar),
            "rate_plus_predicted": self.problem.rate_plus,
            "newton_iterations": self.newton_iterations,
            "picard_sweeps": self.picard_sweeps,
        }


def _sup_residual(values: np.ndarray, grid: Grid, c: float, f: Callable) -> float:
    op = apply_wave_operator(values, grid, c) + f(values[1:-1])
    return float(np.max(np.abs(op)))


def _residual_floor(grid: Grid, b: float) -> float:
    # Rounding noise of the central second difference on values of size b.
    return 100.0 * np.finfo(float).eps * b / (grid.h * grid.h)


def _newton(values, grid, c, problem, tol, max_iter=60, bracket_slack=0.02):
    """Damped Newton on the discretized front equation.

    Returns (converged, values, iterations).  A step is accepted only if it
    reduces the sup residual and stays near the bracket [0, b]; otherwise the
    caller falls back to Picard sweeps.  Boundary values are held fixed.
    """
    h = grid.h
    inv_h2 = 1.0 / (h * h)
    adv = c / (2.0 * h)
    lo = -bracket_slack * problem.b
    hi = (1.0 + bracket_slack) * problem.b
    res = _sup_residual(values, grid, c, problem.f)
    for it in range(1, max_iter + 1):
        if res <= tol:
            return True, values, it - 1
        interior = values[1:-1]
        F = apply_wave_operator(values, grid, c) + problem.f(interior)
        n = interior.size
        ab = np.zeros((3, n))
        ab[0, 1:] = inv_h2 - adv
        ab[1, :] = -2.0 * inv_h2 + problem.df(interior)
        ab[2, :-1] = inv_h2 + adv
        try:
            delta = scipy.linalg.solve_banded((1, 1), ab, -F)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            return False, values, it
        step = 1.0
        accepted = False
        for _ in range(12):
            cand = values.copy()
            cand[1:-1] = interior + step * delta
            if cand[1:-1].min() >= lo and cand[1:-1].max() <= hi:
                cand_res = _sup_residual(cand, grid, c, problem.f)
                if cand_res < res:
                    values, res = cand, cand_res
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            return res <= tol, values, it
    return res <= tol, values, max_iter


def _picard(values, grid, c, problem, beta, sweeps):
    bc = (values[0], values[-1])
    for _ in range(sweeps):
        interior = values[1:-1]
        rhs = -(problem.f(interior) + beta * interior)
        new_interior = solve(assemble(grid, c, beta, rhs, bc))
        values = values.copy()
        values[1:-1] = new_interior
    return values


def normalize_phase(values: np.ndarray, grid: Grid, level: float) -> tuple[np.ndarray, float]:
    """Shift a monotone profile so it crosses `level` at xi = 0.

    Linear interpolation between nodes; values beyond the original domain take
    the end values.  Returns (shifted values, applied shift).
    """
    xi = grid.nodes
    k = int(np.searchsorted(values, level))
    if k <= 0 or k >= values.size:
        raise ConvergenceError("profile does not cross the normalization level")
    frac = (level - values[k - 1]) / (values[k] - values[k - 1])
    x_cross = xi[k - 1] + frac * grid.h
    shifted = np.interp(xi + x_cross, xi, values, left=values[0], right=values[-1])
    shifted[0], shifted[-1] = values[0], values[-1]
    return shifted, x_cross


def solve_kpp(problem: KppProblem, grid: Grid, tol: float = 1e-11,
              max_rounds: int = 12, picard_batch: int = 400) -> KppWave:
    """Compute the monotone front for `problem` on `grid`.

    Raises NoMonotoneWaveError below the critical speed (complex linearization
    roots) and ConvergenceError if the Newton/Picard alternation stalls.  The
    returned profile is strictly increasing, has the exact limits (0, b) at
    the truncated ends, and satisfies w(0) = b/2.
    """
    c = problem.c
    c_crit = problem.critical_speed
    if c < c_crit - 1e-12:
        raise NoMonotoneWaveError(c, c_crit)

    lam = math.sqrt(problem.abar) if problem.is_critical else problem.rate_minus
    if lam * grid.half_width < math.log(1e10):
        raise ValueError(
            f"grid too narrow: e^(-lambda L) = {math.exp(-lam * grid.half_width):.2e}"
            " exceeds 1e-10; enlarge the domain"
        )

    xi = grid.nodes
    anchor = problem.b * math.exp(-lam * grid.half_width)
    values = problem.b / (1.0 + np.exp(np.clip(-lam * xi, -700.0, 700.0)))
    values[0], values[-1] = anchor, problem.b

    floor = _residual_floor(grid, problem.b)
    target = max(tol, floor)

    u_samples = problem.b * np.linspace(0.0, 1.0, 1025)
    beta = float(np.max(np.abs(problem.df(u_samples))))

    newton_total = 0
    picard_total = 0
    converged = False
    for _ in range(max_rounds):
        ok, values, its = _newton(values, grid, c, problem, target)
        newton_total += its
        if ok:
            converged = True
            break
        values = _picard(values, grid, c, problem, beta, picard_batch)
        picard_total += picard_batch
    if not converged:
        res = _sup_residual(values, grid, c, problem.f)
        raise ConvergenceError(
            f"front solve stalled at residual {res:.3e}", residual=res
        )

    # Phase pinning: interpolation shift (rescaling the left anchor to the
    # shifted translate's value), then a short re-polish to restore the
    # discrete residual the interpolation degraded, iterated until the value
    # at xi = 0 is back on target.
    for _ in range(4):
        values, shift = normalize_phase(values, grid, problem.b / 2.0)
        anchor = min(anchor * math.exp(lam * shift), 0.9 * problem.b)
        values[0] = anchor
        ok, values, its = _newton(values, grid, c, problem, target)
        newton_total += its
        if not ok:
            values = _picard(values, grid, c, problem, beta, picard_batch)
            picard_total += picard_batch
            continue
        at_zero = float(np.interp(0.0, xi, values))
        if abs(at_zero - problem.b / 2.0) <= 1e-9 * problem.b:
            break

    diffs = np.diff(values)
    if not np.all(diffs > 0):
        bad = int(np.argmin(diffs))
        raise ConvergenceError(
            f"converged profile not strictly increasing near node {bad}"
        )

    profile = Profile(grid, values, anchor, problem.b)
    residual = _sup_residual(values, grid, c, problem.f)

    allow_poly = True  # model competition decides; critical fronts win poly
    try:
        decay_minus = fit_tail(profile, MINUS, allow_poly=allow_poly)
    except TailTooShortError:
        decay_minus = None
    try:
        decay_plus = fit_tail(profile, PLUS, allow_poly=False)
    except TailTooShortError:
        decay_plus = None

    return KppWave(
        profile=profile,
        problem=problem,
        c=c,
        critical=problem.is_critical,
        decay_minus=decay_minus,
        decay_plus=decay_plus,
        residual=residual,
        newton_iterations=newton_total,
        picard_sweeps=picard_total,
    )


def kpp_plus_decay(wave: KppWave, lo_frac: float = 1e-8,
                   hi_frac: float = 1e-3) -> DecayFit:
    """Fit the approach rate toward b on the +infinity side of a front.

    For every logistic family the prediction is (c - sqrt(c^2 + 4 b1))/2 with
    b1 = -f'(b); at the critical speed it degenerates to
    sqrt(abar) - sqrt(abar + b1).
    """
    return fit_tail(wave.profile, PLUS, allow_poly=False,
                    lo_frac=lo_frac, hi_frac=hi_frac)
