"""Upper/lower solution pairs and the monotone iteration to the wave.

The existence construction is fully constructive and everything in it is
checkable, so this module both builds the objects and verifies them:

* H2a regime: the upper solution is (u, u, u) with u the plain logistic
  front of speed c; the lower solution is (u, l u, lbar u) built from the
  compressed logistic front with limit (1-a1)/(1+l), where
  0 <= l < r a2/(1-a1+r) and 0 <= lbar <= l/((1-a1) tau + 1).

* H2b regime: the lower solution is the same family (with l additionally
  below 1); the upper solution is (u, v, v) built from the converged
  two-species wave, which is admissible exactly when a2 u >= v holds along
  that wave (the operational "a2 large enough" test).

* Two-species case: lower (u, u) from the plain logistic front, upper the
  three-branch cap of the stretched front with limit (1-a1)/l,
  0 < l <= (1-a1-r(a1 a2-1))/(1+r-a1).

All scalar fronts are scalar multiples of one plain logistic front solved
once per grid, so the pair orderings hold pointwise exactly, and the
upper/lower inequalities hold discretely up to the front solver's residual
(~1e-12), because the defining algebra only uses the discrete front equation
plus pointwise identities.

The iteration itself is the classical quasi-monotone scheme: with a shift
beta dominating the diagonal reaction partials, each sweep solves per
component

    w'' - c w' - beta w = -f(W_prev) - beta w_prev

with Dirichlet ends.  Started from the upper solution the iterates decrease
monotonically and stay above the lower solution (asserted every sweep);
started from the lower solution they increase.  A short coupled Newton polish
drives the final residual from O(tol) to ~1e-10.

Left boundary values follow the matched slow-decay ray: all components share
the decay rate lambda_minus toward zero, with exact amplitude ratios
v/u = r a2/(r+1-a1) and w/v = 1/(1+tau(1-a1)) (the same difference operator
appears in every linearized row, so these ratios hold for the discrete system
exactly).  The regime inequalities are precisely what keeps this ray between
the lower and upper solutions at the boundary node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .asymptotics import MINUS, PLUS, DecayFit, fit_tail
from .bvp import (
    Grid,
    Profile,
    apply_wave_operator,
    assemble,
    solve,
    write_triple_csv,
)
from .errors import (
    ConvergenceError,
    GridMismatchError,
    H3UnsatisfiedError,
    MaxIterationsError,
    NoMonotoneWaveError,
    OrderingFailureError,
    PreconditionError,
    RegimeError,
    SandwichViolationError,
    TailTooShortError,
    VerificationError,
)
from .model import (
    ModelParams,
    Regime,
    RegimeVariant,
    classify_regime,
    rates,
    reaction_jacobian_monotone,
    reaction_monotone,
)
from .scalar_waves import KppProblem, solve_kpp

__all__ = [
    "BoundingPair",
    "IterationConfig",
    "WaveSolution",
    "default_l_h2a",
    "default_l_bar",
    "default_l_lv2",
    "build_pair_h2a",
    "build_pair_lv2",
    "build_pair_h2b",
    "verify_pair",
    "iterate",
    "solve_lv2",
    "three_species_wave",
    "sliding_order_check",
    "uniqueness_check",
    "slaved_tail_ratios",
]

GAUSS_SEIDEL = "gauss-seidel"
JACOBI = "jacobi"


# ---------------------------------------------------------------------------
# reaction terms of the two-species subsystem (cooperative coordinates)

def reaction_lv2(p: ModelParams, u, v):
    f1 = u * (1.0 - p.a1 - u + p.a1 * v)
    f2 = p.r * (1.0 - v) * (p.a2 * u - v)
    return f1, f2


def reaction_jacobian_lv2(p: ModelParams, u, v):
    one = np.ones_like(np.asarray(u, dtype=float))
    j11 = 1.0 - p.a1 - 2.0 * u + p.a1 * v
    j12 = p.a1 * u
    j21 = p.r * p.a2 * (1.0 - v)
    j22 = p.r * (2.0 * v - p.a2 * u - 1.0)
    return (j11, j12), (j21, j22)


def _reactions(system: str, p: ModelParams, rows) -> np.ndarray:
    if system == "three":
        return np.stack(reaction_monotone(p, rows[0], rows[1], rows[2]))
    return np.stack(reaction_lv2(p, rows[0], rows[1]))


def _jacobian_blocks(system: str, p: ModelParams, rows):
    if system == "three":
        return reaction_jacobian_monotone(p, rows[0], rows[1], rows[2])
    return reaction_jacobian_lv2(p, rows[0], rows[1])


def slaved_tail_ratios(p: ModelParams) -> tuple[float, float]:
    """Amplitude ratios (v/u, w/u) of the shared slow tail toward zero.

    Eliminating the common difference operator from the linearized rows gives
    v/u = r a2/(r + 1 - a1) and w/v = 1/(1 + tau (1-a1)), independent of the
    discretization.
    """
    rho_v = p.r * p.a2 / (p.r + 1.0 - p.a1)
    rho_w = rho_v / (1.0 + p.tau * (1.0 - p.a1))
    return rho_v, rho_w


# ---------------------------------------------------------------------------
# defaults for the free construction constants

def default_l_lv2(p: ModelParams) -> float:
    """Largest admissible l for the two-species upper solution:
    (1 - a1 - r(a1 a2 - 1)) / (1 + r - a1)."""
    bound = (1.0 - p.a1 - p.r * (p.a1 * p.a2 - 1.0)) / (1.0 + p.r - p.a1)
    if bound <= 0:
        raise RegimeError(
            f"admissible-l bound {bound:.3g} is nonpositive; the stretched "
            "upper solution construction is unavailable at these parameters"
        )
    return bound


def default_l_h2a(p: ModelParams, cap_at_one: bool = False) -> float:
    """Midpoint of the admissible range [0, r a2/(1-a1+r)) for the lower
    solution's v-scale (capped additionally below 1 in the H2b regime)."""
    bound = p.r * p.a2 / (1.0 - p.a1 + p.r)
    if cap_at_one:
        bound = min(bound, 1.0)
    return bound / 2.0


def default_l_bar(p: ModelParams, l: float) -> float:
    """Midpoint of [0, l / ((1-a1) tau + 1)] for the w-scale."""
    return l / ((1.0 - p.a1) * p.tau + 1.0) / 2.0


# ---------------------------------------------------------------------------
# pairs

@dataclass
class BoundingPair:
    """An ordered (lower <= upper) pair of discrete upper/lower solutions."""

    upper: tuple[Profile, ...]
    lower: tuple[Profile, ...]
    system: str                      # "three" or "lv2"
    params: ModelParams
    c: float
    shift_applied: float = 0.0
    verification: dict | None = None
    meta: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.upper[0].grid

    @property
    def verified(self) -> bool:
        return bool(self.verification and self.verification["all_ok"])

    def ordered(self, tol: float = 1e-12) -> bool:
        return all(
            np.all(up.values >= lo.values - tol)
            for up, lo in zip(self.upper, self.lower)
        )


def verify_pair(pair: BoundingPair, p: ModelParams, c: float,
                slack: float = 1e-8) -> dict:
    """Evaluate the defining inequalities of the pair at every node.

    Upper solutions must keep the discretized operator <= slack, lower
    solutions >= -slack, and the boundary values must dominate (be dominated
    by) the limit states.  Report-only: flags, worst violations and their
    locations; nothing is raised.
    """
    names = ("u", "v", "w")[: len(pair.upper)]
    grid = pair.grid
    report: dict = {"system": pair.system, "slack": slack,
                    "upper": {}, "lower": {}, "boundary": {}}
    ok = True

    for role, profiles, sign in (("upper", pair.upper, +1.0),
                                 ("lower", pair.lower, -1.0)):
        rows = np.stack([q.values for q in profiles])
        fvals = _reactions(pair.system, p, rows)
        for m, name in enumerate(names):
            op = apply_wave_operator(rows[m], grid, c) + fvals[m, 1:-1]
            violation = float(np.max(sign * op))
            node = int(np.argmax(sign * op)) + 1
            passed = violation <= slack
            ok = ok and passed
            report[role][name] = {
                "max_violation": violation,
                "node": node,
                "ok": passed,
            }

    up_left = np.array([q.values[0] for q in pair.upper])
    up_right = np.array([q.values[-1] for q in pair.upper])
    lo_left = np.array([q.values[0] for q in pair.lower])
    lo_right = np.array([q.values[-1] for q in pair.lower])
    boundary_ok = (
        bool(np.all(up_left >= -slack))
        and bool(np.all(up_right >= 1.0 - slack))
        and bool(np.all(lo_left <= slack))
        and bool(np.all(lo_right <= 1.0 + slack))
    )
    report["boundary"] = {
        "upper_left": up_left.tolist(),
        "upper_right": up_right.tolist(),
        "lower_left": lo_left.tolist(),
        "lower_right": lo_right.tolist(),
        "ok": boundary_ok,
    }
    ok = ok and boundary_ok
    report["ordered"] = pair.ordered()
    report["all_ok"] = ok and report["ordered"]
    return report


def _raise_if_unverified(pair: BoundingPair):
    rep = pair.verification
    if rep is None or rep["all_ok"]:
        return
    worst = None
    for role in ("upper", "lower"):
        for name, entry in rep[role].items():
            if not entry["ok"]:
                if worst is None or entry["max_violation"] > worst[3]:
                    worst = (role, name, entry["node"], entry["max_violation"])
    if worst is None:
        raise VerificationError("pair boundary/ordering check failed")
    role, name, node, violation = worst
    raise VerificationError(
        f"{role} solution violates the {name}-inequality at node {node} "
        f"by {violation:.3e}",
        component=name, node=node, violation=violation,
    )


def build_pair_h2a(p: ModelParams, c: float, grid: Grid,
                   l: float | None = None, l_bar: float | None = None,
                   kpp_tol: float = 1e-12) -> BoundingPair:
    """Upper (u,u,u) and lower (u, l u, lbar u) for the H2a regime.

    Both come from one plain logistic front: the compressed front with limit
    (1-a1)/(1+l) is exactly (1-a1)/(1+l) times the plain one, so the pair is
    ordered pointwise with no shift.
    """
    regime = classify_regime(p)
    if regime.variant is not RegimeVariant.H2A:
        raise RegimeError(f"H2a construction needs the H2a regime, got "
                          f"{regime.variant.value}")
    if rates(p, c).complex_roots:
        raise NoMonotoneWaveError(c, p.c_min)

    l_bound = p.r * p.a2 / (1.0 - p.a1 + p.r)
    if l is None:
        l = default_l_h2a(p)
    if not (0.0 <= l < l_bound):
        raise RegimeError(f"l={l} outside the admissible [0, {l_bound:.6g})")
    lbar_bound = l / ((1.0 - p.a1) * p.tau + 1.0)
    if l_bar is None:
        l_bar = default_l_bar(p, l)
    if not (0.0 <= l_bar <= lbar_bound):
        raise RegimeError(
            f"l_bar={l_bar} outside the admissible [0, {lbar_bound:.6g}]"
        )

    front = solve_kpp(KppProblem.logistic(1.0 - p.a1, 1.0, c), grid,
                      tol=kpp_tol)
    ubar = front.profile
    s = (1.0 - p.a1) / (1.0 + l)
    pair = BoundingPair(
        upper=(ubar, ubar, ubar),
        lower=(ubar.scaled(s), ubar.scaled(s * l), ubar.scaled(s * l_bar)),
        system="three",
        params=p,
        c=c,
        meta={"l": l, "l_bar": l_bar, "front": front},
    )
    pair.verification = verify_pair(pair, p, c)
    _raise_if_unverified(pair)
    return pair


def build_pair_lv2(p: ModelParams, c: float, grid: Grid,
                   l: float | None = None,
                   kpp_tol: float = 1e-12) -> BoundingPair:
    """Lower (u, u) and capped stretched upper for the two-species system.

    The upper solution follows the stretched front u_hat with limit
    (1-a1)/l >= 1 and caps each component at 1:
        (min(u_hat, 1), min((1-l)/a1 u_hat, 1)).
    The caps only kink the profiles concavely, which the discrete operator
    under diagonal dominance can only push further below zero, so the
    discrete inequalities survive the caps.
    """
    regime = classify_regime(p)
    if regime.variant is not RegimeVariant.H2B:
        raise RegimeError(f"the (u,u) lower solution needs the H2b regime, "
                          f"got {regime.variant.value}")
    if rates(p, c).complex_roots:
        raise NoMonotoneWaveError(c, p.c_min)

    l_bound = default_l_lv2(p)
    if l is None:
        l = l_bound
    if not (0.0 < l <= l_bound):
        raise RegimeError(f"l={l} outside the admissible (0, {l_bound:.6g}]")

    front = solve_kpp(KppProblem.logistic(1.0 - p.a1, 1.0, c), grid,
                      tol=kpp_tol)
    plain = front.profile
    stretch = (1.0 - p.a1) / l
    uhat = plain.values * stretch
    upper_u = Profile(grid, np.minimum(uhat, 1.0))
    upper_v = Profile(grid, np.minimum((1.0 - l) / p.a1 * uhat, 1.0))
    pair = BoundingPair(
        upper=(upper_u, upper_v),
        lower=(plain, plain),
        system="lv2",
        params=p,
        c=c,
        meta={"l": l, "front": front},
    )
    pair.verification = verify_pair(pair, p, c)
    _raise_if_unverified(pair)
    return pair


def build_pair_h2b(p: ModelParams, c: float, grid: Grid,
                   l: float | None = None, l_bar: float | None = None,
                   lv2_l: float | None = None,
                   config: "IterationConfig | None" = None,
                   kpp_tol: float = 1e-12) -> BoundingPair:
    """Upper (u,v,v) from the converged two-species wave, lower as in H2a.

    Admissibility of the upper solution is exactly the dominance predicate
    a2 u >= v along the two-species wave; its minimum over interior nodes is
    reported and a negative value raises H3UnsatisfiedError.  The pair is
    ordered by shifting the upper solution left by the smallest eta found by
    doubling-then-bisection (eta = 0 suffices when both constructions share
    one plain front, which they do here).
    """
    regime = classify_regime(p)
    if regime.variant is not RegimeVariant.H2B:
        raise RegimeError(f"H2b construction needs the H2b regime, got "
                          f"{regime.variant.value}")
    if rates(p, c).complex_roots:
        raise NoMonotoneWaveError(c, p.c_min)

    pair2 = build_pair_lv2(p, c, grid, l=lv2_l, kpp_tol=kpp_tol)
    wave2 = iterate(pair2, p, c, config)

    uhat, vhat = wave2.u, wave2.v
    h3_min = float(np.min(p.a2 * uhat.values[1:-1] - vhat.values[1:-1]))
    if h3_min < 0.0:
        raise H3UnsatisfiedError(h3_min)
    regime.h3_satisfied = True

    l_bound = min(p.r * p.a2 / (1.0 - p.a1 + p.r), 1.0)
    if l is None:
        l = default_l_h2a(p, cap_at_one=True)
    if not (0.0 <= l < l_bound):
        raise RegimeError(f"l={l} outside the admissible [0, {l_bound:.6g})")
    lbar_bound = l / ((1.0 - p.a1) * p.tau + 1.0)
    if l_bar is None:
        l_bar = default_l_bar(p, l)
    if not (0.0 <= l_bar <= lbar_bound):
        raise RegimeError(
            f"l_bar={l_bar} outside the admissible [0, {lbar_bound:.6g}]"
        )

    plain = pair2.meta["front"].profile
    s = (1.0 - p.a1) / (1.0 + l)
    lower = (plain.scaled(s), plain.scaled(s * l), plain.scaled(s * l_bar))
    upper = (uhat, vhat, vhat)

    eta = _order_by_shift(upper, lower, grid)
    if eta > 0.0:
        upper = tuple(q.shifted(eta) for q in upper)

    pair = BoundingPair(
        upper=upper,
        lower=lower,
        system="three",
        params=p,
        c=c,
        shift_applied=eta,
        meta={
            "l": l,
            "l_bar": l_bar,
            "lv2_l": pair2.meta["l"],
            "front": pair2.meta["front"],
            "lv2_wave": wave2,
            "h3_predicate_min": h3_min,
            "regime": regime,
        },
    )
    pair.verification = verify_pair(pair, p, c)
    _raise_if_unverified(pair)
    return pair


def _ordered_at_shift(upper, lower, eta: float) -> bool:
    if eta == 0.0:
        return all(np.all(u.values >= lo.values - 1e-12)
                   for u, lo in zip(upper, lower))
    return all(np.all(u.shifted(eta).values >= lo.values - 1e-12)
               for u, lo in zip(upper, lower))


def _order_by_shift(upper, lower, grid: Grid) -> float:
    """Smallest left shift eta in {0, 1, 2, 4, ...} then bisected to ~h."""
    if _ordered_at_shift(upper, lower, 0.0):
        return 0.0
    eta = 1.0
    limit = grid.half_width / 2.0
    while eta <= limit and not _ordered_at_shift(upper, lower, eta):
        eta *= 2.0
    if eta > limit:
        raise OrderingFailureError(
            f"no shift up to {limit} orders the pair"
        )
    lo, hi = eta / 2.0, eta
    while hi - lo > grid.h:
        mid = 0.5 * (lo + hi)
        if _ordered_at_shift(upper, lower, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# the monotone iteration

@dataclass
class IterationConfig:
    """Knobs of the monotone iteration.

    beta=None computes the default shift: 1 + 20% headroom over the largest
    diagonal reaction partial sampled on a 9-per-axis lattice of the unit
    box.  tol is the stopping sup-norm of successive sweeps.  sweep_order
    "gauss-seidel" uses the freshest components (u -> v -> w); "jacobi"
    evaluates all reactions at the previous iterate.  start selects which end
    of the sandwich the iteration descends/ascends from.
    """

    beta: float | None = None
    tol: float = 1e-9
    max_iters: int = 200_000
    sweep_order: str = GAUSS_SEIDEL
    start: str = "upper"
    polish: bool = True
    polish_threshold: float = 1e-3
    check_every: int = 25

    def __post_init__(self):
        if self.sweep_order not in (GAUSS_SEIDEL, JACOBI):
            raise ValueError(f"unknown sweep order {self.sweep_order!r}")
        if self.start not in ("upper", "lower"):
            raise ValueError(f"start must be 'upper' or 'lower'")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class WaveSolution:
    """A converged traveling wave in cooperative coordinates."""

    u: Profile
    v: Profile
    w: Profile | None
    c: float
    params: ModelParams
    regime: Regime
    iterations: int
    residuals: tuple
    beta: float
    start: str
    diff_history: np.ndarray
    decay_minus: tuple
    decay_plus: tuple
    shift_applied: float = 0.0
    h3_predicate_min: float | None = None
    polish_steps: int = 0
    sandwich_max_escape: float = 0.0

    @property
    def components(self) -> tuple[Profile, ...]:
        if self.w is None:
            return (self.u, self.v)
        return (self.u, self.v, self.w)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def report(self) -> dict:
        def fits(entries):
            return [None if e is None else e.to_dict() for e in entries]

        return {
            "params": self.params.to_dict(),
            "regime": self.regime.variant.value,
            "h3_satisfied": self.regime.h3_satisfied,
            "c": self.c,
            "iterations": self.iterations,
            "residuals": list(self.residuals),
            "beta": self.beta,
            "start": self.start,
            "decay_minus": fits(self.decay_minus),
            "decay_plus": fits(self.decay_plus),
            "shift_applied": self.shift_applied,
            "h3_predicate_min": self.h3_predicate_min,
            "polish_steps": self.polish_steps,
            "sandwich_max_escape": self.sandwich_max_escape,
        }

    def write_csv(self, path):
        write_triple_csv(path, self.components)


def _default_beta(system: str, p: ModelParams) -> float:
    pts = np.linspace(0.0, 1.0, 9)
    if system == "three":
        U, V, W = np.meshgrid(pts, pts, pts, indexing="ij")
        (j11, _, _), (_, j22, _), (_, _, j33) = \
            reaction_jacobian_monotone(p, U, V, W)
        diag_max = max(np.max(np.abs(j11)), np.max(np.abs(j22)),
                       np.max(np.abs(j33)))
    else:
        U, V = np.meshgrid(pts, pts, indexing="ij")
        (j11, _), (_, j22) = reaction_jacobian_lv2(p, U, V)
        diag_max = max(np.max(np.abs(j11)), np.max(np.abs(j22)))
    return 1.0 + 1.2 * float(diag_max)


def _iterate_left_bc(pair: BoundingPair, p: ModelParams) -> np.ndarray:
    """Left boundary values on the matched slow-tail ray, inside the pair."""
    rho_v, rho_w = slaved_tail_ratios(p)
    lo = np.array([q.values[0] for q in pair.lower])
    hi = np.array([q.values[0] for q in pair.upper])
    amp = 0.5 * (lo[0] + hi[0])
    ray = np.array([1.0, rho_v, rho_w])[: len(pair.upper)]
    bc = amp * ray
    # The regime inequalities keep the ray inside [lower, upper] at the
    # boundary node; the clip only absorbs rounding.
    return np.minimum(np.maximum(bc, lo), hi)


def _system_residual(W: np.ndarray, grid: Grid, c: float, system: str,
                     p: ModelParams) -> tuple:
    fvals = _reactions(system, p, W)
    sups = []
    for m in range(W.shape[0]):
        op = apply_wave_operator(W[m], grid, c) + fvals[m, 1:-1]
        sups.append(float(np.max(np.abs(op))))
    return tuple(sups)


def _newton_polish(W: np.ndarray, grid: Grid, c: float, system: str,
                   p: ModelParams, target: float,
                   max_steps: int = 5) -> tuple[bool, np.ndarray, float, int]:
    """Coupled damped Newton on the interleaved banded system."""
    k = W.shape[0]
    n = grid.n_interior
    h = grid.h
    inv_h2 = 1.0 / (h * h)
    adv = c / (2.0 * h)
    size = k * n

    def full_residual(Wc):
        fvals = _reactions(system, p, Wc)
        F = np.empty((k, n))
        for m in range(k):
            F[m] = apply_wave_operator(Wc[m], grid, c) + fvals[m, 1:-1]
        return F

    W = W.copy()
    F = full_residual(W)
    res = float(np.max(np.abs(F)))
    steps = 0
    for _ in range(max_steps):
        if res <= target:
            break
        blocks = _jacobian_blocks(system, p, W[:, 1:-1])
        ab = np.zeros((2 * k + 1, size))
        # same-component spatial neighbors at offsets +-k
        ab[0, k:] = inv_h2 - adv
        ab[2 * k, :-k] = inv_h2 + adv
        # within-node reaction couplings at offsets |d| < k
        for mi in range(k):
            for mj in range(k):
                dgl = np.asarray(blocks[mi][mj], dtype=float)
                if dgl.ndim == 0:
                    dgl = np.full(n, float(dgl))
                d = mj - mi
                cols = np.arange(n) * k + mj
                vals = dgl.copy()
                if mi == mj:
                    vals -= 2.0 * inv_h2
                ab[k - d, cols] = vals
        try:
            delta = scipy.linalg.solve_banded(
                (k, k), ab, -F.T.reshape(-1)
            )
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            break
        delta = delta.reshape(n, k).T
        step = 1.0
        accepted = False
        for _ in range(8):
            cand = W.copy()
            cand[:, 1:-1] = W[:, 1:-1] + step * delta
            if cand.min() >= -0.05 and cand.max() <= 1.05:
                Fc = full_residual(cand)
                resc = float(np.max(np.abs(Fc)))
                if resc < res:
                    W, F, res = cand, Fc, resc
                    accepted = True
                    break
            step *= 0.5
        steps += 1
        if not accepted:
            break
    return res <= target, W, res, steps


def iterate(pair: BoundingPair, p: ModelParams, c: float,
            config: IterationConfig | None = None) -> WaveSolution:
    """Run the monotone iteration on a verified ordered pair.

    Starting from the upper solution each sweep produces a smaller iterate;
    the sandwich lower - 1e-10 <= W_{k+1} <= W_k + 1e-10 is asserted every
    sweep (a violation doubles beta once, then raises).  Convergence is
    declared once the coupled Newton polish lands the residual at ~1e-10 (or
    the successive difference drops below tol with the residual already under
    1e-8).  Raises MaxIterationsError with diagnostics if the cap is hit.
    """
    cfg = config or IterationConfig()
    if pair.verification is None:
        pair.verification = verify_pair(pair, p, c)
    _raise_if_unverified(pair)
    if not pair.ordered():
        raise OrderingFailureError("pair is not ordered; shift it first")

    grid = pair.grid
    system = pair.system
    k = len(pair.upper)
    beta = cfg.beta if cfg.beta is not None else _default_beta(system, p)

    lower_stack = np.stack([q.values for q in pair.lower])
    upper_stack = np.stack([q.values for q in pair.upper])
    bc_left = _iterate_left_bc(pair, p)
    bc_right = np.ones(k)

    floor = 100.0 * np.finfo(float).eps / (grid.h * grid.h)
    polish_target = max(1e-9, 2.0 * floor)

    from_upper = cfg.start == "upper"

    def run(beta_val: float):
        W = (upper_stack if from_upper else lower_stack).copy()
        W[:, 0] = bc_left
        W[:, -1] = bc_right
        diffs: list[float] = []
        threshold = cfg.polish_threshold
        polish_steps = 0
        escape_max = 0.0
        res: tuple | None = None

        for sweep_no in range(1, cfg.max_iters + 1):
            W_new = W.copy()
            if cfg.sweep_order == JACOBI:
                f_prev = _reactions(system, p, W)
            for m in range(k):
                if cfg.sweep_order == JACOBI:
                    fm = f_prev[m]
                else:
                    fm = _reactions(system, p, W_new)[m]
                rhs = -(fm[1:-1] + beta_val * W_new[m, 1:-1])
                W_new[m, 1:-1] = solve(
                    assemble(grid, c, beta_val, rhs, (bc_left[m], bc_right[m]))
                )
            diff = float(np.max(np.abs(W_new - W)))
            diffs.append(diff)

            if from_upper:
                escape = max(
                    float(np.max(W_new - W)),
                    float(np.max(lower_stack - W_new)),
                )
            else:
                escape = max(
                    float(np.max(W - W_new)),
                    float(np.max(W_new - upper_stack)),
                )
            escape_max = max(escape_max, escape)
            if escape > 1e-10:
                return None, diffs, polish_steps, escape_max, None
            W = W_new

            if cfg.polish and (sweep_no % cfg.check_every == 0
                               or diff < cfg.tol):
                res = _system_residual(W, grid, c, system, p)
                if max(res) <= threshold:
                    ok, Wp, res_p, steps = _newton_polish(
                        W, grid, c, system, p, polish_target
                    )
                    polish_steps += steps
                    if ok:
                        post_escape = max(
                            float(np.max(lower_stack - Wp)),
                            float(np.max(Wp - upper_stack)),
                        )
                        if post_escape <= 1e-9:
                            escape_max = max(escape_max, max(post_escape, 0.0))
                            return Wp, diffs, polish_steps, escape_max, res_p
                    threshold = min(threshold * 0.25, max(res) * 0.25)
            if diff < cfg.tol:
                res = _system_residual(W, grid, c, system, p)
                if max(res) <= 1e-8:
                    return W, diffs, polish_steps, escape_max, max(res)
        raise MaxIterationsError(
            f"no convergence in {cfg.max_iters} sweeps "
            f"(last diff {diffs[-1]:.3e})",
            best={"W": W, "diffs": diffs, "residual": res},
            residual=None if res is None else max(res),
        )

    W_final, diffs, polish_steps, escape_max, _ = run(beta)
    if W_final is None:
        # Sandwich escape: beta too small; double once and restart.
        beta *= 2.0
        W_final, diffs2, polish_steps, escape_max2, _ = run(beta)
        diffs = diffs + diffs2
        escape_max = max(escape_max, escape_max2)
        if W_final is None:
            raise SandwichViolationError(
                f"iterate escaped the sandwich by {escape_max:.3e} even "
                f"after doubling beta to {beta:.3g}"
            )

    residuals = _system_residual(W_final, grid, c, system, p)
    if max(residuals) > 1e-8:
        raise ConvergenceError(
            f"final residual {max(residuals):.3e} above 1e-8",
            residual=max(residuals),
        )

    for m in range(k):
        if not np.all(np.diff(W_final[m]) > 0):
            raise ConvergenceError(
                f"component {m} of the converged wave is not strictly "
                "increasing"
            )

    profiles = tuple(
        Profile(grid, W_final[m], bc_left[m], bc_right[m]) for m in range(k)
    )

    critical = abs(c - p.c_min) < 1e-9
    decay_minus, decay_plus = [], []
    for q in profiles:
        try:
            decay_minus.append(fit_tail(q, MINUS, allow_poly=True))
        except TailTooShortError:
            decay_minus.append(None)
        try:
            # The slowest approach mode toward (1,1,1) reaches only ~1e-3 of
            # the limit inside the truncated domain; widen the band.
            decay_plus.append(fit_tail(q, PLUS, allow_poly=critical,
                                       hi_frac=1e-2))
        except TailTooShortError:
            decay_plus.append(None)

    regime = pair.meta.get("regime") or classify_regime(p)
    return WaveSolution(
        u=profiles[0],
        v=profiles[1],
        w=profiles[2] if k == 3 else None,
        c=c,
        params=p,
        regime=regime,
        iterations=len(diffs),
        residuals=residuals,
        beta=beta,
        start=cfg.start,
        diff_history=np.asarray(diffs),
        decay_minus=tuple(decay_minus),
        decay_plus=tuple(decay_plus),
        shift_applied=pair.shift_applied,
        h3_predicate_min=pair.meta.get("h3_predicate_min"),
        polish_steps=polish_steps,
        sandwich_max_escape=escape_max,
    )


def solve_lv2(p: ModelParams, c: float, grid: Grid, l: float | None = None,
              config: IterationConfig | None = None) -> WaveSolution:
    """Converged two-species wave: build the pair, iterate."""
    pair = build_pair_lv2(p, c, grid, l=l)
    return iterate(pair, p, c, config)


def three_species_wave(p: ModelParams, c: float, grid: Grid | None = None,
                       config: IterationConfig | None = None,
                       l: float | None = None, l_bar: float | None = None,
                       lv2_l: float | None = None) -> WaveSolution:
    """Classify the regime, build the matching pair, iterate to the wave."""
    grid = grid or Grid.with_spacing()
    regime = classify_regime(p)
    if regime.variant is RegimeVariant.H1_VIOLATED:
        raise RegimeError("parameters violate 0 < a1 < 1 < a2")
    if regime.variant is RegimeVariant.UNCOVERED:
        raise RegimeError(
            "parameters satisfy neither inequality chain (uncovered regime); "
            "refusing to guess a construction"
        )
    if rates(p, c).complex_roots:
        raise NoMonotoneWaveError(c, p.c_min)
    if regime.variant is RegimeVariant.H2A:
        pair = build_pair_h2a(p, c, grid, l=l, l_bar=l_bar)
    else:
        pair = build_pair_h2b(p, c, grid, l=l, l_bar=l_bar, lv2_l=lv2_l,
                              config=config)
    return iterate(pair, p, c, config)


# ---------------------------------------------------------------------------
# ordering and uniqueness checks

def sliding_order_check(upper, lower, window: tuple[float, float],
                        p: ModelParams, c: float) -> bool:
    """Operational sliding comparison on a finite window.

    Requires end-point dominance (lower at the left end below the upper
    profile everywhere on the window and symmetrically at the right end),
    then slides the upper profile leftward from the full window width down to
    zero shift in grid steps, checking the pointwise ordering on the overlap
    at each shift.  True iff the ordering never fails.
    """
    upper = tuple(upper)
    lower = tuple(lower)
    grid = upper[0].grid
    for q in upper + lower:
        if q.grid != grid:
            raise GridMismatchError("sliding check needs one common grid")
    a, b = window
    nodes = grid.nodes
    i0 = int(np.searchsorted(nodes, a, side="left"))
    i1 = int(np.searchsorted(nodes, b, side="right")) - 1
    if i1 - i0 < 2:
        raise ValueError("window too narrow")

    for up, lo in zip(upper, lower):
        if not np.all(lo.values[i0] < up.values[i0:i1 + 1]):
            raise PreconditionError(
                "lower(-N) does not sit below the upper profile on the window"
            )
        if not np.all(lo.values[i0:i1 + 1] < up.values[i1]):
            raise PreconditionError(
                "lower profile does not sit below upper(N) on the window"
            )

    for mu in range(i1 - i0, -1, -1):
        for up, lo in zip(upper, lower):
            if not np.all(lo.values[i0:i1 + 1 - mu]
                          <= up.values[i0 + mu:i1 + 1]):
                return False
    return True


def uniqueness_check(w1: WaveSolution, w2: WaveSolution) -> float:
    """Sup-norm distance of two waves after phase alignment.

    Both waves are shifted so their u-component crosses 1/2 at xi = 0
    (cubic-spline resampling), then compared over the shared grid interior.
    Translates of one wave come back ~1e-10; genuinely distinct profiles come
    back O(1).
    """
    if w1.grid != w2.grid:
        raise GridMismatchError("uniqueness check expects one common grid")
    if w1.params != w2.params or w1.c != w2.c:
        raise ValueError("uniqueness check expects identical (params, c)")

    def aligned(w: WaveSolution) -> list[np.ndarray]:
        from scipy.interpolate import CubicSpline
        from scipy.optimize import brentq

        u = w.u
        # spline-accurate crossing locator: a linear-interpolation crossing
        # carries an O(h^2) phase error that would dominate the comparison
        rough = float(np.interp(0.5, u.values, u.grid.nodes))
        spline = CubicSpline(u.grid.nodes, u.values, bc_type="natural")
        h = u.grid.h
        cross = brentq(lambda x: spline(x) - 0.5, rough - 2 * h, rough + 2 * h)
        return [q.shifted(cross).values for q in w.components]

    A = aligned(w1)
    B = aligned(w2)
    sup = 0.0
    for a, b in zip(A, B):
        sup = max(sup, float(np.max(np.abs(a[1:-1] - b[1:-1]))))
    return sup
