"""Tail analysis: exponential decay fits and the +infinity mode structure.

Profiles approach their limits like A e^{lambda xi} (generic speeds) or like
(A + B xi) e^{lambda xi} at the critical speed.  fit_tail extracts the rate by
linear regression in log space over a window of nodes whose distance to the
limit lies in a fixed relative band; the two candidate models have the same
number of free parameters, so comparing their regression residuals is fair.

Toward the (1,1,1) state the linearized wave system decouples into three
scalar equations; plus_infinity_modes evaluates the three decay rates

    mu1 = (c - sqrt(c^2 + 4))/2,
    mu2 = (c - sqrt(c^2 + 4 r (a2-1)))/2,
    mu3 = (c - sqrt(c^2 + 4/tau))/2,

together with the decoupling transform P whose columns are the corresponding
eigendirections.  P degenerates when tau = 1 or r(1-a2) is -1 or -1/tau;
those cases fall back to a numerical eigendecomposition of the companion
system (the merged rates then carry a resonant xi-factor, which is flagged
rather than hidden).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bvp import Profile
from .errors import TailTooShortError
from .model import ModelParams, RateTable, rates

__all__ = [
    "DecayFit",
    "PlusInfinityModes",
    "fit_tail",
    "plus_infinity_modes",
    "match_wave_asymptotics",
    "write_tail_csv",
]

MINUS = "minus"
PLUS = "plus"


@dataclass
class DecayFit:
    """Result of a log-space tail regression.

    rate        fitted exponent (positive on the minus side, negative on plus)
    amplitude   fitted prefactor; for poly_factor fits this is the slope
                coefficient B of (A + B xi) e^{rate xi}, sign included
    poly_factor True when the (A + B xi) model had the lower residual
    fit_residual RMS of the winning log-space regression
    window      node index range (start, stop) used for the fit
    side        "minus" or "plus"
    """

    rate: float
    amplitude: float
    poly_factor: bool
    fit_residual: float
    window: tuple[int, int]
    side: str

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "amplitude": self.amplitude,
            "poly_factor": self.poly_factor,
            "fit_residual": self.fit_residual,
            "window": list(self.window),
            "side": self.side,
        }


def _regress(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares y ~ intercept + slope*x; returns (slope, intercept, rms)."""
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    rms = float(np.sqrt(np.mean(res * res)))
    return float(coef[1]), float(coef[0]), rms


def fit_tail(profile: Profile, side: str, allow_poly: bool = False,
             lo_frac: float = 1e-8, hi_frac: float = 1e-3,
             min_nodes: int = 50, edge_exclude: float = 4.0) -> DecayFit:
    """Fit the tail of a profile on one side.

    The window consists of the contiguous run of nodes at that end whose
    deviation from the boundary limit lies in [lo_frac, hi_frac] relative to
    the profile's total span, excluding nodes within edge_exclude of the
    domain ends (the truncation boundary layer bends the tail there).
    Raises TailTooShortError when fewer than min_nodes qualify.

    With allow_poly the (A + B xi) e^{lambda xi} model is fit as well (by
    subtracting log|xi| before the same two-parameter regression) and the
    model with the smaller residual wins.
    """
    if side not in (MINUS, PLUS):
        raise ValueError("side must be 'minus' or 'plus'")
    xi = profile.grid.nodes
    limit = profile.left_limit if side == MINUS else profile.right_limit
    span = abs(profile.right_limit - profile.left_limit)
    if span == 0.0:
        span = float(np.max(np.abs(profile.values - limit)))
    if span == 0.0:
        raise TailTooShortError("profile is constant: nothing to fit")
    dev = np.abs(profile.values - limit)

    hi = hi_frac * span
    lo = lo_frac * span
    if side == MINUS:
        beyond = np.nonzero(dev > hi)[0]
        stop = beyond[0] if beyond.size else dev.size
        idx = np.arange(0, stop)
    else:
        beyond = np.nonzero(dev > hi)[0]
        start = beyond[-1] + 1 if beyond.size else 0
        idx = np.arange(start, dev.size)
    idx = idx[dev[idx] >= lo]
    if edge_exclude > 0 and idx.size:
        inside = ((xi[idx] >= xi[0] + edge_exclude)
                  & (xi[idx] <= xi[-1] - edge_exclude))
        idx = idx[inside]
    if idx.size < min_nodes:
        raise TailTooShortError(
            f"only {idx.size} nodes in the [{lo_frac:g}, {hi_frac:g}] band "
            f"on the {side} side (need {min_nodes})"
        )

    x = xi[idx]
    logdev = np.log(dev[idx])
    slope, intercept, rms = _regress(x, logdev)
    sign = float(np.sign(np.median(profile.values[idx] - limit))) or 1.0
    best = DecayFit(
        rate=slope,
        amplitude=sign * float(np.exp(intercept)),
        poly_factor=False,
        fit_residual=rms,
        window=(int(idx[0]), int(idx[-1]) + 1),
        side=side,
    )

    if allow_poly:
        safe = np.abs(x) > 1.0
        if np.count_nonzero(safe) >= min_nodes:
            xs = x[safe]
            ys = logdev[safe] - np.log(np.abs(xs))
            slope_p, intercept_p, rms_p = _regress(xs, ys)
            if rms_p < best.fit_residual:
                xi_sign = float(np.sign(np.median(xs))) or 1.0
                best = DecayFit(
                    rate=slope_p,
                    amplitude=sign * xi_sign * float(np.exp(intercept_p)),
                    poly_factor=True,
                    fit_residual=rms_p,
                    window=best.window,
                    side=side,
                )
    return best


def write_tail_csv(profile: Profile, side: str, path):
    """Dump (xi, log10 |value - limit|) for external plotting."""
    limit = profile.left_limit if side == MINUS else profile.right_limit
    dev = np.abs(profile.values - limit)
    with np.errstate(divide="ignore"):
        logdev = np.log10(dev)
    np.savetxt(path, np.column_stack([profile.grid.nodes, logdev]),
               delimiter=",", header="xi,log10_gap", comments="")


@dataclass
class PlusInfinityModes:
    """Decay rates and eigendirections of the linearization at (1,1,1).

    modes[:, k] is the direction attached to rates[k]; transform is the full
    matrix P (modes as columns).  degenerate marks merged rates / singular P,
    in which case the directions come from a numerical eigendecomposition and
    resonant xi-factors are possible.
    """

    rates: tuple[float, float, float]
    modes: np.ndarray
    transform: np.ndarray
    degenerate: bool

    def mode_residual(self, p: ModelParams, c: float, k: int) -> float:
        """Residual of substituting modes[:,k] e^{mu_k xi} into the
        linearized system; ~0 certifies a genuine eigendirection."""
        A = _limit_matrix(p)
        mu = self.rates[k]
        M = (mu * mu - c * mu) * np.eye(3) + A
        return float(np.max(np.abs(M @ self.modes[:, k])))


def _limit_matrix(p: ModelParams) -> np.ndarray:
    """Jacobian of the cooperative reaction terms at (1,1,1)."""
    return np.array([
        [-1.0, 0.0, p.a1],
        [0.0, p.r * (1.0 - p.a2), 0.0],
        [0.0, 1.0 / p.tau, -1.0 / p.tau],
    ])


def plus_infinity_modes(p: ModelParams, c: float,
                        degeneracy_tol: float = 1e-9) -> PlusInfinityModes:
    """Rates and eigendirections of the decaying solutions at +infinity."""
    table = rates(p, c)
    mu = np.array([table.mu1, table.mu2, table.mu3])

    d2 = p.r * (1.0 - p.a2) + 1.0           # denominator of the u-entry of mode 2
    d2v = p.tau * p.r * (1.0 - p.a2) + 1.0  # v-entry of mode 2
    d3 = p.tau - 1.0                        # denominator of the u-entry of mode 3
    degenerate = min(abs(d2), abs(d2v), abs(d3)) < degeneracy_tol

    if not degenerate:
        P = np.array([
            [1.0, p.a1 / d2, p.a1 * p.tau / d3],
            [0.0, d2v, 0.0],
            [0.0, 1.0, 1.0],
        ])
        return PlusInfinityModes(rates=tuple(mu), modes=P, transform=P,
                                 degenerate=False)

    # Companion form of Psi'' - c Psi' + A Psi = 0; its eigenvalues are the six
    # characteristic roots, eigenvector top halves the directions.
    A = _limit_matrix(p)
    comp = np.zeros((6, 6))
    comp[:3, 3:] = np.eye(3)
    comp[3:, :3] = -A
    comp[3:, 3:] = c * np.eye(3)
    eigvals, eigvecs = scipy.linalg.eig(comp)
    order = np.argsort(eigvals.real)
    decaying = [k for k in order if eigvals[k].real < -1e-12][:3]
    P = np.zeros((3, 3))
    got = np.real(eigvals[decaying])
    # Match each closed-form rate to the nearest companion eigenvalue so the
    # column order stays (mu1, mu2, mu3) even when two rates merge.
    used = set()
    for j in range(3):
        k_best, best = None, np.inf
        for idx, lam in zip(decaying, got):
            if idx in used:
                continue
            if abs(lam - mu[j]) < best:
                k_best, best = idx, abs(lam - mu[j])
        used.add(k_best)
        vec = np.real(eigvecs[:3, k_best])
        norm = np.max(np.abs(vec))
        if norm > 0:
            vec = vec / norm
            lead = vec[np.argmax(np.abs(vec))]
            vec = vec * np.sign(lead)
        P[:, j] = vec
    return PlusInfinityModes(rates=tuple(mu), modes=P, transform=P,
                             degenerate=True)


def match_wave_asymptotics(wave) -> dict:
    """Compare fitted tail rates of a converged wave with the closed forms.

    Minus side: all components share lambda_minus(c) (with a xi-factor at the
    critical speed).  Plus side: each component's predicted rate is the
    slowest mode with a nonzero projection, the projections being P^{-1}
    applied to the per-component fitted amplitudes.
    """
    p: ModelParams = wave.params
    c: float = wave.c
    table: RateTable = rates(p, c)
    critical = (
        table.lambda_minus is not None
        and abs(c - table.c_min) < 1e-9
    )
    lam_pred = np.sqrt(1.0 - p.a1) if critical else table.lambda_minus

    report: dict = {"c": c, "critical": critical, "components": {}}
    modes = plus_infinity_modes(p, c)
    report["plus_modes"] = {
        "rates": list(modes.rates),
        "degenerate": modes.degenerate,
    }

    names = ("u", "v", "w")
    profiles = (wave.u, wave.v, wave.w)
    plus_fits: list[DecayFit | None] = []
    for name, prof in zip(names, profiles):
        comp: dict = {}
        try:
            fm = fit_tail(prof, MINUS, allow_poly=True)
            comp["minus"] = {
                "fitted_rate": fm.rate,
                "predicted_rate": lam_pred,
                "relative_error": abs(fm.rate - lam_pred) / abs(lam_pred),
                "poly_factor": fm.poly_factor,
                "amplitude": fm.amplitude,
            }
        except TailTooShortError as exc:
            comp["minus"] = {"error": str(exc)}
        try:
            # Wider band on the plus side: the slow modes reach only ~1e-3 of
            # the limit inside the truncated domain.
            fp = fit_tail(prof, PLUS, allow_poly=critical, hi_frac=1e-2)
            plus_fits.append(fp)
            comp["plus"] = {
                "fitted_rate": fp.rate,
                "poly_factor": fp.poly_factor,
                "amplitude": fp.amplitude,
            }
        except TailTooShortError as exc:
            plus_fits.append(None)
            comp["plus"] = {"error": str(exc)}
        report["components"][name] = comp

    if all(f is not None for f in plus_fits):
        amps = np.array([abs(f.amplitude) for f in plus_fits])
        P = modes.transform
        try:
            proj = np.linalg.solve(P, amps)
        except np.linalg.LinAlgError:
            proj, *_ = np.linalg.lstsq(P, amps, rcond=None)
        report["plus_projections"] = [float(s) for s in proj]
        scale = float(np.max(np.abs(proj))) or 1.0
        mu = np.array(modes.rates)
        for i, name in enumerate(names):
            active = np.abs(P[i, :] * proj) > 1e-8 * scale
            if np.any(active):
                pred = float(np.max(mu[active]))
                entry = report["components"][name]["plus"]
                entry["predicted_rate"] = pred
                entry["relative_error"] = abs(entry["fitted_rate"] - pred) / abs(pred)
    return report
