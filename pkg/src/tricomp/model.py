"""Model parameters, regime classification, reaction terms and decay rates.

The three-species competition-cooperation system in original coordinates is

    u_t = u_xx + u(1 - u - a1*w),
    v_t = v_xx + r*v(1 - a2*u - v),
    w_t = w_xx + (v - w)/tau,

with u competing against w, v competing against u, and w cooperating with
(relaxing toward) v.  The substitution (u, v, w) -> (u, 1-v, 1-w) turns the
wave system into a cooperative (quasi-monotone) one connecting (0,0,0) to
(1,1,1), which is the coordinate system the monotone iteration works in.

Everything here is a pure function of plain values or numpy arrays; there is
no shared state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import RegimeError

__all__ = [
    "ModelParams",
    "RegimeVariant",
    "Regime",
    "RateTable",
    "classify_regime",
    "reaction_monotone",
    "reaction_original",
    "reaction_jacobian_monotone",
    "to_monotone",
    "from_monotone",
    "rates",
]


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless constants of the model.

    a1, a2 : interaction constants
    r      : relative growth rate of the middle species
    tau    : relaxation (delay) constant of the third species
    """

    a1: float
    a2: float
    r: float
    tau: float

    def __post_init__(self):
        for name in ("a1", "a2", "r", "tau"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be finite and positive, got {val!r}")

    @property
    def c_min(self) -> float:
        """Minimal wave speed 2*sqrt(1-a1). Requires a1 < 1."""
        if self.a1 >= 1:
            raise RegimeError(f"minimal speed undefined for a1={self.a1} >= 1")
        return 2.0 * math.sqrt(1.0 - self.a1)

    def to_json(self) -> str:
        return json.dumps(
            {"a1": self.a1, "a2": self.a2, "r": self.r, "tau": self.tau}
        )

    def to_dict(self) -> dict:
        return {"a1": self.a1, "a2": self.a2, "r": self.r, "tau": self.tau}

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        obj = json.loads(text)
        return cls(a1=obj["a1"], a2=obj["a2"], r=obj["r"], tau=obj["tau"])

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelParams":
        return cls(a1=obj["a1"], a2=obj["a2"], r=obj["r"], tau=obj["tau"])


class RegimeVariant(Enum):
    H2A = "H2a"
    H2B = "H2b"
    UNCOVERED = "Uncovered"
    H1_VIOLATED = "H1Violated"


@dataclass
class Regime:
    """Classification of a parameter set.

    h3_satisfied is only meaningful for H2b and cannot be decided from the
    parameters alone: it is the predicate a2*u >= v evaluated on the computed
    two-species wave, so it stays None until that wave has been computed.
    """

    variant: RegimeVariant
    h3_satisfied: bool | None = None

    @property
    def solvable(self) -> bool:
        return self.variant in (RegimeVariant.H2A, RegimeVariant.H2B)


def classify_regime(p: ModelParams) -> Regime:
    """Decide which hypothesis regime the parameters fall in.

    H1 is 0 < a1 < 1 < a2.  Under H1:
      H2a        when r(a2-1) <  1-a1,
      H2b        when r(a2-1) >= 1-a1 >= r(a1*a2-1),
      Uncovered  otherwise (H1 holds, neither chain does).
    """
    if not (0 < p.a1 < 1 < p.a2):
        return Regime(RegimeVariant.H1_VIOLATED)
    lhs = p.r * (p.a2 - 1.0)
    mid = 1.0 - p.a1
    rhs = p.r * (p.a1 * p.a2 - 1.0)
    if lhs < mid:
        return Regime(RegimeVariant.H2A)
    if mid >= rhs:
        return Regime(RegimeVariant.H2B)
    return Regime(RegimeVariant.UNCOVERED)


def reaction_monotone(p: ModelParams, u, v, w):
    """Reaction terms of the cooperative form of the system.

    f1 = u(1 - a1 - u + a1*w),  f2 = r(1-v)(a2*u - v),  f3 = (v - w)/tau.

    Accepts scalars or numpy arrays (broadcasting elementwise).
    """
    f1 = u * (1.0 - p.a1 - u + p.a1 * w)
    f2 = p.r * (1.0 - v) * (p.a2 * u - v)
    f3 = (v - w) / p.tau
    return f1, f2, f3


def reaction_original(p: ModelParams, u, v, w):
    """Reaction terms in the original population coordinates:
    u(1-u-a1*w), r*v(1-a2*u-v), (v-w)/tau."""
    g1 = u * (1.0 - u - p.a1 * w)
    g2 = p.r * v * (1.0 - p.a2 * u - v)
    g3 = (v - w) / p.tau
    return g1, g2, g3


def reaction_jacobian_monotone(p: ModelParams, u, v, w):
    """Closed-form Jacobian of the cooperative reaction terms.

    Returns the nine partials as a nested tuple ((J11,J12,J13),...) so it
    works elementwise on arrays as well.  Off-diagonal entries J13, J21, J32
    are nonnegative on [0,1]^3, which is the quasi-monotonicity the iteration
    relies on.
    """
    one = np.ones_like(np.asarray(u, dtype=float))
    j11 = 1.0 - p.a1 - 2.0 * u + p.a1 * w
    j12 = 0.0 * one
    j13 = p.a1 * u
    j21 = p.r * p.a2 * (1.0 - v)
    j22 = p.r * (2.0 * v - p.a2 * u - 1.0)
    j23 = 0.0 * one
    j31 = 0.0 * one
    j32 = one / p.tau
    j33 = -one / p.tau
    return (j11, j12, j13), (j21, j22, j23), (j31, j32, j33)


def to_monotone(u, v, w):
    """Map original coordinates to cooperative ones: (u, 1-v, 1-w)."""
    return u, 1.0 - v, 1.0 - w


def from_monotone(u, v, w):
    """Inverse of to_monotone (exact up to one rounding of 1-x)."""
    return u, 1.0 - v, 1.0 - w


@dataclass(frozen=True)
class RateTable:
    """Closed-form asymptotic decay rates for a given speed.

    lambda_minus is the shared decay rate of all three components toward the
    zero state; it exists (real) only for c >= c_min = 2*sqrt(1-a1).  The mu_i
    are the three decay rates toward the (1,1,1) state and are negative for
    every c >= 0 under H1.
    """

    c: float
    c_min: float
    lambda_minus: float | None
    mu1: float
    mu2: float
    mu3: float

    @property
    def complex_roots(self) -> bool:
        """True when c < c_min: the linearization roots are complex and the
        approach to zero would be oscillatory, i.e. no monotone wave."""
        return self.lambda_minus is None

    @property
    def mu_slowest(self) -> float:
        return max(self.mu1, self.mu2, self.mu3)


def rates(p: ModelParams, c: float, critical_tol: float = 1e-12) -> RateTable:
    """Evaluate the decay-rate formulas at speed c.

    lambda_minus = (c - sqrt(c^2 - 4(1-a1)))/2,
    mu1 = (c - sqrt(c^2 + 4))/2,
    mu2 = (c - sqrt(c^2 + 4 r (a2-1)))/2,
    mu3 = (c - sqrt(c^2 + 4/tau))/2.

    At the critical speed the discriminant of lambda_minus vanishes; a
    discriminant within -critical_tol of zero is clamped so c = c_min does
    not spuriously report complex roots.
    """
    if c < 0:
        raise ValueError(f"speed must be nonnegative, got {c}")
    c_min = p.c_min
    disc = c * c - 4.0 * (1.0 - p.a1)
    if disc < -critical_tol * max(1.0, c * c):
        lam = None
    else:
        lam = (c - math.sqrt(max(disc, 0.0))) / 2.0
    mu1 = (c - math.sqrt(c * c + 4.0)) / 2.0
    mu2 = (c - math.sqrt(c * c + 4.0 * p.r * (p.a2 - 1.0))) / 2.0
    mu3 = (c - math.sqrt(c * c + 4.0 / p.tau)) / 2.0
    return RateTable(c=c, c_min=c_min, lambda_minus=lam, mu1=mu1, mu2=mu2, mu3=mu3)
