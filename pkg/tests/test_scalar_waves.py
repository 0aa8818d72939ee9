import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from tricomp.bvp import Grid
from tricomp.errors import NoMonotoneWaveError
from tricomp.scalar_waves import (
    KppProblem,
    kpp_plus_decay,
    normalize_phase,
    solve_kpp,
)


def test_problem_validation():
    with pytest.raises(ValueError):
        # f(b) != 0
        KppProblem(f=lambda u: u, df=lambda u: 1.0 + 0 * u,
                   b=1.0, abar=1.0, b1=1.0, c=3.0)
    with pytest.raises(ValueError):
        KppProblem.logistic(-0.5, 1.0, 2.0)


def test_logistic_symmetry():
    # for every logistic family f'(b) = -f'(0)
    prob = KppProblem.logistic(0.5, 0.5 / 1.1, 1.5)
    assert prob.b1 == pytest.approx(prob.abar)
    assert prob.df(prob.b) == pytest.approx(-prob.df(0.0))


def test_subcritical_raises(grid60):
    prob = KppProblem.logistic(0.5, 1.0, 1.0)  # c_min = 2 sqrt(0.5) ~ 1.414
    with pytest.raises(NoMonotoneWaveError):
        solve_kpp(prob, grid60)


def test_grid_too_narrow():
    prob = KppProblem.logistic(0.01, 1.0, 2.0 * math.sqrt(0.01))
    with pytest.raises(ValueError):
        solve_kpp(prob, Grid(30.0, 599))


def test_front_noncritical(kpp_wave_15):
    wave = kpp_wave_15
    prob = wave.problem
    assert wave.residual <= 1e-8
    assert not wave.critical
    # strictly increasing, limits pinned
    assert np.all(np.diff(wave.profile.values) > 0)
    assert wave.profile.values[0] < 1e-10
    assert wave.profile.values[-1] == 1.0
    # phase normalization at the origin
    at0 = float(np.interp(0.0, wave.profile.grid.nodes, wave.profile.values))
    assert abs(at0 - 0.5) < 1e-8
    # decay toward zero at the slow rate (c - sqrt(c^2 - 4 abar))/2 = 0.5
    assert abs(wave.decay_minus.rate - 0.5) / 0.5 < 0.02
    assert not wave.decay_minus.poly_factor
    # approach toward b at (c - sqrt(c^2 + 4 b1))/2
    predicted = prob.rate_plus
    assert abs(wave.decay_plus.rate - predicted) / abs(predicted) < 0.05


def test_front_critical(kpp_wave_critical):
    wave = kpp_wave_critical
    assert wave.critical
    assert wave.residual <= 1e-8
    fit = wave.decay_minus
    # the xi-factor model wins and its slope coefficient is negative
    assert fit.poly_factor
    assert fit.amplitude < 0.0
    assert abs(fit.rate - math.sqrt(0.5)) / math.sqrt(0.5) < 0.02
    plus_pred = math.sqrt(0.5) - math.sqrt(1.0)
    assert abs(wave.decay_plus.rate - plus_pred) / abs(plus_pred) < 0.05


def test_plus_decay_examples(kpp_wave_15):
    fit = kpp_plus_decay(kpp_wave_15)
    assert abs(fit.rate - (-0.2807764)) / 0.2807764 < 0.05


def test_translation_invariance(kpp_wave_15):
    # shift by an integer number of cells, renormalize, recover the profile
    wave = kpp_wave_15
    grid = wave.profile.grid
    delta = 37 * grid.h
    shifted = wave.profile.shifted(delta)
    renorm, applied = normalize_phase(shifted.values.copy(), grid, 0.5)
    assert abs(applied - (-delta)) < 1e-6
    assert np.max(np.abs(renorm[5:-5] - wave.profile.values[5:-5])) < 1e-6


def test_family_scaling_consistency(grid60):
    # the compressed front equals (1-a1)/(1+l) times the plain one
    a1, l = 0.5, 0.1
    s = (1.0 - a1) / (1.0 + l)
    plain = solve_kpp(KppProblem.logistic(1.0 - a1, 1.0, 1.5), grid60)
    compressed = solve_kpp(KppProblem.logistic(1.0 - a1, s, 1.5), grid60)
    diff = np.max(np.abs(compressed.profile.values - s * plain.profile.values))
    assert diff < 1e-6


def test_stretched_family_limits(grid60):
    a1, l = 0.5, 0.4375
    b = (1.0 - a1) / l
    assert b > 1.0
    wave = solve_kpp(KppProblem.logistic(1.0 - a1, b, 1.5), grid60)
    assert wave.profile.right_limit == pytest.approx(b)
    assert np.all(np.diff(wave.profile.values) > 0)


def test_custom_nonlinearity(grid60):
    wave = solve_kpp(
        KppProblem.custom(f=lambda u: u * (1.0 - u),
                          df=lambda u: 1.0 - 2.0 * u, b=1.0, c=2.5),
        grid60,
    )
    assert wave.residual <= 1e-8
    predicted = (2.5 - math.sqrt(2.5 ** 2 - 4.0)) / 2.0
    assert abs(wave.decay_minus.rate - predicted) / predicted < 0.02


def _shooting_reference(c: float, rtol: float):
    """Independent front profile for f = u(1-u) by adaptive shooting.

    The front is the stable manifold of the saddle at u = 1, which is locally
    unique, so integrating BACKWARD from its linearization is stable the
    whole way down to the zero state (transverse errors decay backward).
    Shooting forward from the zero state cannot do better than O(sqrt(u))
    relative error because the fast-mode coefficient of the orbit is global
    data.  Phase is pinned at the 1/2-crossing.
    """
    mu = (c - math.sqrt(c * c + 4.0)) / 2.0  # stable rate at u = 1
    delta = 1e-8

    def rhs(xi, y):
        return [y[1], c * y[1] - y[0] * (1.0 - y[0])]

    def hit_half(xi, y):
        return y[0] - 0.5
    hit_half.direction = -1.0  # decreasing along backward integration

    sol = solve_ivp(rhs, (0.0, -90.0), [1.0 - delta, -mu * delta],
                    method="DOP853", rtol=rtol, atol=1e-16,
                    dense_output=True, events=hit_half)
    assert sol.t_events[0].size > 0
    x_half = sol.t_events[0][0]

    def ref(xi):
        return sol.sol(np.asarray(xi) + x_half)[0]

    return ref, x_half


def test_front_matches_shooting_oracle():
    c = 5.0 / math.sqrt(6.0)
    grid = Grid.with_spacing(40.0, 0.00125)
    wave = solve_kpp(KppProblem.custom(
        f=lambda u: u * (1.0 - u), df=lambda u: 1.0 - 2.0 * u, b=1.0, c=c),
        grid)

    ref, _ = _shooting_reference(c, rtol=1e-11)
    ref_loose, _ = _shooting_reference(c, rtol=1e-9)

    window = (grid.nodes >= -30.0) & (grid.nodes <= 4.0)
    xi = grid.nodes[window]

    # cross-check the oracle against itself at two tolerances, and against
    # the closed-form front that exists at this particular speed:
    # w(x) = (1 + (sqrt(2)-1) e^{-x/sqrt(6)})^{-2}
    oracle_consistency = np.max(np.abs(ref(xi) - ref_loose(xi)))
    assert oracle_consistency < 1e-9
    closed = (1.0 + (math.sqrt(2.0) - 1.0)
              * np.exp(-xi / math.sqrt(6.0))) ** -2.0
    assert np.max(np.abs(ref(xi) - closed)) < 1e-9

    err = np.max(np.abs(wave.profile.values[window] - ref(xi)))
    assert err < 1e-6
