import dataclasses
import math

import numpy as np
import pytest

from tricomp.bvp import Grid, Profile
from tricomp.errors import (
    MaxIterationsError,
    NoMonotoneWaveError,
    PreconditionError,
    RegimeError,
)
from tricomp.model import ModelParams, rates
from tricomp.system_waves import (
    GAUSS_SEIDEL,
    JACOBI,
    IterationConfig,
    build_pair_h2a,
    build_pair_h2b,
    build_pair_lv2,
    default_l_bar,
    default_l_h2a,
    default_l_lv2,
    iterate,
    slaved_tail_ratios,
    sliding_order_check,
    solve_lv2,
    three_species_wave,
    uniqueness_check,
    verify_pair,
)


def test_default_constants_h2a(p_h2a):
    l = default_l_h2a(p_h2a)
    assert l == pytest.approx(0.4 / 0.7 / 2.0)          # half of 0.5714...
    assert default_l_bar(p_h2a, l) == pytest.approx(l / 2.0 / 2.0)


def test_default_l_lv2(p_h2b):
    # (1 - a1 - r(a1 a2 - 1)) / (1 + r - a1) = 0.375/0.75 = 0.5
    assert default_l_lv2(p_h2b) == pytest.approx(0.5)


def test_default_l_lv2_rejects_wrong_regime():
    p = ModelParams(0.9, 20.0, 1.0, 2.0)  # bound is negative
    with pytest.raises(RegimeError):
        default_l_lv2(p)


def test_build_pair_h2a_verified(pair_h2a, p_h2a):
    assert pair_h2a.verified
    assert pair_h2a.ordered()
    assert pair_h2a.shift_applied == 0.0
    rep = pair_h2a.verification
    for role in ("upper", "lower"):
        for entry in rep[role].values():
            assert entry["max_violation"] <= 1e-8


def test_h2a_upper_v_inequality_formula(pair_h2a, p_h2a):
    # the upper v-residual equals [r(a2-1) - (1-a1)] * u(1-u) = -0.3 u(1-u)
    from tricomp.bvp import apply_wave_operator
    from tricomp.model import reaction_monotone

    ubar = pair_h2a.upper[0]
    grid = ubar.grid
    vals = ubar.values
    f = reaction_monotone(p_h2a, vals, vals, vals)[1]
    op = apply_wave_operator(vals, grid, 1.5) + f[1:-1]
    expected = -0.3 * vals[1:-1] * (1.0 - vals[1:-1])
    assert np.max(np.abs(op - expected)) < 1e-9


def test_build_pair_h2a_wrong_regime(p_h2b, grid_small):
    with pytest.raises(RegimeError):
        build_pair_h2a(p_h2b, 1.5, grid_small)


def test_build_pair_h2a_subcritical(p_h2a, grid_small):
    with pytest.raises(NoMonotoneWaveError):
        build_pair_h2a(p_h2a, 1.0, grid_small)


def test_build_pair_lv2(p_h2b, grid60):
    pair = build_pair_lv2(p_h2b, 1.5, grid60)
    assert pair.verified
    assert pair.meta["l"] == pytest.approx(0.5)
    # both right limits are (1, 1)
    assert pair.upper[0].right_limit == 1.0
    assert pair.upper[1].right_limit == 1.0
    assert pair.lower[0].right_limit == 1.0
    for role in ("upper", "lower"):
        for entry in pair.verification[role].values():
            assert entry["max_violation"] <= 1e-8


def test_build_pair_lv2_strict_h2b(grid60):
    # strictly inside H2b: the stretched upper really exceeds 1 and gets
    # capped, exercising all three branches
    p = ModelParams(0.5, 3.0, 0.3, 2.0)
    pair = build_pair_lv2(p, 1.5, grid60)
    stretch = (1.0 - p.a1) / pair.meta["l"]
    assert stretch > 1.0
    assert pair.verified
    assert np.max(pair.upper[0].values) == 1.0


def test_build_pair_h2b(pair_h2b, p_h2b):
    assert pair_h2b.verified
    assert pair_h2b.shift_applied == 0.0
    assert pair_h2b.meta["h3_predicate_min"] >= 0.0
    assert pair_h2b.meta["regime"].h3_satisfied is True


def test_h2b_lower_w_vanishes_for_large_tau(grid60):
    p = ModelParams(0.5, 3.0, 0.25, 1e6)
    l = default_l_h2a(p, cap_at_one=True)
    assert default_l_bar(p, l) < 1e-6
    pair = build_pair_h2b(p, 1.5, grid60)
    assert np.max(pair.lower[2].values) < 1e-6


def test_verify_pair_equilibria(p_h2a, grid_small):
    from tricomp.system_waves import BoundingPair

    g = grid_small
    ones = Profile(g, np.ones(g.nodes.size))
    zeros = Profile(g, np.zeros(g.nodes.size))
    pair = BoundingPair(upper=(ones, ones, ones), lower=(zeros, zeros, zeros),
                        system="three", params=p_h2a, c=1.5)
    rep = verify_pair(pair, p_h2a, 1.5)
    assert rep["all_ok"]
    for role in ("upper", "lower"):
        for entry in rep[role].values():
            assert abs(entry["max_violation"]) < 1e-14


def test_iterate_h2a(wave_h2a, p_h2a):
    assert max(wave_h2a.residuals) <= 1e-8
    assert wave_h2a.sandwich_max_escape <= 1e-9
    for prof in wave_h2a.components:
        assert np.all(np.diff(prof.values) > 0)
        assert prof.values[0] < 1e-10
        assert prof.values[-1] == 1.0
    # successive differences nonincreasing after the first sweep
    d = wave_h2a.diff_history
    assert np.all(d[2:] <= d[1:-1] * (1 + 1e-9) + 1e-15)


def test_iterate_decay_rates(wave_h2a, p_h2a):
    tab = rates(p_h2a, 1.5)
    for fit in wave_h2a.decay_minus:
        assert abs(fit.rate - tab.lambda_minus) / tab.lambda_minus < 0.02
        assert fit.amplitude > 0
    slowest = max(f.rate for f in wave_h2a.decay_plus if f is not None)
    assert abs(slowest - tab.mu2) / abs(tab.mu2) < 0.05


def test_iterate_lower_start_matches(wave_h2a, wave_h2a_lower):
    assert max(wave_h2a_lower.residuals) <= 1e-8
    assert uniqueness_check(wave_h2a, wave_h2a_lower) < 1e-6


def test_uniqueness_identity_and_translation(wave_h2a):
    assert uniqueness_check(wave_h2a, wave_h2a) == 0.0
    delta = 3.7 * wave_h2a.grid.h
    shifted = dataclasses.replace(
        wave_h2a,
        u=wave_h2a.u.shifted(delta),
        v=wave_h2a.v.shifted(delta),
        w=wave_h2a.w.shifted(delta),
    )
    assert uniqueness_check(wave_h2a, shifted) < 1e-8


def test_jacobi_order_converges(p_h2a, grid_small):
    pair = build_pair_h2a(p_h2a, 1.5, grid_small)
    gs = iterate(pair, p_h2a, 1.5, IterationConfig(sweep_order=GAUSS_SEIDEL))
    ja = iterate(pair, p_h2a, 1.5, IterationConfig(sweep_order=JACOBI))
    assert max(ja.residuals) <= 1e-8
    assert uniqueness_check(gs, ja) < 1e-6


def test_iterate_max_iters(p_h2a, grid_small):
    pair = build_pair_h2a(p_h2a, 1.5, grid_small)
    with pytest.raises(MaxIterationsError) as exc_info:
        iterate(pair, p_h2a, 1.5,
                IterationConfig(max_iters=3, polish=False, tol=1e-14))
    assert exc_info.value.best is not None
    assert "W" in exc_info.value.best


def test_three_species_wave_dispatch(p_h2a, p_h2b, grid_small):
    w_a = three_species_wave(p_h2a, 1.5, grid_small)
    assert w_a.regime.variant.value == "H2a"
    w_b = three_species_wave(p_h2b, 1.5, grid_small)
    assert w_b.regime.variant.value == "H2b"
    assert w_b.h3_predicate_min is not None


def test_three_species_wave_refuses_uncovered(grid_small):
    p = ModelParams(0.5, 4.0, 1.0, 2.0)
    with pytest.raises(RegimeError):
        three_species_wave(p, 1.5, grid_small)


def test_three_species_wave_h1_violated(grid_small):
    p = ModelParams(1.5, 2.0, 0.2, 2.0)
    with pytest.raises(RegimeError):
        three_species_wave(p, 1.5, grid_small)


def test_slaved_ratios_formulas(p_h2a):
    rho_v, rho_w = slaved_tail_ratios(p_h2a)
    assert rho_v == pytest.approx(0.4 / 0.7)
    assert rho_w == pytest.approx(rho_v / 2.0)
    # H2a makes the ray componentwise below the shared upper amplitude
    assert rho_v < 1.0 and rho_w < rho_v


def test_sliding_order_check_gap(wave_h2a):
    upper = tuple(Profile(q.grid, np.clip(q.values + 0.1, 0.0, 1.1))
                  for q in wave_h2a.components)
    assert sliding_order_check(upper, wave_h2a.components, (-20.0, 20.0),
                               wave_h2a.params, wave_h2a.c)


def test_sliding_order_check_shifted(wave_h2a):
    # strictly increasing profiles shifted left dominate the originals
    upper = tuple(q.shifted(1.0) for q in wave_h2a.components)
    assert sliding_order_check(upper, wave_h2a.components, (-20.0, 20.0),
                               wave_h2a.params, wave_h2a.c)


def test_sliding_order_check_precondition(wave_h2a):
    # crossing profiles: lower exceeds the upper at the left end
    upper = wave_h2a.components
    lower = tuple(q.shifted(1.0) for q in wave_h2a.components)
    with pytest.raises(PreconditionError):
        sliding_order_check(upper, lower, (-20.0, 20.0),
                            wave_h2a.params, wave_h2a.c)


def test_solve_lv2_h3_predicate(p_h2b, grid60):
    wave = solve_lv2(p_h2b, 1.5, grid60)
    assert max(wave.residuals) <= 1e-8
    assert wave.w is None
    interior_min = np.min(p_h2b.a2 * wave.u.values[1:-1]
                          - wave.v.values[1:-1])
    assert interior_min > 0.0


def test_wave_report_fields(wave_h2b):
    rep = wave_h2b.report()
    for key in ("params", "regime", "c", "iterations", "residuals",
                "decay_minus", "decay_plus", "shift_applied",
                "h3_predicate_min"):
        assert key in rep
    assert rep["regime"] == "H2b"
    assert rep["h3_satisfied"] is True


def test_wave_csv(tmp_path, wave_h2a):
    path = tmp_path / "wave.csv"
    wave_h2a.write_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (wave_h2a.grid.nodes.size, 4)
    assert np.allclose(data[:, 1], wave_h2a.u.values)
