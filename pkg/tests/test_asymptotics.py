import math

import numpy as np
import pytest

from tricomp.asymptotics import (
    MINUS,
    PLUS,
    fit_tail,
    match_wave_asymptotics,
    plus_infinity_modes,
    write_tail_csv,
)
from tricomp.bvp import Grid, Profile
from tricomp.errors import TailTooShortError
from tricomp.model import ModelParams, rates


def _exp_profile(rate=0.5, limit=1.0, grid=None):
    grid = grid or Grid(60.0, 2999)
    xi = grid.nodes
    vals = np.minimum(np.exp(rate * xi), limit)
    return Profile(grid, vals)


def test_fit_pure_exponential():
    prof = _exp_profile(0.5)
    fit = fit_tail(prof, MINUS)
    assert abs(fit.rate - 0.5) < 1e-3
    assert not fit.poly_factor
    assert fit.amplitude == pytest.approx(1.0, rel=1e-3)


def test_fit_poly_factor():
    grid = Grid(60.0, 2999)
    xi = grid.nodes
    tail = (1.0 - 2.0 * xi) * np.exp(0.7 * xi)
    vals = np.minimum(tail, 1.0)
    prof = Profile(grid, vals)
    fit = fit_tail(prof, MINUS, allow_poly=True)
    assert fit.poly_factor
    assert abs(fit.rate - 0.7) < 1e-2
    # the slope coefficient of (A + B xi) is negative here
    assert fit.amplitude < 0


def test_pure_model_wins_without_poly_tail():
    prof = _exp_profile(0.5)
    fit = fit_tail(prof, MINUS, allow_poly=True)
    assert not fit.poly_factor


def test_fit_shift_equivariance():
    grid = Grid(60.0, 2999)
    xi = grid.nodes
    p1 = Profile(grid, np.minimum(np.exp(0.5 * xi), 1.0))
    p2 = Profile(grid, np.minimum(np.exp(0.5 * (xi + 3.0)), 1.0))
    f1 = fit_tail(p1, MINUS)
    f2 = fit_tail(p2, MINUS)
    assert abs(f1.rate - f2.rate) < 1e-6
    assert f1.amplitude != pytest.approx(f2.amplitude)


def test_fit_plus_side():
    grid = Grid(60.0, 2999)
    xi = grid.nodes
    vals = np.maximum(1.0 - np.exp(-0.3 * xi), 0.0)
    # impose the true limit; the last sample is 1 - e^{-18}, not 1
    prof = Profile(grid, vals, left_limit=0.0, right_limit=1.0)
    fit = fit_tail(prof, PLUS)
    assert abs(fit.rate - (-0.3)) < 1e-3


def test_tail_too_short():
    grid = Grid(5.0, 49)
    prof = Profile(grid, np.linspace(0, 1, grid.nodes.size))
    with pytest.raises(TailTooShortError):
        fit_tail(prof, MINUS)


def test_write_tail_csv(tmp_path):
    prof = _exp_profile(0.5)
    path = tmp_path / "tail.csv"
    write_tail_csv(prof, MINUS, path)
    assert path.exists()
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[0] == prof.values.size


def test_plus_infinity_modes_values():
    p = ModelParams(0.5, 2.0, 0.2, 2.0)
    modes = plus_infinity_modes(p, 1.5)
    mu1, mu2, mu3 = modes.rates
    assert mu1 == pytest.approx(-0.5)
    assert mu2 == pytest.approx(-0.12321245982864903)
    assert mu3 == pytest.approx(-0.28077640640441515)
    assert not modes.degenerate


def test_plus_infinity_modes_are_eigendirections():
    # substituting each mode into the linearized system must annihilate it;
    # this also pins down which variant of the rate formulas is in force
    p = ModelParams(0.5, 2.0, 0.2, 2.0)
    modes = plus_infinity_modes(p, 1.5)
    for k in range(3):
        assert modes.mode_residual(p, 1.5, k) < 1e-10
    # transform invertible away from the degenerate parameter sets
    assert abs(np.linalg.det(modes.transform)) > 1e-12


def test_modes_match_closed_form_entries():
    p = ModelParams(0.5, 2.0, 0.2, 2.0)
    P = plus_infinity_modes(p, 1.5).transform
    d2 = p.r * (1.0 - p.a2) + 1.0
    assert P[0, 1] == pytest.approx(p.a1 / d2)
    assert P[1, 1] == pytest.approx(p.tau * p.r * (1.0 - p.a2) + 1.0)
    assert P[0, 2] == pytest.approx(p.a1 * p.tau / (p.tau - 1.0))
    assert P[2, 2] == 1.0 and P[1, 2] == 0.0


def test_modes_degenerate_tau_one():
    # tau = 1 merges the first and third rates; the numerical fallback must
    # flag it and still return finite directions
    p = ModelParams(0.5, 2.0, 0.2, 1.0)
    modes = plus_infinity_modes(p, 1.5)
    assert modes.degenerate
    assert modes.rates[0] == pytest.approx(modes.rates[2])
    assert np.all(np.isfinite(modes.modes))


def test_modes_degenerate_resonant_pair():
    # r(1-a2) = -1/tau merges mu2 and mu3 (the criterion-5 parameter set)
    p = ModelParams(0.5, 3.0, 0.25, 2.0)
    modes = plus_infinity_modes(p, 1.5)
    assert modes.degenerate
    assert modes.rates[1] == pytest.approx(modes.rates[2])


def test_match_wave_asymptotics_h2a(wave_h2a):
    report = match_wave_asymptotics(wave_h2a)
    assert not report["critical"]
    comps = report["components"]
    for name in ("u", "v", "w"):
        minus = comps[name]["minus"]
        assert minus["relative_error"] < 0.02
        assert not minus["poly_factor"]
        assert minus["amplitude"] > 0  # approach from above zero
    # v approaches 1 through the middle mode alone
    v_plus = comps["v"]["plus"]
    assert "predicted_rate" in v_plus
    assert v_plus["relative_error"] < 0.05
    mu2 = rates(wave_h2a.params, wave_h2a.c).mu2
    assert v_plus["predicted_rate"] == pytest.approx(mu2)


def test_match_wave_asymptotics_critical(wave_critical):
    report = match_wave_asymptotics(wave_critical)
    assert report["critical"]
    for name in ("u", "v", "w"):
        assert report["components"][name]["minus"]["poly_factor"]


def test_noncritical_pure_beats_poly(wave_h2a):
    for prof in (wave_h2a.u, wave_h2a.v, wave_h2a.w):
        fit = fit_tail(prof, MINUS, allow_poly=True)
        assert not fit.poly_factor
