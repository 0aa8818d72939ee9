import pytest

from tricomp.bvp import Grid
from tricomp.model import ModelParams
from tricomp.scalar_waves import KppProblem, solve_kpp
from tricomp.system_waves import (
    IterationConfig,
    build_pair_h2a,
    build_pair_h2b,
    iterate,
)


@pytest.fixture(scope="session")
def p_h2a():
    return ModelParams(a1=0.5, a2=2.0, r=0.2, tau=2.0)


@pytest.fixture(scope="session")
def p_h2b():
    return ModelParams(a1=0.5, a2=3.0, r=0.25, tau=2.0)


@pytest.fixture(scope="session")
def grid60():
    return Grid.with_spacing(60.0, 0.02)


@pytest.fixture(scope="session")
def grid_small():
    # cheap grid for tests that only need qualitative behavior; still wide
    # enough that e^(-lambda L) < 1e-10 at the standard parameters
    return Grid.with_spacing(50.0, 0.05)


@pytest.fixture(scope="session")
def kpp_wave_15(grid60):
    return solve_kpp(KppProblem.logistic(0.5, 1.0, 1.5), grid60)


@pytest.fixture(scope="session")
def kpp_wave_critical(grid60, p_h2a):
    return solve_kpp(KppProblem.logistic(0.5, 1.0, p_h2a.c_min), grid60)


@pytest.fixture(scope="session")
def pair_h2a(p_h2a, grid60):
    return build_pair_h2a(p_h2a, 1.5, grid60)


@pytest.fixture(scope="session")
def wave_h2a(pair_h2a, p_h2a):
    return iterate(pair_h2a, p_h2a, 1.5)


@pytest.fixture(scope="session")
def wave_h2a_lower(pair_h2a, p_h2a):
    return iterate(pair_h2a, p_h2a, 1.5, IterationConfig(start="lower"))


@pytest.fixture(scope="session")
def pair_h2b(p_h2b, grid60):
    return build_pair_h2b(p_h2b, 1.5, grid60)


@pytest.fixture(scope="session")
def wave_h2b(pair_h2b, p_h2b):
    return iterate(pair_h2b, p_h2b, 1.5)


@pytest.fixture(scope="session")
def wave_critical(p_h2a, grid60):
    pair = build_pair_h2a(p_h2a, p_h2a.c_min, grid60)
    return iterate(pair, p_h2a, p_h2a.c_min)
