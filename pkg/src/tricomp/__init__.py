"""Numerical toolkit for monotone traveling waves of a three-species
competition-cooperation reaction-diffusion system.

Pipeline: classify the parameter regime, build ordered upper/lower solution
pairs out of scalar logistic fronts (or a two-species wave), run the monotone
iteration to the wave, fit its tail decay rates against the closed forms, and
cross-check against time-dependent simulation, including the equivalent
nonlocal delayed two-species system.
"""

from .asymptotics import (
    DecayFit,
    PlusInfinityModes,
    fit_tail,
    match_wave_asymptotics,
    plus_infinity_modes,
)
from .bvp import Grid, Profile
from .model import (
    ModelParams,
    RateTable,
    Regime,
    RegimeVariant,
    classify_regime,
    from_monotone,
    rates,
    reaction_monotone,
    reaction_original,
    to_monotone,
)
from .pde import (
    KernelSpec,
    SimState,
    VHistory,
    convolution_identity_check,
    measure_speed,
    run_local,
    run_nonlocal,
    step_local,
    step_nonlocal,
)
from .scalar_waves import KppProblem, KppWave, kpp_plus_decay, solve_kpp
from .system_waves import (
    BoundingPair,
    IterationConfig,
    WaveSolution,
    build_pair_h2a,
    build_pair_h2b,
    build_pair_lv2,
    iterate,
    sliding_order_check,
    solve_lv2,
    three_species_wave,
    uniqueness_check,
    verify_pair,
)

__version__ = "0.1.0"

__all__ = [
    "DecayFit",
    "PlusInfinityModes",
    "fit_tail",
    "match_wave_asymptotics",
    "plus_infinity_modes",
    "Grid",
    "Profile",
    "ModelParams",
    "RateTable",
    "Regime",
    "RegimeVariant",
    "classify_regime",
    "rates",
    "reaction_monotone",
    "reaction_original",
    "to_monotone",
    "from_monotone",
    "KernelSpec",
    "SimState",
    "VHistory",
    "convolution_identity_check",
    "measure_speed",
    "run_local",
    "run_nonlocal",
    "step_local",
    "step_nonlocal",
    "KppProblem",
    "KppWave",
    "kpp_plus_decay",
    "solve_kpp",
    "BoundingPair",
    "IterationConfig",
    "WaveSolution",
    "build_pair_h2a",
    "build_pair_h2b",
    "build_pair_lv2",
    "iterate",
    "sliding_order_check",
    "solve_lv2",
    "three_species_wave",
    "uniqueness_check",
    "verify_pair",
    "__version__",
]
