"""Moment bounds and simulations for SPDEs with sublinear noise coefficients.

The package has three layers: coefficient/kernel descriptions with their
growth thresholds (``diffusion``, ``kernels``), the envelope solver and
moment/tail bound engine built on them (``envelope``, ``bounds``), and a
Monte Carlo simulator whose ensembles empirically validate the bounds
(``simulate``). ``cli`` wires everything into a command-line harness.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    InitialCondition,
    J0,
    J1,
    PRESET_NAMES,
    ScenarioPreset,
    TailBound,
    chernoff_exponent,
    check_preset_growth,
    constant_init,
    custom_init,
    dirac_init,
    exponential_init,
    fractional_sigma,
    legendre_tail,
    moment_bound_fractional,
    moment_bound_heat,
    moment_bound_wave,
    power_law_init,
    scenario_preset,
    spatial_asymptote,
    tail_bound,
    wave_J0,
    wave_J1,
)
from .diffusion import (
    DiffusionCoefficient,
    concavity_thresholds,
    custom,
    eval_rho,
    iterated_log,
    log_perturbed,
    ratio_power,
    rho_p,
    subgradient_gp,
)
from .envelope import (
    EnvelopeFunction,
    F_eval,
    F_inverse,
    envelope,
    fixed_point_oracle,
    newton_step_bound,
    solve_concave_inequality,
)
from .errors import ConfigError, DomainError, NumericsError, SublinError
from .kernels import (
    CorrelationKernel,
    bessel_potential,
    bessel_spectral,
    constant,
    dalang_check,
    h_heat,
    h_wave,
    heat_factorization_check,
    k_eval,
    k_wave,
    ornstein_uhlenbeck,
    point_eval,
    riesz,
    white,
)
from .simulate import (
    PathEnsemble,
    SimulationConfig,
    estimate_holder,
    estimate_moments,
    estimate_spatial_sup,
    estimate_tail,
    sample_noise_increment,
    simulate_heat,
    simulate_wave,
)

__all__ = [name for name in dir() if not name.startswith("_")]
