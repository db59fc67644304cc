"""Simulation toolkit for alpha-stable McKean-Vlasov SDEs.

Exact stable sampling, concave-cost Wasserstein distances on empirical
measures, frozen-flow Euler schemes, Picard iteration on measure flows,
heat-kernel decay probes, and the drift-nonuniqueness construction.
"""

__version__ = "0.1.0"

from .core import Estimate, RngStream
from .stable_noise import (
    Convention,
    StableSpec,
    empirical_char_fn,
    levy_measure_constant,
    sample_subordinated,
    sample_subordinator,
    sample_sym_stable,
    stable_density_1d,
    stable_interval_mass,
)
from .measures import (
    EmpiricalMeasure,
    MeasureFlow,
    flow_distance,
    holder_dual_lb,
    resample_flow,
    subsample,
    wasserstein_kappa,
)
from .sde import (
    CoefficientSet,
    PathBundle,
    euler_frozen_flow,
    euler_mckean_particles,
    sup_moment,
    validate_coefficients,
)
from .picard import (
    PicardConfig,
    PicardReport,
    choose_delta,
    contraction_rate,
    delta_sweep,
    picard_iterate,
    residual_check,
)
from .probes import ProbeResult, frac_deriv_decay_probe, grad_decay_probe
from .counterexample import (
    RootFindReport,
    VerificationReport,
    drift_functional,
    g_eval,
    solve_fixed_point,
    verify_two_solutions,
)
from . import models

__all__ = [
    "Estimate",
    "RngStream",
    "Convention",
    "StableSpec",
    "empirical_char_fn",
    "levy_measure_constant",
    "sample_subordinated",
    "sample_subordinator",
    "sample_sym_stable",
    "stable_density_1d",
    "stable_interval_mass",
    "EmpiricalMeasure",
    "MeasureFlow",
    "flow_distance",
    "holder_dual_lb",
    "resample_flow",
    "subsample",
    "wasserstein_kappa",
    "CoefficientSet",
    "PathBundle",
    "euler_frozen_flow",
    "euler_mckean_particles",
    "sup_moment",
    "validate_coefficients",
    "PicardConfig",
    "PicardReport",
    "choose_delta",
    "contraction_rate",
    "delta_sweep",
    "picard_iterate",
    "residual_check",
    "ProbeResult",
    "frac_deriv_decay_probe",
    "grad_decay_probe",
    "RootFindReport",
    "VerificationReport",
    "drift_functional",
    "g_eval",
    "solve_fixed_point",
    "verify_two_solutions",
    "models",
]
