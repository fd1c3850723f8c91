"""Normalized ground states for logarithmic NLS models.

Mass-constrained minimization of the Schrodinger energy with
logarithmic-type nonlinearities, penalized multi-peak flows in the
semiclassical regime, and the certifications (concavity, decay rate,
interaction scaling) that go with them.
"""

from .model import (
    NonlinearityModel,
    pure_log,
    log_plus_power,
    double_power,
    evaluate,
    truncate,
    gn_constant,
    mass_ceiling,
    gausson_profile,
    gausson_oracle,
    energy_curve_zero,
)
from .field import Grid, laplacian, mass, normalize, dirichlet
from .energy import (
    PotentialSpec,
    PenalizationParams,
    potential_const,
    potential_neg_quadratic,
    potential_gauss_bump,
    potential_table,
    resolve_potential,
    energy_J,
    grad_J,
    gamma_eps,
    lagrange_multiplier,
    eps_ceiling,
)
from .solver import run_groundstate, sweep_E_alpha, CurvePoint, GroundState
from .multipeak import (
    PeakSet,
    separation,
    upsilon,
    make_bump_spec,
    gamma0,
    mass_fractions,
    tail_mass,
    interaction_deficit,
    calibrate_geometry,
    run_multipeak,
)
from .analysis import (
    DecayFit,
    certify_concavity,
    certify_subadditivity,
    decay_fit,
    recurrence_check,
    interaction_scaling_fit,
)

__version__ = "0.1.0"

__all__ = [
    "NonlinearityModel", "pure_log", "log_plus_power", "double_power",
    "evaluate", "truncate", "gn_constant", "mass_ceiling",
    "gausson_profile", "gausson_oracle", "energy_curve_zero",
    "Grid", "laplacian", "mass", "normalize", "dirichlet",
    "PotentialSpec", "PenalizationParams", "potential_const",
    "potential_neg_quadratic", "potential_gauss_bump", "potential_table",
    "resolve_potential", "energy_J", "grad_J", "gamma_eps",
    "lagrange_multiplier", "eps_ceiling",
    "run_groundstate", "sweep_E_alpha", "CurvePoint", "GroundState",
    "PeakSet", "separation", "upsilon", "make_bump_spec", "gamma0",
    "mass_fractions", "tail_mass", "interaction_deficit",
    "calibrate_geometry", "run_multipeak",
    "DecayFit", "certify_concavity", "certify_subadditivity", "decay_fit",
    "recurrence_check", "interaction_scaling_fit",
]
