"""Spectral-Galerkin simulation and decay-rate verification for degenerate
Kirchhoff equations with weak time-dependent dissipation."""

__version__ = "0.1.0"

from .spectral import SpectralOperator, coercivity, inner_Au_v, norm_alpha
from .model import ModelParams, PhaseState, hyperbolic_rhs, parabolic_rhs, scalar_parabolic_exact
from .integrate import (
    IntegrationSpec,
    LogGrid,
    Trajectory,
    Uniform,
    integrate_hyperbolic,
    integrate_parabolic,
    measure_perturbation_gap,
)
from .energies import (
    AuditReport,
    EnergySnapshot,
    TheoremConstants,
    check_apriori,
    compute_constants,
    energy_snapshot,
)
from .comparison import (
    ComparisonProblem,
    check_f_condition,
    integrate_comparison_ode,
    lemma1_bound,
    lemma2_lower,
    lemma2_upper,
    phi,
    verify_lemma_suites,
)
from .rates import (
    DecayFit,
    RatePrediction,
    fit_power_law,
    nondecay_check,
    theoretical_exponents,
)

__all__ = [
    "__version__",
    "SpectralOperator",
    "coercivity",
    "inner_Au_v",
    "norm_alpha",
    "ModelParams",
    "PhaseState",
    "hyperbolic_rhs",
    "parabolic_rhs",
    "scalar_parabolic_exact",
    "IntegrationSpec",
    "LogGrid",
    "Uniform",
    "Trajectory",
    "integrate_hyperbolic",
    "integrate_parabolic",
    "measure_perturbation_gap",
    "EnergySnapshot",
    "TheoremConstants",
    "AuditReport",
    "energy_snapshot",
    "compute_constants",
    "check_apriori",
    "ComparisonProblem",
    "lemma1_bound",
    "phi",
    "check_f_condition",
    "lemma2_upper",
    "lemma2_lower",
    "integrate_comparison_ode",
    "verify_lemma_suites",
    "DecayFit",
    "RatePrediction",
    "fit_power_law",
    "theoretical_exponents",
    "nondecay_check",
]
