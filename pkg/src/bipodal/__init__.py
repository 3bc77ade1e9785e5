"""Constrained-entropy-optimal bipodal graphons in the edge/triangle model."""

from .errors import (
    BipodalError,
    DomainError,
    InfeasibleError,
    NoConvergenceError,
    NoSignChangeError,
    SingularityError,
)
from .graphon import (
    BipodalGraphon,
    ConstraintPoint,
    MultipodalGraphon,
    bipodal_densities,
    canonicalize,
    multipodal_densities,
    podality,
    so,
    symmetric_optimizer,
)
from .perturbation import PerturbationReport, entropy_derivs, perturbation_at
from .stationarity import best_over_c, entropy_profile, solve_inner, stationarity_residual
from .boundary import locate, locate_along_tau, sign_map, trace_sigma
from .sampler import SamplerConfig, SamplerResult, cross_section, local_refine, sample_optimize

__version__ = "0.1.0"

__all__ = [
    "BipodalError", "DomainError", "InfeasibleError", "NoConvergenceError",
    "NoSignChangeError", "SingularityError",
    "BipodalGraphon", "ConstraintPoint", "MultipodalGraphon",
    "bipodal_densities", "canonicalize", "multipodal_densities", "podality", "so",
    "symmetric_optimizer",
    "PerturbationReport", "entropy_derivs", "perturbation_at",
    "best_over_c", "entropy_profile", "solve_inner", "stationarity_residual",
    "locate", "locate_along_tau", "sign_map", "trace_sigma",
    "SamplerConfig", "SamplerResult", "cross_section", "local_refine", "sample_optimize",
]
