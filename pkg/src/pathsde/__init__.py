"""Exact solution, approximation schemes and error oracles for a 7-dimensional
SDE whose non-adaptive strong approximation error decays only logarithmically."""

__version__ = "0.1.0"

from .coefficients import CoefficientSet, ModelParams, normalize
from .exact_solution import SolutionVector, eval_G, eval_G_prime, solution_at_T
from .gaussian_model import GridFunctional, VarianceTable, build_functional
from .schemes import SchemeOutput, adaptive_scheme, euler_maruyama, interp_scheme
from .oracles import (
    GapConstruction,
    conditional_mean_error,
    conditional_median_error,
    symmetrization_bound,
)
from .harness import ErrorRow, ExperimentConfig, RateFit, run_convergence

__all__ = [
    "CoefficientSet",
    "ModelParams",
    "normalize",
    "SolutionVector",
    "eval_G",
    "eval_G_prime",
    "solution_at_T",
    "GridFunctional",
    "VarianceTable",
    "build_functional",
    "SchemeOutput",
    "adaptive_scheme",
    "euler_maruyama",
    "interp_scheme",
    "GapConstruction",
    "conditional_mean_error",
    "conditional_median_error",
    "symmetrization_bound",
    "ErrorRow",
    "ExperimentConfig",
    "RateFit",
    "run_convergence",
]
