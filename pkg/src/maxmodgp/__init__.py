"""Shape-constrained Gaussian-process regression with sequential knot and variable selection."""

__version__ = "0.1.0"

from .basis import (CoefficientGrid, MultiaffineDomain, Subdivision, Subdivision1D, add_variable,
                    design_matrix, eval_ambient, eval_spline, hat_basis_eval, insert_knot,
                    multiaffine_extend, project, tensor_basis_eval)
from .constraints import (Boundedness, ConstraintSystem, Convexity, Monotonicity, build_inequality,
                          build_system, check_feasible_grid)
from .errors import (ConfigError, DataError, InfeasibleError, MaxModError, NumericalError,
                     ParameterError, SeparationError)
from .kernel import Bounds, KernelModel, fit_hyperparameters, kernel_matrix, log_marginal_likelihood
from .l2 import GramOperator, gram_1d, quadratic_form
from .maxmod import KnotMove, MaxMod, MaxModConfig, MaxModState, VariableMove, run
from .sampler import TruncatedGaussianSpec, credible_band, posterior_spec, sample
from .solver import QpProblem, QpSolution, compute_map, compute_noisy_map, solve_qp

__all__ = [
    "Boundedness", "Bounds", "CoefficientGrid", "ConfigError", "ConstraintSystem", "Convexity",
    "DataError", "GramOperator", "InfeasibleError", "KernelModel", "KnotMove", "MaxMod",
    "MaxModConfig", "MaxModError", "MaxModState", "Monotonicity", "MultiaffineDomain",
    "NumericalError", "ParameterError", "QpProblem", "QpSolution", "SeparationError",
    "Subdivision", "Subdivision1D", "TruncatedGaussianSpec", "VariableMove", "add_variable",
    "build_inequality", "build_system", "check_feasible_grid", "compute_map", "compute_noisy_map",
    "credible_band", "design_matrix", "eval_ambient", "eval_spline", "fit_hyperparameters",
    "gram_1d", "hat_basis_eval", "insert_knot", "kernel_matrix", "log_marginal_likelihood",
    "multiaffine_extend", "posterior_spec", "project", "quadratic_form", "run", "sample",
    "solve_qp", "tensor_basis_eval",
]
