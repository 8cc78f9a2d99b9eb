"""L1-constrained linear discriminant (ROAD) with a numerical verification harness."""

from .classifier import ROADClassifier
from .estimators import LabeledDataset, SampleEstimates, fit_estimates, gen_synthetic
from .exceptions import ConvergenceWarning, InfeasibleProblemError, RoadError
from .model import GaussianPair, classify, conditional_error_rates, oracle_rate, phi_bar
from .solver import RoadProblem, RoadSolution, kkt_residual, solve, solve_exact, solve_projected_gradient

__version__ = "0.1.0"

__all__ = [
    "ConvergenceWarning",
    "GaussianPair",
    "InfeasibleProblemError",
    "LabeledDataset",
    "ROADClassifier",
    "RoadError",
    "RoadProblem",
    "RoadSolution",
    "SampleEstimates",
    "classify",
    "conditional_error_rates",
    "fit_estimates",
    "gen_synthetic",
    "kkt_residual",
    "oracle_rate",
    "phi_bar",
    "solve",
    "solve_exact",
    "solve_projected_gradient",
]
