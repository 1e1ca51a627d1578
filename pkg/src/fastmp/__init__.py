"""Greedy sparse recovery over partial Fourier and Hadamard operators, with a
correlation step computed from a precomputed kernel instead of a transform."""

from .cost_model import CostReport, FlopCounter
from .fast_correlation import (CorrelationKernel, PermutationAction, compute_kernel,
                               fast_update, verify_permutation_structure)
from .sensing import (ProblemInstance, RowSelection, SensingOperator, make_instance,
                      make_operator, make_row_selection)
from .solvers import (CorrelationMode, LSMethod, RankDeficientError, RecoveryResult,
                      SolveConfig, cosamp_solve, least_squares, omp_solve)
from .structured_unitary import StructuredUnitary, fourier, hadamard

__version__ = "0.1.0"

__all__ = [
    "CostReport", "FlopCounter", "CorrelationKernel", "PermutationAction",
    "compute_kernel", "fast_update", "verify_permutation_structure",
    "ProblemInstance", "RowSelection", "SensingOperator", "make_instance",
    "make_operator", "make_row_selection", "CorrelationMode", "LSMethod",
    "RankDeficientError", "RecoveryResult", "SolveConfig", "cosamp_solve",
    "least_squares", "omp_solve", "StructuredUnitary", "fourier", "hadamard",
]
