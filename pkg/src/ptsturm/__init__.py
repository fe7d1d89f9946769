"""Sturmian eigencharge problems with non-Hermitian weights.

Discretize H phi = lam W phi on a real or complex contour, solve the
generalized eigenproblem with left and right vectors, build the metric
operator Theta and its square root, and check the resulting identities.
"""

from .analytic import QuantumNumbers, hermitian_coulomb_charge, pt_coulomb_eigencharge, pt_coulomb_energy
from .assembly import OperatorPencil, ProblemSpec, Weight, WeightKind, assemble_pencil, pencil_from_matrices
from .contour import ContourKind, ContourSpec, Grid
from .eigensolve import Spectrum, biorthonormalize, classify_reality, eigencharges_only, solve_pencil
from .metric import (
    MetricBundle,
    build_metric,
    factorize_omega,
    hermitize,
    m_matrix,
    metric_double_series,
    metric_single_series,
    metric_w_identity,
)
from .pipeline import Tolerances
from .verify import VerificationReport, convergence_study, run_suite

__version__ = "0.1.0"

__all__ = [
    "QuantumNumbers",
    "hermitian_coulomb_charge",
    "pt_coulomb_eigencharge",
    "pt_coulomb_energy",
    "OperatorPencil",
    "ProblemSpec",
    "Weight",
    "WeightKind",
    "assemble_pencil",
    "pencil_from_matrices",
    "ContourKind",
    "ContourSpec",
    "Grid",
    "Spectrum",
    "biorthonormalize",
    "classify_reality",
    "eigencharges_only",
    "solve_pencil",
    "MetricBundle",
    "build_metric",
    "factorize_omega",
    "hermitize",
    "m_matrix",
    "metric_double_series",
    "metric_single_series",
    "metric_w_identity",
    "Tolerances",
    "VerificationReport",
    "convergence_study",
    "run_suite",
]
