"""k-means clustering under heavy tails: exact 1D solvers, excess distortion, experiments."""

from kmht.core import (
    CenterSet,
    SolveReport,
    SortedSample,
    ThresholdPartition,
    assign,
    empirical_excess_distortion_centers,
    empirical_excess_distortion_partition,
    hausdorff_distance,
    population_excess_distortion_centers,
    population_excess_distortion_partition,
)
from kmht.distributions import (
    AsymmetricPareto,
    Empirical,
    Gaussian,
    OneSidedPareto,
    RandomStream,
    SymmetricPareto,
    Uniform,
    conditional_mean,
    interval_prob,
    sample_batch,
    tail_prob,
)
from kmht.errors import ConstraintError, DomainError
from kmht.solvers import (
    BalanceConstraint,
    brute_force_kmeans_1d,
    exact_kmeans_1d,
    lloyd_balanced_heuristic,
    naive_halfline_estimator,
)

__version__ = "0.1.0"

__all__ = [
    "AsymmetricPareto",
    "BalanceConstraint",
    "CenterSet",
    "ConstraintError",
    "DomainError",
    "Empirical",
    "Gaussian",
    "OneSidedPareto",
    "RandomStream",
    "SolveReport",
    "SortedSample",
    "SymmetricPareto",
    "ThresholdPartition",
    "Uniform",
    "assign",
    "brute_force_kmeans_1d",
    "conditional_mean",
    "empirical_excess_distortion_centers",
    "empirical_excess_distortion_partition",
    "exact_kmeans_1d",
    "hausdorff_distance",
    "interval_prob",
    "lloyd_balanced_heuristic",
    "naive_halfline_estimator",
    "population_excess_distortion_centers",
    "population_excess_distortion_partition",
    "sample_batch",
    "tail_prob",
]
