"""Acyclicity-guaranteed Bayesian structure learning over DAGs.

Thin wrapper over the C++ core: permutation-decomposed latent graph model,
SVGD particle inference, ordering estimation, and posterior metrics.
"""

from permdag._core import (
    DegeneracyError,
    ValidationError,
    auroc,
    compose_adjacency,
    cyclicity_score,
    eqvar_ordering,
    er_log_prior,
    is_acyclic,
    permutation_matrix,
    posterior_metrics,
    run_inference,
    sample_er_dag,
    shd,
    simulate_linear,
    simulate_nonlinear,
    topological_ordering,
    validate_ordering,
)

__all__ = [
    "DegeneracyError",
    "ValidationError",
    "auroc",
    "compose_adjacency",
    "cyclicity_score",
    "eqvar_ordering",
    "er_log_prior",
    "is_acyclic",
    "permutation_matrix",
    "posterior_metrics",
    "run_inference",
    "sample_er_dag",
    "shd",
    "simulate_linear",
    "simulate_nonlinear",
    "topological_ordering",
    "validate_ordering",
]
