"""Covariance reconstruction from beam powers, classical and quantum."""
from .reconstruct import (
    FilterResult,
    ReconResult,
    TransitionReport,
    classical_solution,
    qsve_filter_circuit,
    reconstruct_classical,
    reconstruct_quantum,
    schmidt_to_density,
    singular_filter_state,
    singular_vector_transition,
    transition_circuit,
    transition_oracle,
)
from .regularization import (
    RegularizationConfig,
    ResolvedRegularization,
    bits_for_precision,
    loading_filter,
    phase_error_budget,
    phase_precision,
    resolve_regularization,
)
from .walk import InvariantPlane, WalkOperator, householder_prep, walk_operator_for

__all__ = [
    "FilterResult",
    "ReconResult",
    "TransitionReport",
    "classical_solution",
    "qsve_filter_circuit",
    "reconstruct_classical",
    "reconstruct_quantum",
    "schmidt_to_density",
    "singular_filter_state",
    "singular_vector_transition",
    "transition_circuit",
    "transition_oracle",
    "RegularizationConfig",
    "ResolvedRegularization",
    "bits_for_precision",
    "loading_filter",
    "phase_error_budget",
    "phase_precision",
    "resolve_regularization",
    "InvariantPlane",
    "WalkOperator",
    "householder_prep",
    "walk_operator_for",
]
