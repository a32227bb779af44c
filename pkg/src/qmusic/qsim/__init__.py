"""Dense statevector / density-matrix simulator."""
from .circuit import Circuit, Gate, apply_gate, run_circuit, ry_matrix, rz_matrix
from .measure import destructive_swap_test, partial_trace, sample_counts, swap_test_circuit
from .phase import (
    PhaseEstimation,
    inverse_phase_estimation,
    phase_estimation,
    phase_estimation_circuit,
    qft_circuit,
    signed_phases,
)
from .prep import (
    prepare_amplitude_state,
    prepare_row_state,
    prepare_steering_state,
    row_circuit,
    steering_circuit,
)
from .states import MAX_QUBITS, DensityMatrix, ShotEstimate, StateVector

__all__ = [
    "Circuit",
    "Gate",
    "apply_gate",
    "run_circuit",
    "ry_matrix",
    "rz_matrix",
    "destructive_swap_test",
    "partial_trace",
    "sample_counts",
    "swap_test_circuit",
    "PhaseEstimation",
    "phase_estimation",
    "inverse_phase_estimation",
    "phase_estimation_circuit",
    "qft_circuit",
    "signed_phases",
    "prepare_amplitude_state",
    "prepare_steering_state",
    "prepare_row_state",
    "steering_circuit",
    "row_circuit",
    "MAX_QUBITS",
    "DensityMatrix",
    "ShotEstimate",
    "StateVector",
]
