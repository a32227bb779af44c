"""State preparation: amplitude encoding, steering vectors and rows of A."""
from __future__ import annotations

import numpy as np

from ..array_signal import ArrayConfig, BeamSweepPlan
from ..errors import DimensionError, NumericalError
from .circuit import Circuit, run_circuit
from .states import StateVector, num_qubits_for


def prepare_amplitude_state(v) -> StateVector:
    """Direct amplitude encoding ``v / ||v||`` in place of a QRAM loader."""
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    num_qubits_for(v.size)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise NumericalError("cannot encode the zero vector")
    return StateVector(v / norm)


def steering_circuit(config: ArrayConfig, angle: float, conjugate: bool = False) -> Circuit:
    """Hadamards on the index register, then one controlled phase per index qubit.

    Index qubit ``k`` carries weight ``2**(n-1-k)`` and, when set, multiplies
    its branch by ``exp(-j 2 pi (d/lambda) weight sin(theta))``; the product
    over set bits gives the element phase of the steering vector. The phase
    value is compiled into the gate rather than held in an angle register.
    """
    if abs(angle) >= 90.0:
        raise ValueError(f"angle {angle} deg is outside (-90, 90)")
    n = config.num_qubits
    step = -2 * np.pi * config.spacing_ratio * np.sin(np.deg2rad(angle))
    if conjugate:
        step = -step
    c = Circuit(n)
    for q in range(n):
        c.h(q)
    for q in range(n):
        c.gphase(step * 2 ** (n - 1 - q), controls=(q,))
    return c


def prepare_steering_state(config: ArrayConfig, angle: float) -> StateVector:
    n = config.num_qubits
    return run_circuit(steering_circuit(config, angle), StateVector.basis(n))


def row_circuit(plan: BeamSweepPlan, config: ArrayConfig, q: int) -> Circuit:
    """|a(theta_q)> on the first register and |a*(theta_q)> on the second."""
    if not 0 <= q < len(plan):
        raise DimensionError(f"row index {q} out of range for a {len(plan)}-angle sweep")
    n = config.num_qubits
    theta = plan.angles[q]
    c = Circuit(2 * n)
    c.extend(steering_circuit(config, theta))
    c.extend(steering_circuit(config, theta, conjugate=True), offset=n)
    return c


def prepare_row_state(plan: BeamSweepPlan, config: ArrayConfig, q: int) -> StateVector:
    """Row q of the measurement matrix, normalized by M."""
    c = row_circuit(plan, config, q)
    return run_circuit(c, StateVector.basis(c.num_qubits))
