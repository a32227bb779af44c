"""Value types for simulator states."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, NumericalError

NORM_TOL = 1e-10
MAX_QUBITS = 24


def num_qubits_for(dim: int) -> int:
    if dim < 1 or dim & (dim - 1):
        raise DimensionError(f"dimension {dim} is not a power of two")
    n = dim.bit_length() - 1
    if n > MAX_QUBITS:
        raise DimensionError(f"{n} qubits exceeds the simulator cap of {MAX_QUBITS}")
    return n


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        num_qubits_for(amp.size)
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise NumericalError(f"state is not normalized (norm={norm!r})")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> "StateVector":
        amp = np.zeros(2**num_qubits, dtype=np.complex128)
        amp[index] = 1.0
        return cls(amp)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("density matrix must be square")
        num_qubits_for(m.shape[0])
        if np.linalg.norm(m - m.conj().T) > NORM_TOL * max(1.0, np.linalg.norm(m)):
            raise NumericalError("density matrix is not Hermitian")
        m = (m + m.conj().T) / 2
        tr = np.trace(m).real
        if abs(tr - 1.0) > NORM_TOL:
            raise NumericalError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(m).min() < -NORM_TOL:
            raise NumericalError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        d = 2**num_qubits
        return cls(np.eye(d, dtype=np.complex128) / d)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


@dataclass(frozen=True)
class ShotEstimate:
    """A (possibly sampled) expectation value.

    ``shots`` is ``None`` for exact evaluation, in which case ``std_error`` is 0.
    """

    value: float
    shots: int | None
    std_error: float

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")
