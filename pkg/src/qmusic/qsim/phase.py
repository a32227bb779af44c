"""Quantum phase estimation on a dense unitary.

The joint state is kept as a ``(2**t, D)`` array whose row ``k`` is the
system slice for phase-register value ``k`` (the register is the most
significant part of the amplitude index). The controlled powers
``sum_x |x><x| (x) U^x`` are applied in the eigenbasis of ``U``, where they
are diagonal; the phase register transforms (Hadamard layer, QFT) are applied
as FFT / fast Walsh-Hadamard transforms along axis 0. This is the same
operator as the gate sequence built by :func:`phase_estimation_circuit`,
which tests use as the reference.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as la

from ..errors import DimensionError, NotUnitaryError, NumericalError
from .circuit import Circuit
from .states import StateVector, num_qubits_for

UNITARY_RTOL = 1e-10


def _walsh_hadamard(x: np.ndarray, num_bits: int) -> np.ndarray:
    """H^{(x) t} applied along axis 0 of a (2**t, D) array."""
    d = x.shape[1]
    y = x.reshape((2,) * num_bits + (d,))
    for ax in range(num_bits):
        a = np.take(y, 0, axis=ax)
        b = np.take(y, 1, axis=ax)
        y = np.stack([a + b, a - b], axis=ax) / np.sqrt(2.0)
    return y.reshape(2**num_bits, d)


def signed_phases(num_bits: int) -> np.ndarray:
    """Phase in (-pi, pi] encoded by each register value (two's complement)."""
    k = np.arange(2**num_bits)
    k = np.where(k > 2 ** (num_bits - 1), k - 2**num_bits, k)
    return 2 * np.pi * k / 2**num_bits


class PhaseEstimation:
    """Phase estimation with a ``num_bits``-qubit register for a fixed unitary.

    The eigendecomposition of ``u`` is computed once, so the same instance
    can run many forward/inverse passes cheaply.
    """

    def __init__(self, u, num_bits: int):
        u = np.asarray(u, dtype=np.complex128)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise DimensionError("phase estimation needs a square unitary")
        if num_bits < 1:
            raise ValueError("num_bits must be >= 1")
        d = u.shape[0]
        num_qubits_for(d)
        num_qubits_for(d * 2**num_bits)
        err = np.linalg.norm(u.conj().T @ u - np.eye(d))
        if err > UNITARY_RTOL * np.sqrt(d):
            raise NotUnitaryError(f"||U^H U - I||_F = {err:.3e}")
        t, z = la.schur(u, output="complex")
        lam = np.diag(t).copy()
        resid = np.linalg.norm(u @ z - z * lam)
        if resid > 1e-8 * np.sqrt(d):
            raise NumericalError(f"unitary eigendecomposition residual {resid:.3e}")
        self.num_bits = num_bits
        self.dim = d
        self.eigenvectors = z
        self.eigenphases = np.mod(np.angle(lam) / (2 * np.pi), 1.0)  # fractions of a turn
        self._power_table: np.ndarray | None = None

    @property
    def register_size(self) -> int:
        return 2**self.num_bits

    def _powers(self) -> np.ndarray:
        if self._power_table is None:
            x = np.arange(self.register_size)[:, None]
            self._power_table = np.exp(2j * np.pi * x * self.eigenphases[None, :])
        return self._power_table

    def to_eigenbasis(self, x: np.ndarray) -> np.ndarray:
        """System coordinates (last axis) -> eigenbasis coordinates."""
        return x @ self.eigenvectors.conj()

    def from_eigenbasis(self, x: np.ndarray) -> np.ndarray:
        return x @ self.eigenvectors.T

    def forward_eigen(self, coeff: np.ndarray) -> np.ndarray:
        """Forward pass with the system written in the eigenbasis of U on both ends.

        Operations that act on the phase register alone commute with a change
        of system basis, so they can be applied to this array directly.
        """
        coeff = np.asarray(coeff, dtype=np.complex128).reshape(-1)
        if coeff.size != self.dim:
            raise DimensionError(f"system state has length {coeff.size}, unitary is {self.dim}")
        n = self.register_size
        joint = self._powers() * coeff[None, :] / np.sqrt(n)
        return np.fft.fft(joint, axis=0) / np.sqrt(n)

    def inverse_eigen(self, joint: np.ndarray) -> np.ndarray:
        joint = np.asarray(joint, dtype=np.complex128)
        if joint.shape != (self.register_size, self.dim):
            raise DimensionError(f"joint state must have shape {(self.register_size, self.dim)}")
        e = np.fft.ifft(joint, axis=0) * np.sqrt(self.register_size)
        e = e * self._powers().conj()
        return _walsh_hadamard(e, self.num_bits)

    def inverse_eigen_zero(self, joint: np.ndarray) -> np.ndarray:
        """Register-|0> slice of :meth:`inverse_eigen`, without the full transform."""
        joint = np.asarray(joint, dtype=np.complex128)
        if joint.shape != (self.register_size, self.dim):
            raise DimensionError(f"joint state must have shape {(self.register_size, self.dim)}")
        e = np.fft.ifft(joint, axis=0)
        return np.einsum("xd,xd->d", self._powers().conj(), e)

    def forward(self, system) -> np.ndarray:
        """|0>|psi>  ->  QFT^dagger . ctrl-U^x . H^t  |0>|psi>, as a (2**t, D) array."""
        psi = np.asarray(system.amplitudes if isinstance(system, StateVector) else system,
                         dtype=np.complex128).reshape(-1)
        if psi.size != self.dim:
            raise DimensionError(f"system state has length {psi.size}, unitary is {self.dim}")
        return self.from_eigenbasis(self.forward_eigen(self.to_eigenbasis(psi)))

    def inverse(self, joint: np.ndarray) -> np.ndarray:
        """Exact inverse of :meth:`forward` extended to arbitrary register states."""
        joint = np.asarray(joint, dtype=np.complex128)
        if joint.shape != (self.register_size, self.dim):
            raise DimensionError(f"joint state must have shape {(self.register_size, self.dim)}")
        return self.from_eigenbasis(self.inverse_eigen(self.to_eigenbasis(joint)))


def phase_estimation(u, state: StateVector, num_bits: int) -> StateVector:
    """Phase register (``num_bits`` qubits, most significant) entangled with the system."""
    pe = PhaseEstimation(u, num_bits)
    return StateVector(pe.forward(state).reshape(-1))


def inverse_phase_estimation(u, state: StateVector, num_bits: int) -> StateVector:
    pe = PhaseEstimation(u, num_bits)
    return StateVector(pe.inverse(state.amplitudes.reshape(pe.register_size, pe.dim)).reshape(-1))


def qft_circuit(num_bits: int) -> Circuit:
    """QFT |x> -> 2^{-t/2} sum_k exp(2 pi j x k / 2^t) |k>, qubit 0 most significant."""
    c = Circuit(num_bits)
    for i in range(num_bits):
        c.h(i)
        for j in range(i + 1, num_bits):
            c.gphase(2 * np.pi / 2 ** (j - i + 1), controls=(i, j))
    for i in range(num_bits // 2):
        c.swap(i, num_bits - 1 - i)
    return c


def phase_estimation_circuit(u, num_bits: int) -> Circuit:
    """Gate-level phase estimation: H layer, controlled U^(2^j), inverse QFT."""
    u = np.asarray(u, dtype=np.complex128)
    n_sys = num_qubits_for(u.shape[0])
    c = Circuit(num_bits + n_sys)
    for q in range(num_bits):
        c.h(q)
    power = u
    sys_qubits = tuple(range(num_bits, num_bits + n_sys))
    for j in range(num_bits):
        c.unitary(power, sys_qubits, controls=(num_bits - 1 - j,))
        power = power @ power
    c.extend(qft_circuit(num_bits).inverse())
    return c
