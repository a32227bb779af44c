"""Reduced states, sampling, and the destructive swap test."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from ..errors import DimensionError
from .circuit import Circuit
from .states import DensityMatrix, ShotEstimate, StateVector


def partial_trace(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the qubits in ``keep`` (in that order)."""
    n = state.num_qubits
    keep = [int(q) for q in keep]
    if len(set(keep)) != len(keep) or any(not 0 <= q < n for q in keep):
        raise DimensionError(f"bad subsystem {keep} for a {n}-qubit state")
    t = state.amplitudes.reshape((2,) * n)
    traced = [q for q in range(n) if q not in keep]
    x = np.transpose(t, keep + traced).reshape(2 ** len(keep), 2 ** len(traced))
    rho = x @ x.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def sample_counts(probabilities, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial outcome counts for ``shots`` measurements."""
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def swap_test_circuit(num_qubits: int) -> Circuit:
    """Pairwise CNOT then H on the first register, for two ``num_qubits`` registers."""
    c = Circuit(2 * num_qubits)
    for i in range(num_qubits):
        c.cnot(i, num_qubits + i)
        c.h(i)
    return c


def swap_test_parity(num_qubits: int) -> np.ndarray:
    """Per-outcome estimator values prod_i (-1)^(a_i b_i) over all 2n-bit outcomes."""
    outcomes = np.arange(2 ** (2 * num_qubits))
    a = outcomes >> num_qubits
    b = outcomes & ((1 << num_qubits) - 1)
    ones = np.array([bin(int(x)).count("1") for x in (a & b)])
    return np.where(ones % 2, -1.0, 1.0)


def destructive_swap_test(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    shots: int | None = None,
    seed: int | np.random.Generator | None = None,
) -> ShotEstimate:
    """Estimate tr(rho sigma).

    With ``shots=None`` the trace is returned exactly. Otherwise the swap-test
    circuit is applied to ``rho (x) sigma``, every qubit is measured ``shots``
    times, and each shot contributes the parity of the pairwise AND of the
    two registers' bits.
    """
    if rho.dim != sigma.dim:
        raise DimensionError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    if shots is None:
        value = float(np.real(np.vdot(rho.matrix.conj().T, sigma.matrix)))
        return ShotEstimate(value, None, 0.0)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = rho.num_qubits
    u = swap_test_circuit(n).to_matrix()
    joint = np.kron(rho.matrix, sigma.matrix)
    probs = np.einsum("ij,jk,ik->i", u, joint, u.conj()).real
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = sample_counts(probs, shots, rng)
    parity = swap_test_parity(n)
    mean = float(counts @ parity / shots)
    if shots > 1:
        var = float(counts @ (parity - mean) ** 2 / (shots - 1))
        err = np.sqrt(var / shots)
    else:
        err = 0.0
    return ShotEstimate(mean, shots, float(err))
