import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmusic.array_signal import ArrayConfig, BeamSweepPlan, build_a_matrix, steering_vector
from qmusic.errors import DimensionError, NotUnitaryError, NumericalError
from qmusic.qsim import (
    Circuit,
    DensityMatrix,
    PhaseEstimation,
    StateVector,
    destructive_swap_test,
    inverse_phase_estimation,
    partial_trace,
    phase_estimation,
    phase_estimation_circuit,
    prepare_amplitude_state,
    prepare_row_state,
    prepare_steering_state,
    run_circuit,
    ry_matrix,
    rz_matrix,
    signed_phases,
)

from conftest import random_complex, random_density, random_unitary

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]])
I2 = np.eye(2)


def op_on(n, q, u):
    mats = [u if k == q else I2 for k in range(n)]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def cnot_dense(n, c, t):
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    return op_on(n, c, p0) + op_on(n, c, p1) @ op_on(n, t, X)


def test_empty_circuit_is_identity(rng):
    v = random_complex(rng, 8)
    s = StateVector(v / np.linalg.norm(v))
    np.testing.assert_allclose(run_circuit(Circuit(3), s).amplitudes, s.amplitudes)


def test_hadamard_on_zero():
    out = run_circuit(Circuit(1).h(0), StateVector.basis(1))
    np.testing.assert_allclose(out.amplitudes, [1 / np.sqrt(2)] * 2)


def test_random_circuit_against_kronecker_oracle(rng):
    n = 3
    c = Circuit(n)
    dense = np.eye(8, dtype=complex)
    for _ in range(25):
        kind = rng.integers(4)
        q = int(rng.integers(n))
        if kind == 0:
            c.h(q)
            g = op_on(n, q, H)
        elif kind == 1:
            b = rng.uniform(0, 2 * np.pi)
            c.ry(q, b)
            g = op_on(n, q, ry_matrix(b))
        elif kind == 2:
            b = rng.uniform(0, 2 * np.pi)
            c.rz(q, b)
            g = op_on(n, q, rz_matrix(b))
        else:
            t = int((q + 1 + rng.integers(n - 1)) % n)
            c.cnot(q, t)
            g = cnot_dense(n, q, t)
        dense = g @ dense
    psi = random_complex(rng, 8)
    psi /= np.linalg.norm(psi)
    out = run_circuit(c, StateVector(psi))
    np.testing.assert_allclose(out.amplitudes, dense @ psi, atol=1e-12)
    np.testing.assert_allclose(c.to_matrix(), dense, atol=1e-12)
    assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-10)


def test_circuit_inverse(rng):
    c = Circuit(2).h(0).ry(1, 0.3).cnot(0, 1).rz(0, 1.1).cz(0, 1)
    np.testing.assert_allclose(c.inverse().to_matrix() @ c.to_matrix(), np.eye(4), atol=1e-12)


def test_gate_index_out_of_range():
    with pytest.raises(DimensionError):
        Circuit(2).h(5)


def test_unitary_gate_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        Circuit(1).unitary(np.array([[1, 1], [0, 1]]), (0,))


def test_state_validation():
    with pytest.raises(NumericalError):
        StateVector(np.array([1.0, 1.0]))
    with pytest.raises(DimensionError):
        StateVector(np.ones(3) / np.sqrt(3))


def test_amplitude_state():
    np.testing.assert_allclose(prepare_amplitude_state(np.eye(8)[3]).amplitudes, np.eye(8)[3])
    np.testing.assert_allclose(prepare_amplitude_state(np.ones(4)).amplitudes, 0.5)
    with pytest.raises(NumericalError):
        prepare_amplitude_state(np.zeros(4))


def test_amplitude_state_normalizes(rng):
    v = random_complex(rng, 16)
    np.testing.assert_allclose(prepare_amplitude_state(v).amplitudes, v / np.linalg.norm(v), atol=1e-12)


def test_steering_state_examples():
    cfg = ArrayConfig(4)
    np.testing.assert_allclose(prepare_steering_state(cfg, 0.0).amplitudes, 0.5)
    np.testing.assert_allclose(prepare_steering_state(cfg, 30.0).amplitudes, 0.5 * np.array([1, -1j, -1, 1j]), atol=1e-14)


def test_steering_state_matches_vector(rng):
    cfg = ArrayConfig(8)
    for theta in rng.uniform(-89, 89, 50):
        amp = prepare_steering_state(cfg, theta).amplitudes
        assert abs(np.vdot(amp, steering_vector(cfg, theta) / np.sqrt(8))) >= 1 - 1e-10
        np.testing.assert_allclose(abs(amp), 1 / np.sqrt(8), atol=1e-12)


def test_row_state():
    cfg = ArrayConfig(4)
    plan = BeamSweepPlan((-50.0, 0.0, 21.0))
    np.testing.assert_allclose(prepare_row_state(plan, cfg, 1).amplitudes, 0.25)
    a = build_a_matrix(plan, cfg)
    for q in range(3):
        amp = prepare_row_state(plan, cfg, q).amplitudes
        assert abs(np.vdot(amp, a[q] / 4)) ** 2 >= 1 - 1e-10
        # second register carries the conjugate phases of the first
        grid = amp.reshape(4, 4) * 4
        np.testing.assert_allclose(grid[:, 0] / grid[0, 0], np.conj(grid[0, :] / grid[0, 0]), atol=1e-12)
    with pytest.raises(DimensionError):
        prepare_row_state(plan, cfg, 3)


def test_partial_trace_product_and_bell(rng):
    a, b = random_complex(rng, 2), random_complex(rng, 4)
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    rho = partial_trace(StateVector(np.kron(a, b)), [0])
    np.testing.assert_allclose(rho.matrix, np.outer(a, a.conj()), atol=1e-12)
    assert rho.purity() == pytest.approx(1.0)
    bell = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    np.testing.assert_allclose(partial_trace(bell, [1]).matrix, np.eye(2) / 2, atol=1e-15)


def test_partial_trace_loop_oracle(rng):
    psi = random_complex(rng, 32)
    psi /= np.linalg.norm(psi)
    t = psi.reshape(4, 8)  # qubits 0-1 kept, 2-4 traced
    loop = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            loop[i, j] = sum(t[i, k] * np.conj(t[j, k]) for k in range(8))
    np.testing.assert_allclose(partial_trace(StateVector(psi), [0, 1]).matrix, loop, atol=1e-12)
    with pytest.raises(DimensionError):
        partial_trace(StateVector(psi), [0, 0])
    with pytest.raises(DimensionError):
        partial_trace(StateVector(psi), [7])


def pure(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def test_swap_test_pure_and_orthogonal():
    p = pure([1, 1j, 0, 2])
    assert destructive_swap_test(p, p).value == pytest.approx(1.0)
    assert destructive_swap_test(pure([1, 0]), pure([0, 1])).value == pytest.approx(0.0)
    est = destructive_swap_test(pure([1, 0]), pure([0, 1]), shots=500, seed=1)
    assert abs(est.value) <= 4 * est.std_error


def test_swap_test_mixed_exact_and_sampled():
    mixed = DensityMatrix.maximally_mixed(1)
    sigma = pure([0.6, 0.8j])
    assert destructive_swap_test(mixed, sigma).value == pytest.approx(0.5)
    est = destructive_swap_test(mixed, sigma, shots=10_000, seed=3)
    assert abs(est.value - 0.5) <= 4 * est.std_error


def test_swap_test_symmetry_and_purity_bound(rng):
    for _ in range(10):
        r, s = DensityMatrix(random_density(rng, 8)), DensityMatrix(random_density(rng, 8))
        assert destructive_swap_test(r, s).value == pytest.approx(destructive_swap_test(s, r).value, abs=1e-14)
        assert destructive_swap_test(r, r).value <= 1 + 1e-12


def test_swap_test_sampled_matches_exact(rng):
    r, s = DensityMatrix(random_density(rng, 4)), DensityMatrix(random_density(rng, 4))
    exact = destructive_swap_test(r, s).value
    est = destructive_swap_test(r, s, shots=10_000, seed=9)
    assert abs(est.value - exact) <= 4 * est.std_error


def test_swap_test_error_shrinks_with_shots(rng):
    r, s = DensityMatrix(random_density(rng, 4)), DensityMatrix(random_density(rng, 4))
    errs = [destructive_swap_test(r, s, shots=n, seed=2).std_error for n in (10**2, 10**4, 10**6)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[2] == pytest.approx(100, rel=0.3)


def test_swap_test_errors():
    with pytest.raises(DimensionError):
        destructive_swap_test(pure([1, 0]), pure([1, 0, 0, 0]))
    with pytest.raises(ValueError):
        destructive_swap_test(pure([1, 0]), pure([1, 0]), shots=0)


def register_distribution(state: StateVector, t: int) -> np.ndarray:
    amp = state.amplitudes.reshape(2**t, -1)
    return np.sum(abs(amp) ** 2, axis=1)


def test_phase_estimation_z_on_one():
    out = phase_estimation(np.diag([1, -1]), StateVector.basis(1, 1), 3)
    p = register_distribution(out, 3)
    assert p[4] == pytest.approx(1.0)  # 0.100 in binary = 1/2 turn


def test_phase_estimation_identity_reads_zero(rng):
    psi = random_complex(rng, 4)
    out = phase_estimation(np.eye(4), StateVector(psi / np.linalg.norm(psi)), 4)
    assert register_distribution(out, 4)[0] == pytest.approx(1.0)


def test_phase_estimation_diagonal_eigenphases(rng):
    t = 10
    phases = rng.uniform(0, 1, 4)
    u = np.diag(np.exp(2j * np.pi * phases))
    for k in range(4):
        p = register_distribution(phase_estimation(u, StateVector.basis(2, k), t), t)
        est = np.argmax(p) / 2**t
        err = min(abs(est - phases[k]), 1 - abs(est - phases[k]))
        assert err <= 2**-t


def test_phase_estimation_inverse_roundtrip(rng):
    u = random_unitary(rng, 8)
    psi = random_complex(rng, 8)
    s = StateVector(psi / np.linalg.norm(psi))
    back = inverse_phase_estimation(u, phase_estimation(u, s, 5), 5)
    expected = np.zeros(32 * 8, dtype=complex)
    expected[:8] = s.amplitudes
    np.testing.assert_allclose(back.amplitudes, expected, atol=1e-10)


def test_eigenbasis_simulation_matches_gate_circuit(rng):
    u = random_unitary(rng, 4)
    t = 4
    psi = random_complex(rng, 4)
    psi /= np.linalg.norm(psi)
    full = np.zeros(2**t * 4, dtype=complex)
    full[:4] = psi
    gate_level = phase_estimation_circuit(u, t).to_matrix() @ full
    np.testing.assert_allclose(phase_estimation(u, StateVector(psi), t).amplitudes, gate_level, atol=1e-12)


def test_inverse_zero_slice_matches_full_inverse(rng):
    u = random_unitary(rng, 8)
    pe = PhaseEstimation(u, 6)
    joint = random_complex(rng, 64, 8)
    eig = pe.to_eigenbasis(joint)
    np.testing.assert_allclose(pe.inverse_eigen_zero(eig), pe.inverse_eigen(eig)[0], atol=1e-12)


def test_phase_estimation_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        phase_estimation(np.array([[1, 1], [0, 1]]), StateVector.basis(1), 2)


def test_signed_phases():
    np.testing.assert_allclose(signed_phases(2), [0, np.pi / 2, np.pi, -np.pi / 2])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_gates_preserve_norm(seed, n):
    g = np.random.default_rng(seed)
    c = Circuit(n)
    for q in range(n):
        c.ry(q, g.uniform(0, 6)).rz(q, g.uniform(0, 6))
    for q in range(n - 1):
        c.cnot(q, q + 1)
    psi = random_complex(g, 2**n)
    out = run_circuit(c, StateVector(psi / np.linalg.norm(psi)))
    assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-10)
