"""Covariance reconstruction from beam-sweep powers.

Three paths produce the vectorized covariance estimate ``r_hat``:

* ``classical``: regularized least squares.
* ``spectral-emulation``: the filtered quantum state computed from an
  explicit SVD, followed by an oracle singular-vector transition.
* ``circuit``: singular-value estimation and the singular-vector transition
  both run as phase estimation on the dense walk unitary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from ..array_signal import BeamSweepObservation
from ..errors import DimensionError, NumericalError
from ..numerics import as_matrix, fidelity, numerical_rank, svd, unvec
from ..qsim.measure import partial_trace
from ..qsim.phase import signed_phases
from ..qsim.states import DensityMatrix, StateVector
from .regularization import RegularizationConfig, ResolvedRegularization, resolve_regularization
from .walk import walk_operator_for

SPAN_TOL = 1e-8
NORM_TOL = 1e-10
PATHS = ("classical", "spectral-emulation", "circuit")


@dataclass(frozen=True)
class TransitionReport:
    fidelity: float
    phase_bits: int
    walk_operator_dim: int
    postselection_probability: float = 1.0


@dataclass(frozen=True)
class FilterResult:
    state: np.ndarray  # over the M^2 index space
    left_state: np.ndarray  # same amplitudes on the left singular vectors
    success_probability: float
    discarded_norm: float
    success_constant: float


@dataclass(frozen=True)
class ReconResult:
    r_hat: np.ndarray
    r_hat_matrix: np.ndarray
    rho: DensityMatrix
    success_probability: float
    path: str
    transition: TransitionReport | None = None
    fidelity_to_classical: float | None = None

    def __post_init__(self):
        if self.path not in PATHS:
            raise ValueError(f"unknown path {self.path!r}")


def _hermitian_part(x: np.ndarray) -> np.ndarray:
    return (x + x.conj().T) / 2


def _rows(obs: BeamSweepObservation) -> int:
    m = obs.num_elements
    if m * m != obs.a_matrix.shape[1]:
        raise DimensionError(f"A has {obs.a_matrix.shape[1]} columns, not a square count")
    return m


def _normalized_powers(obs: BeamSweepObservation) -> np.ndarray:
    p = obs.powers.astype(np.complex128)
    norm = np.linalg.norm(p)
    if norm == 0:
        raise NumericalError("beam powers are all zero")
    return p / norm


def classical_solution(a, p, loading: float) -> np.ndarray:
    """argmin ||A x - p||^2 + loading ||x||^2 via the stacked least-squares system."""
    if not loading > 0:
        raise ValueError("diagonal loading must be strictly positive")
    a = as_matrix(a)
    p = np.asarray(p, dtype=np.complex128).reshape(-1)
    k = a.shape[1]
    stacked = np.vstack([a, np.sqrt(loading) * np.eye(k)])
    rhs = np.concatenate([p, np.zeros(k, dtype=np.complex128)])
    x, *_ = la.lstsq(stacked, rhs)
    return x


def _result(r_hat: np.ndarray, m: int, success: float, path: str, **extra) -> ReconResult:
    x = _hermitian_part(unvec(r_hat, m))
    return ReconResult(
        r_hat=r_hat,
        r_hat_matrix=x,
        rho=schmidt_to_density(r_hat / np.linalg.norm(r_hat)),
        success_probability=float(success),
        path=path,
        **extra,
    )


def reconstruct_classical(obs: BeamSweepObservation, cfg: RegularizationConfig | None = None) -> ReconResult:
    cfg = cfg or RegularizationConfig()
    m = _rows(obs)
    res = resolve_regularization(obs.a_matrix, cfg)
    r_hat = classical_solution(obs.a_matrix, obs.powers, res.loading)
    if not np.any(r_hat):
        raise NumericalError("reconstruction is identically zero")
    return _result(r_hat, m, 1.0, "classical")


def singular_filter_state(obs: BeamSweepObservation, cfg: RegularizationConfig | None = None) -> FilterResult:
    """Filtered state sum_i alpha_i h(sigma_i) |v_i>, computed from an explicit SVD."""
    cfg = cfg or RegularizationConfig()
    res = resolve_regularization(obs.a_matrix, cfg)
    p = _normalized_powers(obs)
    dec = svd(obs.a_matrix).truncated()
    alpha = dec.left.conj().T @ p
    discarded = float(np.linalg.norm(p - dec.left @ alpha))
    amp = res.success_constant * res.filter(dec.singular_values) * alpha
    success = float(np.vdot(amp, amp).real)
    if success <= 0:
        raise NumericalError("powers have no component in the range of A")
    amp = amp / np.sqrt(success)
    return FilterResult(
        state=dec.right @ amp,
        left_state=dec.left @ amp,
        success_probability=success,
        discarded_norm=discarded,
        success_constant=res.success_constant,
    )


def qsve_filter_circuit(
    a, powers, res: ResolvedRegularization
) -> tuple[np.ndarray, float]:
    """Singular-value filter by phase estimation on W, returning a state on the left space.

    |P> is loaded as M|P>, the phase register is rotated into the label qubit
    with amplitude C h(sigma~) where sigma~ = ||A||_F cos(chi~/2), phase
    estimation is undone, and the label and register are both post-selected on
    |0>. The second value is the product of those two probabilities.
    """
    op = walk_operator_for(a)
    pe = op.phase_estimation(res.phase_bits)
    p = np.asarray(powers, dtype=np.complex128).reshape(-1)
    p = p / np.linalg.norm(p)
    chi = signed_phases(res.phase_bits)
    sigma_est = op.frobenius * np.cos(chi / 2)
    label0 = res.rotation_amplitude(np.clip(sigma_est, 0.0, None))
    joint = pe.forward_eigen(pe.to_eigenbasis(op.embed_left(p)))
    joint *= label0[:, None]
    p_label = float(np.vdot(joint, joint).real)
    if p_label <= 0:
        raise NumericalError("filter rotation left no amplitude on the |0> label")
    back = pe.inverse_eigen_zero(joint)
    p_reg = float(np.vdot(back, back).real) / p_label
    psi = pe.from_eigenbasis(back)
    y = op.m.conj().T @ psi
    norm = np.linalg.norm(y)
    if norm == 0:
        raise NumericalError("filtered state vanished")
    return y / norm, p_label * p_reg


def _check_left_support(a: np.ndarray, state: np.ndarray) -> None:
    dec = svd(a).truncated()
    outside = state - dec.left @ (dec.left.conj().T @ state)
    if np.linalg.norm(outside) > SPAN_TOL:
        raise ValueError(
            f"state has norm {np.linalg.norm(outside):.2e} outside the left singular subspace"
        )


def transition_oracle(a, state) -> np.ndarray:
    dec = svd(a).truncated()
    return dec.right @ (dec.left.conj().T @ state)


def transition_circuit(a, state, num_bits: int) -> tuple[np.ndarray, float]:
    """sum b_i |u_i> -> sum b_i |v_i> through phase estimation on W.

    On the invariant plane of pair i, W rotates M|u_i> towards N|v_i> by chi_i
    and N|v_i> sits at chi_i/2, so each register branch reading the signed
    phase chi~ is multiplied by exp(+j chi~/2) (a square root of W) before the
    estimation is undone. U_N^H then returns the row register to |0>.
    """
    op = walk_operator_for(a)
    pe = op.phase_estimation(num_bits)
    joint = pe.forward_eigen(pe.to_eigenbasis(op.embed_left(state)))
    joint *= np.exp(0.5j * signed_phases(num_bits))[:, None]
    back = pe.from_eigenbasis(pe.inverse_eigen_zero(joint))
    p_reg = float(np.vdot(back, back).real)
    out, p_row = op.unprepare_right(back)
    return out, p_reg * p_row


def singular_vector_transition(
    a, state, mode: str = "oracle", cfg: RegularizationConfig | None = None
) -> tuple[np.ndarray, TransitionReport]:
    a = as_matrix(a)
    if numerical_rank(svd(a).singular_values) < 1:
        raise ValueError("transition needs a matrix of rank >= 1")
    state = np.asarray(state, dtype=np.complex128).reshape(-1)
    if state.size != a.shape[0]:
        raise DimensionError(f"state has length {state.size}, A has {a.shape[0]} rows")
    if abs(np.linalg.norm(state) - 1.0) > NORM_TOL:
        raise ValueError("input state must be normalized")
    _check_left_support(a, state)
    reference = transition_oracle(a, state)
    if mode == "oracle":
        return reference, TransitionReport(1.0, 0, a.shape[1], 1.0)
    if mode != "circuit":
        raise ValueError(f"unknown transition mode {mode!r}")
    cfg = cfg or RegularizationConfig()
    out, prob = transition_circuit(a, state, cfg.phase_bits)
    norm = np.linalg.norm(out)
    if norm == 0:
        raise NumericalError("transition output vanished")
    out = out / norm
    fid = min(1.0, fidelity(out, reference))
    return out, TransitionReport(fid, cfg.phase_bits, walk_operator_for(a).dim, prob)


def _align_phase(r_hat: np.ndarray, m: int) -> np.ndarray:
    """Fix the global phase so that tr(unvec(r_hat)) is real and positive."""
    tr = np.trace(unvec(r_hat, m))
    if abs(tr) < 1e-14:
        k = int(np.argmax(np.abs(r_hat)))
        return r_hat * np.exp(-1j * np.angle(r_hat[k]))
    return r_hat * np.exp(-1j * np.angle(tr))


def reconstruct_quantum(
    obs: BeamSweepObservation, cfg: RegularizationConfig | None = None, mode: str = "spectral"
) -> ReconResult:
    """Normalized |r_hat> from the quantum procedure, compared with the classical one."""
    cfg = cfg or RegularizationConfig()
    m = _rows(obs)
    res = resolve_regularization(obs.a_matrix, cfg)
    classical = classical_solution(obs.a_matrix, obs.powers, res.loading)
    report = None
    if mode in ("spectral", "spectral-emulation"):
        filt = singular_filter_state(obs, cfg)
        state, _ = singular_vector_transition(obs.a_matrix, filt.left_state, "oracle")
        success, path = filt.success_probability, "spectral-emulation"
    elif mode == "circuit":
        left, p_filter = qsve_filter_circuit(obs.a_matrix, _normalized_powers(obs), res)
        state, report = singular_vector_transition(obs.a_matrix, left, "circuit", cfg)
        success, path = p_filter * report.postselection_probability, "circuit"
    else:
        raise ValueError(f"unknown reconstruction mode {mode!r}")
    state = _align_phase(state / np.linalg.norm(state), m)
    return _result(
        state, m, success, path, transition=report, fidelity_to_classical=fidelity(state, classical)
    )


def schmidt_to_density(r_state) -> DensityMatrix:
    """rho = X X^H with X = unvec(r), i.e. the first factor of |r> after tracing out the second.

    ``vec`` puts the column index in the high-order register, so the kept
    register is the low-order half of the qubits. Both routes are evaluated
    and must agree.
    """
    r = np.asarray(r_state, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(r) - 1.0) > NORM_TOL:
        raise ValueError("state must be normalized")
    m = int(round(np.sqrt(r.size)))
    if m * m != r.size:
        raise DimensionError(f"length {r.size} is not a square")
    x = unvec(r, m)
    direct = x @ x.conj().T
    sv = StateVector(r)
    n = sv.num_qubits // 2
    traced = partial_trace(sv, range(n, 2 * n)).matrix
    if np.linalg.norm(direct - traced) > 1e-10:
        raise NumericalError("partial trace and X X^H disagree")
    return DensityMatrix(_hermitian_part(direct))
