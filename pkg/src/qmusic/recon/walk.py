"""Isometries M, N and the walk unitary W = (2NN^H - I)(2MM^H - I).

Both isometries map into a row register of ``Qp = 2**ceil(log2 Q)`` levels
(most significant) times a column register of ``Kp`` levels::

    M |i> = |i> |conj(A_i)> / ||A_i||        N |j> = |n> |j>,  n_i = ||A_i|| / ||A||_F

so that ``M^H N = A / ||A||_F``. On the padded levels outside
``range(M) + range(N)`` both reflections act as ``-I`` and W as the identity.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, NumericalError
from ..numerics import as_matrix, numerical_rank, svd
from ..qsim.phase import PhaseEstimation
from ..qsim.states import num_qubits_for

# Dense W plus its Schur form; 2048 levels already takes ~15 s to decompose.
MAX_WALK_DIM = 2048


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def householder_prep(target: np.ndarray) -> np.ndarray:
    """Hermitian unitary H with ``H e_0 = target`` for a real unit ``target``."""
    n = np.asarray(target, dtype=float).reshape(-1)
    w = -n.astype(np.complex128)
    w[0] += 1.0
    nw = np.vdot(w, w).real
    h = np.eye(n.size, dtype=np.complex128)
    if nw < 1e-30:
        return h
    return h - 2.0 * np.outer(w, w.conj()) / nw


@dataclass(frozen=True)
class InvariantPlane:
    """Orthonormal pair spanning {M u_i, N v_i} and W restricted to it."""

    first: np.ndarray   # M u_i
    second: np.ndarray  # Gram-Schmidt remainder of N v_i
    restriction: np.ndarray  # 2x2, columns = images of (first, second)
    sigma: float


class WalkOperator:
    def __init__(self, a):
        a = as_matrix(a)
        q, k = a.shape
        self.a = a
        self.rows, self.cols = q, k
        self.row_dim, self.col_dim = next_pow2(q), next_pow2(k)
        self.dim = self.row_dim * self.col_dim
        num_qubits_for(self.dim)
        if self.dim > MAX_WALK_DIM:
            raise DimensionError(f"walk operator needs {self.dim} levels, above the dense limit {MAX_WALK_DIM}")
        self.frobenius = float(np.linalg.norm(a))
        if self.frobenius == 0:
            raise NumericalError("walk operator of a zero matrix")
        self.row_norms = np.linalg.norm(a, axis=1)

        m = np.zeros((self.row_dim, self.col_dim, q), dtype=np.complex128)
        for i in range(q):
            if self.row_norms[i] > 0:
                m[i, :k, i] = a[i].conj() / self.row_norms[i]
            else:
                m[i, 0, i] = 1.0
        self.m = m.reshape(self.dim, q)

        n_state = np.zeros(self.row_dim)
        n_state[:q] = self.row_norms / self.frobenius
        self.row_state = n_state
        nn = np.zeros((self.row_dim, self.col_dim, k), dtype=np.complex128)
        nn[:, np.arange(k), np.arange(k)] = n_state[:, None]
        self.n = nn.reshape(self.dim, k)

        eye = np.eye(self.dim, dtype=np.complex128)
        refl_m = 2.0 * self.m @ self.m.conj().T - eye
        refl_n = 2.0 * self.n @ self.n.conj().T - eye
        self.matrix = refl_n @ refl_m
        self._pe: dict[int, PhaseEstimation] = {}

    @property
    def num_qubits(self) -> int:
        return num_qubits_for(self.dim)

    def row_preparation(self) -> np.ndarray:
        """U_N on the row register: maps |0> to |n>."""
        return householder_prep(self.row_state)

    def phase_estimation(self, num_bits: int) -> PhaseEstimation:
        if num_bits not in self._pe:
            self._pe[num_bits] = PhaseEstimation(self.matrix, num_bits)
        return self._pe[num_bits]

    def embed_left(self, u: np.ndarray) -> np.ndarray:
        """M |u> for u in C^Q."""
        u = np.asarray(u, dtype=np.complex128).reshape(-1)
        if u.size != self.rows:
            raise DimensionError(f"expected length {self.rows}, got {u.size}")
        return self.m @ u

    def unprepare_right(self, psi: np.ndarray) -> tuple[np.ndarray, float]:
        """Apply U_N^H to the row register and keep the row-|0> slice.

        Returns the column-register vector (length K) and the probability of
        finding the row register in |0>.
        """
        x = np.asarray(psi, dtype=np.complex128).reshape(self.row_dim, self.col_dim)
        x = self.row_preparation().conj().T @ x
        out = x[0]
        prob = float(np.vdot(out, out).real)
        return out[: self.cols], prob

    def invariant_plane(self, u: np.ndarray, v: np.ndarray, sigma: float) -> InvariantPlane:
        first = self.m @ u
        nv = self.n @ v
        rem = nv - np.vdot(first, nv) * first
        norm = np.linalg.norm(rem)
        if norm < 1e-14:
            raise NumericalError("N v and M u are parallel; the plane is degenerate")
        second = rem / norm
        basis = np.stack([first, second], axis=1)
        restriction = basis.conj().T @ self.matrix @ basis
        return InvariantPlane(first, second, restriction, float(sigma))

    def invariant_planes(self) -> list[InvariantPlane]:
        dec = svd(self.a)
        r = numerical_rank(dec.singular_values)
        return [
            self.invariant_plane(dec.left[:, i], dec.right[:, i], dec.singular_values[i])
            for i in range(r)
            if dec.singular_values[i] < self.frobenius * (1 - 1e-12)
        ]


_CACHE: OrderedDict[tuple, WalkOperator] = OrderedDict()
_CACHE_SIZE = 4


def walk_operator_for(a) -> WalkOperator:
    """Cached :class:`WalkOperator`; W depends only on A, so repeated runs reuse it."""
    a = as_matrix(a)
    key = (a.shape, a.tobytes())
    op = _CACHE.get(key)
    if op is None:
        op = WalkOperator(a)
        _CACHE[key] = op
        while len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    else:
        _CACHE.move_to_end(key)
    return op
