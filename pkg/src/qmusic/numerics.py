"""Dense complex linear algebra shared by every stage of the pipeline.

Conventions:
    * ``vec`` stacks columns (column-major), so ``vec(A)[i + rows*j] == A[i, j]``.
    * Singular values below ``RANK_RTOL * sigma_max`` count as zero.
    * Tolerances are relative to the Frobenius norm of the input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DimensionError, NotHermitianError, NumericalError

RANK_RTOL = 1e-12
HERMITIAN_RTOL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class SVDResult:
    """Full SVD; only the first ``len(singular_values)`` columns of each basis are paired."""

    left: np.ndarray  # columns u_i
    singular_values: np.ndarray  # descending
    right: np.ndarray  # columns v_i

    @property
    def rank(self) -> int:
        return numerical_rank(self.singular_values)

    def truncated(self) -> "SVDResult":
        """Economy decomposition restricted to the nonzero singular values."""
        r = self.rank
        return SVDResult(self.left[:, :r], self.singular_values[:r], self.right[:, :r])

    def reconstruct(self) -> np.ndarray:
        k = self.singular_values.size
        return (self.left[:, :k] * self.singular_values) @ self.right[:, :k].conj().T


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # orthonormal columns


def kron(a, b) -> np.ndarray:
    """Kronecker product; entry (i*b.rows + k, j*b.cols + l) = a[i, j] * b[k, l]."""
    return np.kron(as_matrix(a), as_matrix(b))


def vec(a) -> np.ndarray:
    return as_matrix(a).reshape(-1, order="F")


def unvec(v, rows: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if rows < 1 or v.size % rows:
        raise DimensionError(f"length {v.size} is not divisible by rows={rows}")
    return v.reshape(rows, v.size // rows, order="F")


def numerical_rank(singular_values: np.ndarray) -> int:
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > RANK_RTOL * s[0]))


def svd(a) -> SVDResult:
    """Full SVD, ``a = U diag(s) V^H`` with ``s`` descending."""
    m = as_matrix(a)
    try:
        u, s, vh = la.svd(m, full_matrices=True, lapack_driver="gesdd")
    except la.LinAlgError:
        try:
            u, s, vh = la.svd(m, full_matrices=True, lapack_driver="gesvd")
        except la.LinAlgError as exc:
            raise NumericalError(f"SVD did not converge: {exc}") from exc
    return SVDResult(u, s, vh.conj().T)


def is_hermitian(h, rtol: float = HERMITIAN_RTOL) -> bool:
    m = as_matrix(h)
    if m.shape[0] != m.shape[1]:
        return False
    scale = max(np.linalg.norm(m), 1.0)
    return bool(np.linalg.norm(m - m.conj().T) <= rtol * scale)


def hermitian_eig(h) -> EigResult:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending."""
    m = as_matrix(h)
    if not is_hermitian(m):
        raise NotHermitianError("hermitian_eig requires a Hermitian matrix")
    w, v = la.eigh((m + m.conj().T) / 2)
    order = np.argsort(w)[::-1]
    return EigResult(w[order], v[:, order])


def condition_number(a) -> float:
    """sigma_max / sigma_min over the nonzero singular values."""
    s = la.svdvals(as_matrix(a))
    r = numerical_rank(s)
    if r == 0:
        raise NumericalError("condition number of a zero matrix is undefined")
    return float(s[0] / s[r - 1])


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    n = np.linalg.norm(v)
    if n == 0:
        raise NumericalError("cannot normalize a zero vector")
    return v / n


def fidelity(a, b) -> float:
    """|<a|b>|^2 between two vectors after normalizing both."""
    return float(abs(np.vdot(normalize(a), normalize(b))) ** 2)


def phase_aligned_distance(estimate, reference) -> float:
    """min over global phase of || e^{j phi} estimate - reference || for unit vectors."""
    x, y = normalize(estimate), normalize(reference)
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * abs(np.vdot(x, y)))))
