import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qmusic.errors import DimensionError, NotHermitianError, NumericalError
from qmusic.numerics import (
    condition_number,
    fidelity,
    hermitian_eig,
    kron,
    numerical_rank,
    svd,
    unvec,
    vec,
)

from conftest import random_complex


def kron_loop(a, b):
    (p, q), (r, s) = a.shape, b.shape
    out = np.zeros((p * r, q * s), dtype=complex)
    for i in range(p):
        for j in range(q):
            for k in range(r):
                for l in range(s):
                    out[i * r + k, j * s + l] = a[i, j] * b[k, l]
    return out


def test_kron_identity():
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_vectors():
    out = kron(np.array([1, 1j]), np.array([1, -1j]))
    np.testing.assert_allclose(out.ravel(), [1, -1j, 1j, 1])


def test_kron_matches_loop(rng):
    a, b = random_complex(rng, 3, 2), random_complex(rng, 2, 2)
    np.testing.assert_allclose(kron(a, b), kron_loop(a, b), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_kron_loop_property(p, q, r, s, seed):
    g = np.random.default_rng(seed)
    a, b = random_complex(g, p, q), random_complex(g, r, s)
    np.testing.assert_allclose(kron(a, b), kron_loop(a, b), atol=1e-12)


def test_vec_is_column_major():
    np.testing.assert_array_equal(vec([[1, 3], [2, 4]]), [1, 2, 3, 4])


@pytest.mark.parametrize("shape", [(3, 3), (2, 5), (6, 1)])
def test_unvec_roundtrip(rng, shape):
    a = random_complex(rng, *shape)
    np.testing.assert_array_equal(unvec(vec(a), shape[0]), a)


@given(arrays(np.complex128, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)))
def test_vec_unvec_property(a):
    np.testing.assert_array_equal(unvec(vec(a), a.shape[0]), a)


def test_unvec_rejects_bad_length():
    with pytest.raises(DimensionError):
        unvec(np.ones(5), 2)


def test_vec_of_outer_product_against_svd(rng):
    # column-major vec(x y^T) = y (x) x; the SVD of the rank-1 matrix gives the same vector
    x, y = random_complex(rng, 3), random_complex(rng, 4)
    m = np.outer(x, y)
    dec = svd(m)
    expected = dec.singular_values[0] * np.kron(dec.right[:, 0].conj(), dec.left[:, 0])
    np.testing.assert_allclose(vec(m), expected, atol=1e-12)
    np.testing.assert_allclose(vec(m), np.kron(y, x), atol=1e-12)


def test_svd_identity_and_diagonal():
    np.testing.assert_allclose(svd(np.eye(3)).singular_values, [1, 1, 1])
    dec = svd(np.diag([3.0, 2.0, 1.0]))
    np.testing.assert_allclose(dec.singular_values, [3, 2, 1])
    np.testing.assert_allclose(abs(dec.left), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(abs(dec.right), np.eye(3), atol=1e-15)


def test_svd_reconstruction_and_pairing(rng):
    a = random_complex(rng, 4, 9)
    dec = svd(a)
    assert np.linalg.norm(dec.reconstruct() - a) <= 1e-10 * np.linalg.norm(a)
    for i, s in enumerate(dec.singular_values):
        np.testing.assert_allclose(a @ dec.right[:, i], s * dec.left[:, i], atol=1e-10)
        np.testing.assert_allclose(a.conj().T @ dec.left[:, i], s * dec.right[:, i], atol=1e-10)


def test_svd_rejects_nonfinite():
    with pytest.raises(NumericalError):
        svd(np.array([[1.0, np.nan]]))


def test_numerical_rank_threshold():
    assert numerical_rank(np.array([1.0, 1e-11, 1e-13])) == 2
    assert numerical_rank(np.zeros(3)) == 0


def test_hermitian_eig_examples(rng):
    np.testing.assert_allclose(hermitian_eig(np.eye(4)).eigenvalues, np.ones(4))
    np.testing.assert_allclose(hermitian_eig(np.diag([0.1, 0.3, 0.4, 0.2])).eigenvalues, [0.4, 0.3, 0.2, 0.1])
    x = random_complex(rng, 8, 8)
    h = x + x.conj().T
    e = hermitian_eig(h)
    assert np.all(np.diff(e.eigenvalues) <= 0)
    assert np.linalg.norm(h @ e.eigenvectors - e.eigenvectors * e.eigenvalues) <= 1e-10 * np.linalg.norm(h)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        hermitian_eig([[1, 2], [0, 1]])


def test_condition_number(rng):
    assert condition_number(np.eye(3)) == pytest.approx(1.0)
    assert condition_number(np.diag([2.0, 1.0])) == pytest.approx(2.0)
    a = random_complex(rng, 5, 3)
    s = np.linalg.svd(a, compute_uv=False)
    assert condition_number(a) == pytest.approx(s[0] / s[-1], rel=1e-12)
    assert condition_number((2 - 3j) * a) == pytest.approx(condition_number(a), rel=1e-12)
    with pytest.raises(NumericalError):
        condition_number(np.zeros((2, 2)))


def test_fidelity_ignores_phase_and_scale(rng):
    v = random_complex(rng, 6)
    assert fidelity(v, 3j * v) == pytest.approx(1.0)
