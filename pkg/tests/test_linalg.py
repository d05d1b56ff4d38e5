import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heisenvt.linalg import hermitian_eigenvalues, jacobi_eigh


def _hermitian(seed, size):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return a + a.conj().T


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_jacobi_matches_lapack(seed, size):
    mat = _hermitian(seed, size)
    vals, vecs = jacobi_eigh(mat)
    assert np.abs(vals - np.linalg.eigvalsh(mat)).max() <= 1e-10 * max(1, np.abs(vals).max())
    assert np.abs(mat @ vecs - vecs * vals).max() <= 1e-10 * max(1, np.abs(vals).max())
    assert np.abs(vecs.conj().T @ vecs - np.eye(size)).max() <= 1e-12


def test_degenerate_and_diagonal_input():
    assert np.allclose(hermitian_eigenvalues(np.diag([3.0, -1.0, 2.0])), [-1, 2, 3])
    vals = hermitian_eigenvalues(np.full((4, 4), 1.0))
    assert np.allclose(vals, [0, 0, 0, 4], atol=1e-12)


def test_rejects_bad_input():
    with pytest.raises(ValueError, match="Hermitian"):
        jacobi_eigh(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError, match="square"):
        jacobi_eigh(np.zeros((2, 3)))
