"""Cyclic Jacobi diagonalization of small Hermitian matrices."""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-10


def _check(mat: np.ndarray) -> np.ndarray:
    a = np.array(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a - a.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return (a + a.conj().T) / 2


def jacobi_eigh(mat, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns).

    Each rotation first removes the phase of the pivot with diag(1, e^-i phi)
    and then applies the real symmetric Jacobi rotation.  Sweeps visit the
    pairs (i, j), i < j, in row order until the off-diagonal Frobenius norm
    drops below ``tol * ||M||_F``.
    """
    a = _check(mat)
    size = a.shape[0]
    vecs = np.eye(size, dtype=complex)
    target = tol * max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= target:
            break
        for i in range(size - 1):
            for j in range(i + 1, size):
                b = a[i, j]
                mag = abs(b)
                if mag <= target * 1e-3:
                    continue
                phase = b / mag
                tau = (a[j, j].real - a[i, i].real) / (2 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1 + tau * tau))
                c = 1 / np.sqrt(1 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [i, j]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[i, j] = a[j, i] = 0.0
                a[i, i] = a[i, i].real
                a[j, j] = a[j, j].real
                vecs[:, idx] = vecs[:, idx] @ g
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    vals = np.diag(a).real.copy()
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def hermitian_eigenvalues(mat, tol: float = 1e-12) -> np.ndarray:
    return jacobi_eigh(mat, tol)[0]
