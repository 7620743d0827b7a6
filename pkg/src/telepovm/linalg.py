"""Cyclic Jacobi eigensolver for small dense Hermitian matrices."""
from __future__ import annotations

import numpy as np

from .errors import HermiticityError, NumericalError


def off_norm(a: np.ndarray) -> float:
    """Frobenius norm of the strictly off-diagonal part."""
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eigh_jacobi(a, tol: float = 1e-13, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first rotates the phase of ``a[p, q]`` away, then applies
    the real symmetric Jacobi rotation that zeroes it.  Sweeps run until the
    off-diagonal norm falls below ``tol`` (times the matrix norm, when that
    exceeds 1).

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    v : ndarray
        Unitary matrix whose columns are the matching eigenvectors.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.conj().T, rtol=0, atol=1e-12):
        raise HermiticityError("eigh_jacobi needs a Hermitian matrix")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    tol = tol * max(1.0, float(np.linalg.norm(a)))

    for _ in range(max_sweeps):
        if off_norm(a) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                r = abs(a[p, q])
                if r < 1e-18 * tol:
                    continue
                phase = a[p, q] / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                j = np.eye(n, dtype=complex)
                j[p, p] = c
                j[p, q] = s
                j[q, p] = -s * np.conj(phase)
                j[q, q] = c * np.conj(phase)
                a = j.conj().T @ a @ j
                a[p, q] = a[q, p] = 0.0
                v = v @ j
    else:
        if off_norm(a) >= tol:
            raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.diag(a).real.copy()
    order = np.argsort(w)
    return w[order], v[:, order]


def eigvalsh_jacobi(a, tol: float = 1e-13) -> np.ndarray:
    return eigh_jacobi(a, tol)[0]


def psd_sqrt(a) -> np.ndarray:
    """Principal square root of a PSD matrix; tiny negative eigenvalues are clipped to 0."""
    w, v = eigh_jacobi(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
