"""Small dense complex linear algebra for 3x3 operators.

Matrices are plain ``numpy`` arrays of shape ``(3, 3)`` (or stacks of
shape ``(..., 3, 3)``) with ``complex128`` entries.  The Hermitian
eigensolver is a cyclic complex Jacobi iteration that works on whole
stacks at once.
"""

from __future__ import annotations

import numpy as np

_PAIRS = ((0, 1), (0, 2), (1, 2))


class EigenSolverError(ArithmeticError):
    """Raised when the Jacobi sweeps fail to reach the off-diagonal tolerance."""


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def trace(m: np.ndarray) -> np.ndarray:
    return np.trace(m, axis1=-2, axis2=-1)


def hermiticity_error(m: np.ndarray) -> float:
    """Largest componentwise deviation ``max |M - M^dagger|``."""
    return float(np.max(np.abs(m - dagger(m)))) if np.size(m) else 0.0


def offdiag_norm(m: np.ndarray) -> np.ndarray:
    mask = ~np.eye(m.shape[-1], dtype=bool)
    return np.sqrt(np.sum(np.abs(m[..., mask]) ** 2, axis=-1))


def jacobi_eigh(h, tol: float = 1e-12, max_sweeps: int = 30):
    """Eigen-decomposition of Hermitian matrices by cyclic Jacobi rotations.

    Parameters
    ----------
    h : array_like, shape (..., n, n)
        Hermitian matrix or stack of matrices.
    tol : float
        Target for the off-diagonal Frobenius norm, relative to
        ``max(1, ||h||_F)``.
    max_sweeps : int
        Number of full cyclic sweeps before giving up.

    Returns
    -------
    w : ndarray, shape (..., n)
        Eigenvalues in ascending order.
    v : ndarray, shape (..., n, n)
        Unitary matrix whose columns are the matching eigenvectors.

    Raises
    ------
    EigenSolverError
        If the off-diagonal norm is still above tolerance after
        ``max_sweeps`` sweeps.
    """
    a = np.array(h, dtype=complex)
    single = a.ndim == 2
    if single:
        a = a[None]
    n = a.shape[-1]
    a = 0.5 * (a + dagger(a))
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1))))
    pairs = _PAIRS if n == 3 else [(p, q) for p in range(n) for q in range(p + 1, n)]

    for _ in range(max_sweeps):
        if np.all(offdiag_norm(a) <= tol * scale):
            break
        for p, q in pairs:
            apq = a[:, p, q]
            r = np.abs(apq)
            active = r > 1e-300
            if not np.any(active):
                continue
            phase = np.where(active, apq / np.where(active, r, 1.0), 1.0)
            app = a[:, p, p].real
            aqq = a[:, q, q].real
            zeta = np.where(active, (aqq - app) / (2.0 * np.where(active, r, 1.0)), 0.0)
            t = np.where(
                active,
                np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta)),
                0.0,
            )
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # J = diag-phase * real rotation on the (p, q) plane
            j = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
            j[:, p, p] = c
            j[:, q, q] = c
            j[:, p, q] = s * phase
            j[:, q, p] = -s * np.conj(phase)
            a = dagger(j) @ a @ j
            v = v @ j
    else:
        if not np.all(offdiag_norm(a) <= tol * scale):
            raise EigenSolverError("Jacobi iteration did not converge")

    w = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    if single:
        return w[0], v[0]
    return w, v


def fix_phase(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and positive."""
    vecs = np.array(vecs, dtype=complex)
    idx = np.argmax(np.abs(vecs), axis=-2)
    lead = np.take_along_axis(vecs, idx[..., None, :], axis=-2)
    return vecs * (np.abs(lead) / np.where(lead == 0, 1.0, lead))


def unitary_propagator(h, dt: float) -> np.ndarray:
    """``exp(-i h dt)`` for Hermitian ``h`` via the Jacobi eigenbasis."""
    w, v = jacobi_eigh(h)
    return (v * np.exp(-1j * w * dt)[..., None, :]) @ dagger(v)
