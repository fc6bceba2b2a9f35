"""Small dense symmetric matrix algebra.

Matrices are plain ``numpy.ndarray`` values of shape ``(d, d)`` with ``d``
small (a handful up to ~16).  The eigen-solver is a cyclic Jacobi
iteration, which is slow for large ``d`` but unconditionally stable and
returns an orthogonal eigenbasis to machine precision.
"""

from typing import NamedTuple

import numpy as np

from .errors import NotFinite, NotPSD, NotSymmetric

SYM_TOL = 1e-12
PSD_TOL = 1e-9
SQRT_TOL = 1e-10

_MAX_SWEEPS = 100


class SymEig(NamedTuple):
    """Eigenpairs of a symmetric matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D float array."""
    a = np.array(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotFinite(f"{name} has non-finite entries")
    return a


def _as_square(m):
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def fro(m):
    return float(np.sqrt(np.sum(np.square(m))))


def asymmetry(m):
    """Frobenius norm of ``m - m'``."""
    a = np.asarray(m, dtype=float)
    return fro(a - a.T)


def is_symmetric(m, tol=SYM_TOL):
    a = np.asarray(m, dtype=float)
    return asymmetry(a) <= tol * (1.0 + fro(a))


def symmetrize(m):
    a = np.asarray(m, dtype=float)
    return 0.5 * (a + a.T)


def sym_eig(m):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array-like (d, d)
        Symmetric matrix (relative asymmetry at most 1e-12).

    Returns
    -------
    SymEig
        Ascending eigenvalues and an orthogonal matrix whose columns are the
        matching eigenvectors, so that ``V @ diag(w) @ V.T`` reconstructs ``m``.

    Raises
    ------
    NotFinite
        If ``m`` contains NaN or Inf.
    NotSymmetric
        If ``m`` is not symmetric within tolerance.
    """
    a = _as_square(m)
    if not is_symmetric(a):
        raise NotSymmetric(f"asymmetry {asymmetry(a):.3e} exceeds tolerance")
    a = symmetrize(a)
    d = a.shape[0]
    v = np.eye(d)
    scale = fro(a)
    for _ in range(_MAX_SWEEPS):
        off = fro(a - np.diag(np.diag(a)))
        if off <= 1e-17 * scale or off == 0.0:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])) or abs(apq) < 1e-300:
                    a[p, q] = a[q, p] = 0.0
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0 / (abs(tau) + np.hypot(1.0, tau)), tau)
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return SymEig(w[order], v[:, order])


def min_eig(m):
    return float(sym_eig(m).eigenvalues[0])


def is_psd(m, tol=PSD_TOL):
    """True iff the smallest eigenvalue is at least ``-tol * (1 + ||m||_F)``."""
    a = _as_square(m)
    return min_eig(a) >= -tol * (1.0 + fro(a))


def spd_sqrt(m):
    """Symmetric positive semidefinite square root.

    Eigenvalues slightly below zero (within ``1e-10 * (1 + ||m||_F)``) are
    clamped to zero; anything more negative raises ``NotPSD``.
    """
    a = _as_square(m)
    w, v = sym_eig(a)
    if w[0] < -SQRT_TOL * (1.0 + fro(a)):
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} is negative")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return symmetrize(root)
