"""Dense linear-algebra helpers used by the volume-regularized solvers."""

import math

import numpy as np

from .errors import ConvergenceFailure, NotPositiveDefinite

SYMMETRY_TOL = 1e-10


def frobenius_norm_sq(a):
    """Sum of squared entries of ``a``.

    Uses a correctly rounded summation, so the result does not depend on
    memory layout or traversal order (``a`` and ``a.T`` give the same bits).
    """
    a = np.asarray(a, dtype=float)
    return math.fsum(np.square(a).ravel().tolist())


def _cholesky(g):
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def logdet_shifted_gram(g, delta=0.0):
    """log det(g + delta*I) through a Cholesky factor.

    Parameters
    ----------
    g : (K, K) array
        Symmetric positive semidefinite matrix, typically ``M.T @ M``.
    delta : float
        Nonnegative diagonal shift.

    Raises
    ------
    NotPositiveDefinite
        If ``g + delta*I`` is not numerically positive definite or ``g`` is
        not symmetric.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise NotPositiveDefinite(f"expected a square matrix, got shape {g.shape}")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    scale = max(1.0, float(np.max(np.abs(g)))) if g.size else 1.0
    if np.max(np.abs(g - g.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    shifted = g + delta * np.eye(g.shape[0])
    chol = _cholesky(shifted)
    d = np.diag(chol)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise NotPositiveDefinite("Cholesky factor has a nonpositive pivot")
    return 2.0 * float(np.sum(np.log(d)))


def spd_inverse(g):
    """Inverse of a symmetric positive definite matrix via Cholesky solves."""
    chol = _cholesky(np.asarray(g, dtype=float))
    eye = np.eye(chol.shape[0])
    y = np.linalg.solve(chol, eye)
    inv = np.linalg.solve(chol.T, y)
    return 0.5 * (inv + inv.T)


def spectral_bounds(g):
    """Largest and smallest eigenvalue of a symmetric PSD matrix.

    Returns ``(l_max, l_min)`` with ``l_max >= l_min >= 0``. Negative
    eigenvalues from rounding are clipped to zero.
    """
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ConvergenceFailure("non-finite entries in Gram matrix")
    try:
        w = np.linalg.eigvalsh(0.5 * (g + g.T))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from None
    l_min = max(float(w[0]), 0.0)
    l_max = max(float(w[-1]), l_min)
    return l_max, l_min
