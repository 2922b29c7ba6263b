"""Volume, fit, sparsity and permutation-aware recovery error."""

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np

from . import linalg
from .errors import ColumnCollapse, ShapeMismatch

# the published time-allocation volumes correspond to a shift of 0.1
DEFAULT_DELTA_METRIC = 0.1
SPARSITY_TOL = 1e-4
MAX_ALIGN_K = 8


@dataclass(frozen=True)
class AlignmentResult:
    """Best column matching of an estimated basis to a reference basis.

    Column ``permutation[k]`` of the estimate, multiplied by ``scaling[k]``,
    is matched to column ``k`` of the reference.
    """

    permutation: Tuple[int, ...]
    scaling: Tuple[float, ...]
    mean_abs_error: float
    per_column_error: Tuple[float, ...]

    def apply(self, m_est):
        """Estimated basis reordered and rescaled onto the reference."""
        return np.asarray(m_est)[:, list(self.permutation)] * np.asarray(self.scaling)

    def apply_rows(self, h_est):
        """Coefficient rows matching :meth:`apply` (rows permuted, inverse scaling)."""
        return np.asarray(h_est)[list(self.permutation), :] / np.asarray(self.scaling)[:, None]

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MetricsReport:
    fit_rel: float
    volume_logdet: float
    volume_logdet_h: float
    sparsity_m: int
    sparsity_h: int
    delta_metric: float

    def to_dict(self):
        return asdict(self)


def _scalings(m_est, m_true):
    norms = np.sum(m_est * m_est, axis=0)
    s = (m_est.T @ m_true) / norms[:, None]
    return np.maximum(s, 1e-12)


def align_basis(m_est, m_true):
    """Match estimated columns to reference columns up to permutation and scaling.

    Every permutation is tried. Each matched column pair gets the positive
    least-squares scale ``<est, ref> / ||est||^2`` (floored at 1e-12), and
    the permutation with the smallest total squared error wins, the
    lexicographically first on ties.

    Raises
    ------
    ColumnCollapse
        If an estimated column is numerically zero.
    """
    m_est = np.asarray(m_est, dtype=float)
    m_true = np.asarray(m_true, dtype=float)
    if m_est.shape != m_true.shape:
        raise ShapeMismatch(f"shapes differ: {m_est.shape} vs {m_true.shape}")
    k = m_est.shape[1]
    if k > MAX_ALIGN_K:
        raise ValueError(f"exhaustive alignment limited to k <= {MAX_ALIGN_K}")
    if np.any(np.linalg.norm(m_est, axis=0) < 1e-12):
        raise ColumnCollapse("an estimated column has (near) zero norm")
    s = _scalings(m_est, m_true)
    # sq[p, q]: squared error of estimated column p scaled onto reference column q
    sq = np.empty((k, k))
    for p in range(k):
        for q in range(k):
            sq[p, q] = np.sum((s[p, q] * m_est[:, p] - m_true[:, q]) ** 2)
    best, best_err = None, math.inf
    for perm in itertools.permutations(range(k)):
        err = sum(sq[perm[q], q] for q in range(k))
        if err < best_err:
            best, best_err = perm, err
    scaling = tuple(float(s[best[q], q]) for q in range(k))
    aligned = m_est[:, list(best)] * np.array(scaling)
    diff = np.abs(aligned - m_true)
    return AlignmentResult(
        permutation=tuple(int(p) for p in best),
        scaling=scaling,
        mean_abs_error=float(diff.mean()),
        per_column_error=tuple(float(v) for v in diff.mean(axis=0)),
    )


def aligned_error_for(m_est, m_true, perm):
    """Mean absolute error of ``m_est`` under a fixed permutation (best scalings)."""
    m_est = np.asarray(m_est, dtype=float)
    m_true = np.asarray(m_true, dtype=float)
    s = _scalings(m_est, m_true)
    scale = np.array([s[perm[q], q] for q in range(len(perm))])
    return float(np.abs(m_est[:, list(perm)] * scale - m_true).mean())


def volume_logdet(m, delta_metric=DEFAULT_DELTA_METRIC):
    """``logdet(M'M + delta_metric * I)``."""
    m = np.asarray(m, dtype=float)
    return linalg.logdet_shifted_gram(m.T @ m, delta_metric)


def sparsity_count(a, tol=SPARSITY_TOL):
    return int(np.sum(np.abs(np.asarray(a)) < tol))


def metrics_report(x, m, h, delta_metric=DEFAULT_DELTA_METRIC):
    x, m, h = (np.asarray(v, dtype=float) for v in (x, m, h))
    if m.shape[1] != h.shape[0] or (m.shape[0], h.shape[1]) != x.shape:
        raise ShapeMismatch(f"X {x.shape}, M {m.shape}, H {h.shape} are not conformable")
    fit_rel = math.sqrt(linalg.frobenius_norm_sq(x - m @ h) / linalg.frobenius_norm_sq(x))
    return MetricsReport(
        fit_rel=fit_rel,
        volume_logdet=volume_logdet(m, delta_metric),
        volume_logdet_h=linalg.logdet_shifted_gram(h @ h.T, delta_metric),
        sparsity_m=sparsity_count(m),
        sparsity_h=sparsity_count(h),
        delta_metric=float(delta_metric),
    )
