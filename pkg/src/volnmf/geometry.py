"""Simplex projections and sufficiently-scattered-condition (SSC) checks.

Notation: for a nonnegative ``M`` of shape (I, K), the rows of ``M`` generate
``cone(M.T)``. Its dual is ``{y : M y >= 0}``. The second-order cone used by
SSC is ``C = {y >= 0 : 1'y >= sqrt(K-1) ||y||}`` with dual
``C* = {y : 1'y >= ||y||}``.
"""

import enum
import itertools
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import DegenerateRays, RankDeficient

CONE_TOL = 1e-10


class Placement(enum.Enum):
    """Which factor, and along which axis, carries the sum-to-one constraint."""

    M_ROWS = "m-rows"
    M_COLS = "m-cols"
    H_ROWS = "h-rows"
    H_COLS = "h-cols"
    NONNEG = "nonneg"

    @property
    def factor(self):
        return {"m": "M", "h": "H"}.get(self.value[0])

    @property
    def axis(self):
        """Axis of the 2-D array along which each slice is projected, or None."""
        if self is Placement.NONNEG:
            return None
        return 1 if self.value.endswith("rows") else 0

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).lower().replace("_", "-"))


class Verdict(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    PROBABLY_HOLDS = "probably-holds"
    NOT_CHECKED = "not-checked"


@dataclass(frozen=True)
class SSCReport:
    ssc1: Verdict
    ssc2: Verdict
    certificate: Optional[np.ndarray]
    method: str
    samples_used: int = 0
    n_rays: int = 0

    @property
    def holds(self):
        return self.ssc1 in (Verdict.HOLDS, Verdict.PROBABLY_HOLDS) and self.ssc2 in (
            Verdict.HOLDS,
            Verdict.PROBABLY_HOLDS,
            Verdict.NOT_CHECKED,
        )


@numba.njit(cache=True)
def _project_rows_kernel(v, out):
    n_rows, n = v.shape
    u = np.empty(n)
    for i in range(n_rows):
        # insertion sort, descending; rows are short
        for c in range(n):
            x = v[i, c]
            r = c
            while r > 0 and u[r - 1] < x:
                u[r] = u[r - 1]
                r -= 1
            u[r] = x
        css = 0.0
        tau = 0.0
        for r in range(n):
            css += u[r]
            t = (css - 1.0) / (r + 1)
            if u[r] > t:
                tau = t
            else:
                break
        for c in range(n):
            w = v[i, c] - tau
            out[i, c] = w if w > 0.0 else 0.0


def project_simplex_rows(v):
    """Project every row of a 2-D array onto the probability simplex.

    Sort-and-threshold: with ``u`` the row sorted in decreasing order, the
    threshold is ``(cumsum(u)[r] - 1) / (r + 1)`` at the last index ``r`` where
    ``u[r]`` still exceeds it.
    """
    v = np.ascontiguousarray(v, dtype=float)
    if v.ndim != 2:
        raise ValueError("expected a 2-D array")
    out = np.empty_like(v)
    _project_rows_kernel(v, out)
    return out


def project_simplex_rows_numpy(v):
    """Vectorized numpy version of :func:`project_simplex_rows`."""
    v = np.asarray(v, dtype=float)
    n = v.shape[1]
    u = np.sort(v, axis=1, kind="stable")[:, ::-1]
    css = np.cumsum(u, axis=1)
    css -= 1.0
    # the condition holds on a prefix of the sorted row, never empty
    rho = np.count_nonzero(u * np.arange(1, n + 1) > css, axis=1)
    tau = css[np.arange(v.shape[0]), rho - 1] / rho
    return np.maximum(v - tau[:, None], 0.0)


def project_simplex_vector(v):
    """Euclidean projection of a vector onto ``{w >= 0, sum(w) = 1}``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    return project_simplex_rows(v[None, :])[0]


def project_constraint(a, which_factor, placement):
    """Project ``a`` (factor ``"M"`` or ``"H"``) onto the feasible set.

    When ``placement`` constrains the other factor, only nonnegativity is
    enforced.
    """
    placement = Placement.parse(placement)
    a = np.asarray(a, dtype=float)
    if placement.factor != which_factor.upper():
        return np.maximum(a, 0.0)
    if placement.axis == 1:
        return project_simplex_rows(a)
    return project_simplex_rows(a.T).T


# Cone predicates ---------------------------------------------------------


def in_dual_cone(mt, y, tol=CONE_TOL):
    """``y`` lies in ``{y : M y >= 0}`` where ``mt`` has the rows of ``M``."""
    return bool(np.all(np.asarray(mt) @ y >= -tol))


def in_dual_soc(y, tol=CONE_TOL):
    """``y`` lies in ``C* = {y : 1'y >= ||y||}``."""
    y = np.asarray(y, dtype=float)
    return bool(y.sum() >= np.linalg.norm(y) - tol)


def in_soc(y, tol=CONE_TOL):
    """``y`` lies in ``C = {y >= 0 : 1'y >= sqrt(K-1)||y||}``."""
    y = np.asarray(y, dtype=float)
    k = y.size
    return bool(np.all(y >= -tol) and y.sum() >= np.sqrt(k - 1) * np.linalg.norm(y) - tol)


def is_ssc1_violation(mt, y, tol=CONE_TOL):
    """True when ``y`` witnesses ``cone*(M') not subset of C*``."""
    y = np.asarray(y, dtype=float)
    return in_dual_cone(mt, y, tol) and y.sum() < np.linalg.norm(y) - tol


def _is_axis_ray(y, tol=CONE_TOL):
    y = y / np.linalg.norm(y)
    k = int(np.argmax(np.abs(y)))
    off = np.delete(y, k)
    return y[k] > 0 and np.all(np.abs(off) <= np.sqrt(tol))


def extreme_rays_k3(mt):
    """Unit-norm extreme rays of ``{y : M y >= 0}`` for a 3-column ``mt``."""
    mt = np.asarray(mt, dtype=float)
    rows = mt / np.maximum(np.linalg.norm(mt, axis=1, keepdims=True), 1e-300)
    rays = []
    for i, j in itertools.combinations(range(rows.shape[0]), 2):
        y = np.cross(rows[i], rows[j])
        nrm = np.linalg.norm(y)
        if nrm < CONE_TOL:
            continue
        y = y / nrm
        for cand in (y, -y):
            vals = rows @ cand
            if np.any(vals < -CONE_TOL):
                continue
            active = rows[np.abs(vals) <= CONE_TOL]
            if np.linalg.matrix_rank(active, tol=1e-8) != 2:
                continue
            if any(np.linalg.norm(cand - r) < 1e-8 for r in rays):
                continue
            rays.append(cand)
    return rays


def ssc_check_exact_k3(mt):
    """Exact SSC1/SSC2 test for a nonnegative matrix with three columns.

    Enumerates the extreme rays of the dual cone ``{y : M y >= 0}`` from
    pairwise cross products of rows and tests each one against ``C*``.

    Parameters
    ----------
    mt : (n, 3) array
        Rows of the basis matrix (i.e. the generators of ``cone(M.T)``).

    Returns
    -------
    SSCReport
        ``method == "exact-k3"``. The certificate is the first violating
        unit ray, if any.
    """
    mt = np.asarray(mt, dtype=float)
    if mt.ndim != 2 or mt.shape[1] != 3:
        raise ValueError("ssc_check_exact_k3 needs exactly 3 columns")
    if mt.shape[0] < 3 or np.linalg.matrix_rank(mt) < 3:
        raise RankDeficient("SSC is undefined for rank < 3")
    rays = extreme_rays_k3(mt)
    if not rays:
        raise DegenerateRays("no extreme rays found")

    for y in rays:
        if y.sum() < np.linalg.norm(y) - CONE_TOL:
            return SSCReport(Verdict.VIOLATED, Verdict.NOT_CHECKED, y, "exact-k3", n_rays=len(rays))
    for y in rays:
        on_boundary = abs(y.sum() - np.linalg.norm(y)) <= CONE_TOL
        if on_boundary and not _is_axis_ray(y):
            return SSCReport(Verdict.HOLDS, Verdict.VIOLATED, y, "exact-k3", n_rays=len(rays))
    return SSCReport(Verdict.HOLDS, Verdict.HOLDS, None, "exact-k3", n_rays=len(rays))


def ssc_check_sampling(mt, n_samples=10000, seed=0):
    """Monte Carlo SSC1 test: search random directions for a violation.

    Only ever proves a violation; otherwise reports ``PROBABLY_HOLDS``.
    SSC2 is left unchecked since boundary events have probability zero.
    """
    mt = np.asarray(mt, dtype=float)
    k = mt.shape[1]
    if k < 2:
        raise ValueError("need at least 2 columns")
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n_samples, k))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    feasible = np.all(y @ mt.T >= -CONE_TOL, axis=1)
    bad = feasible & (y.sum(axis=1) < np.linalg.norm(y, axis=1) - CONE_TOL)
    if np.any(bad):
        cert = y[np.argmax(bad)]
        return SSCReport(Verdict.VIOLATED, Verdict.NOT_CHECKED, cert, "sampling", n_samples)
    return SSCReport(Verdict.PROBABLY_HOLDS, Verdict.NOT_CHECKED, None, "sampling", n_samples)
