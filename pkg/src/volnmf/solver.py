"""Alternating projected fast gradient solver for logdet-regularized NMF.

The core routine :func:`solve_volreg` minimizes

    F(M, H) = ||X - M H||_F^2 + lam * logdet(M'M + delta I)

over nonnegative factors with one optional sum-to-one constraint. The
H-subproblem is a constrained least squares solved by an accelerated
projected gradient method. The M-subproblem replaces the concave logdet
term by its tangent plane at the current M, which yields a strongly convex
quadratic that upper-bounds F; minimizing it can only decrease F.

Minimum-volume NMF (:func:`solve_mvc`) calls the core routine directly.
Maximum-volume NMF (:func:`solve_mav`) penalizes logdet(HH' + delta I)
instead, and is obtained by running the core routine on X' and swapping the
transposed factors.
"""

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import linalg
from .errors import ConvergenceFailure, DegenerateScale, ShapeMismatch
from .geometry import Placement, project_constraint

log = logging.getLogger(__name__)

L_MIN_FLOOR = 1e-12

# MAV constraint placement -> placement inside the transposed problem
_TRANSPOSED_PLACEMENT = {
    Placement.H_COLS: Placement.M_ROWS,
    Placement.H_ROWS: Placement.M_COLS,
    Placement.M_COLS: Placement.H_ROWS,
    Placement.M_ROWS: Placement.H_COLS,
    Placement.NONNEG: Placement.NONNEG,
}


@dataclass
class SolverConfig:
    k: int
    lambda_prime: float = 0.1
    delta: float = 0.1
    max_outer: int = 500
    inner_iter: int = 50
    seed: int = 0
    placement: Placement = Placement.H_COLS
    init: str = "random"
    tol_objective: float = 1e-7

    def __post_init__(self):
        self.placement = Placement.parse(self.placement)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.lambda_prime < 0:
            raise ValueError("lambda_prime must be >= 0")
        if self.max_outer < 1 or self.inner_iter < 1:
            raise ValueError("max_outer and inner_iter must be >= 1")
        if self.init not in ("random", "provided"):
            raise ValueError(f"unknown init {self.init!r}")

    def to_dict(self):
        d = asdict(self)
        d["placement"] = self.placement.value
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class SolveResult:
    m: np.ndarray
    h: np.ndarray
    lam: float
    objective_history: List[float] = field(default_factory=list)
    fit_history: List[float] = field(default_factory=list)
    volume_history: List[float] = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False

    @property
    def objective(self):
        return min(self.objective_history) if self.objective_history else math.nan


def _check_x(x, k):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ShapeMismatch("X must be 2-D")
    if not np.all(np.isfinite(x)):
        raise ValueError("X has non-finite entries")
    if not 1 <= k <= min(x.shape):
        raise ShapeMismatch(f"k={k} must lie in [1, min{x.shape}]")
    return x


def init_factors(x, k, seed, placement=Placement.H_COLS):
    """Seeded uniform random initial factors.

    The factor carrying the constraint is projected onto its feasible set
    first; the other factor is then rescaled so that the mean of ``M0 @ H0``
    equals the mean of ``x``.
    """
    x = _check_x(x, k)
    placement = Placement.parse(placement)
    rng = np.random.default_rng(seed)
    m0 = rng.uniform(size=(x.shape[0], k))
    h0 = rng.uniform(size=(k, x.shape[1]))
    m0 = project_constraint(m0, "M", placement)
    h0 = project_constraint(h0, "H", placement)
    prod_mean = float(np.mean(m0 @ h0))
    scale = float(np.mean(x)) / prod_mean if prod_mean > 0 else 1.0
    if placement.factor == "M":
        h0 = h0 * scale
    else:
        m0 = m0 * scale
    return m0, h0


def compute_lambda(x, m0, h0, lambda_prime, delta):
    """Absolute regularization weight from the relative weight ``lambda_prime``.

    ``lam = lambda_prime * ||X - M0 H0||^2 / |logdet(M0'M0 + delta I)|``
    """
    if lambda_prime == 0:
        return 0.0
    fit = linalg.frobenius_norm_sq(x - m0 @ h0)
    ld = linalg.logdet_shifted_gram(m0.T @ m0, delta)
    if abs(ld) < 1e-12:
        raise DegenerateScale("logdet(M0'M0 + delta I) vanishes; lambda is undefined")
    return lambda_prime * fit / abs(ld)


def objective_value(x, m, h, lam, delta, sign="minvol"):
    """``||X - MH||^2 + lam*logdet(M'M + delta I)`` ("minvol") or minus it ("maxvol")."""
    fit = linalg.frobenius_norm_sq(x - m @ h)
    if lam == 0:
        return fit
    ld = linalg.logdet_shifted_gram(m.T @ m, delta)
    if sign == "minvol":
        return fit + lam * ld
    if sign == "maxvol":
        return fit - lam * ld
    raise ValueError(f"unknown sign {sign!r}")


def _fgm(value, grad, project, y0, step, inner_iter, beta=None):
    """Projected fast gradient loop shared by the two subproblems.

    ``beta=None`` selects the Nesterov t-sequence; a float gives constant
    momentum. Momentum restarts whenever the objective goes up. Returns the
    best iterate visited, ``y0`` included.
    """
    best, best_val = y0, value(y0)
    x_prev, f_prev = y0, best_val
    y = y0
    t = 1.0
    for _ in range(inner_iter):
        x_new = project(y - step * grad(y))
        f_new = value(x_new)
        if f_new < best_val:
            best, best_val = x_new, f_new
        if f_new > f_prev:
            # adaptive restart: drop momentum and restart from the last iterate
            t = 1.0
            y = x_prev
            continue
        if beta is None:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            mom = (t - 1.0) / t_next
            t = t_next
        else:
            mom = beta
        y = x_new + mom * (x_new - x_prev)
        x_prev, f_prev = x_new, f_new
    return best, best_val


def h_subproblem(x, m):
    """``(value, grad)`` of ``H -> ||X - M H||^2`` with ``M'M`` and ``M'X`` cached."""
    g = m.T @ m
    mtx = m.T @ x
    x_sq = float(np.vdot(x, x))

    def value(h):
        return x_sq - 2.0 * float(np.vdot(mtx, h)) + float(np.vdot(g @ h, h))

    def grad(h):
        return 2.0 * (g @ h - mtx)

    return value, grad


def update_h_pfgm(x, m, h_init, placement, inner_iter):
    """Accelerated projected gradient on ``H -> ||X - M H||^2``."""
    placement = Placement.parse(placement)
    g = m.T @ m
    try:
        l_max, _ = linalg.spectral_bounds(g)
    except ConvergenceFailure:
        # trace overestimates l_max for a PSD matrix, so the step stays safe
        l_max = float(np.trace(g))
    if l_max <= 0:
        return h_init
    value, grad = h_subproblem(x, m)

    def project(h):
        return project_constraint(h, "H", placement)

    best, _ = _fgm(value, grad, project, h_init, 1.0 / (2.0 * l_max), inner_iter)
    return best


def build_m_majorizer(x, h, m0, lam, delta):
    """Quadratic majorizer data ``(A, C)`` for the M-subproblem.

    ``A = HH' + lam (M0'M0 + delta I)^-1`` and ``C = X H'``.
    """
    a = h @ h.T
    if lam != 0:
        k = m0.shape[1]
        a = a + lam * linalg.spd_inverse(m0.T @ m0 + delta * np.eye(k))
    return a, x @ h.T


def majorizer_quadratic(a, c, m):
    """``sum_i (1/2 m_i A m_i' - c_i m_i')`` for the rows ``m_i`` of ``m``."""
    return 0.5 * float(np.vdot(m @ a, m)) - float(np.vdot(c, m))


def majorizer_value(x, h, m, m0, lam, delta):
    """Full surrogate of ``F`` around ``m0``; equals ``F(m0, h)`` at ``m = m0``."""
    a, c = build_m_majorizer(x, h, m0, lam, delta)
    const = float(np.vdot(x, x))
    if lam != 0:
        k = m0.shape[1]
        q0 = m0.T @ m0 + delta * np.eye(k)
        const += lam * (
            linalg.logdet_shifted_gram(m0.T @ m0, delta)
            + delta * float(np.trace(linalg.spd_inverse(q0)))
            - k
        )
    return 2.0 * majorizer_quadratic(a, c, m) + const


def m_subproblem(a, c):
    """``(value, grad)`` of :func:`majorizer_quadratic` in ``M``."""

    def value(m):
        return majorizer_quadratic(a, c, m)

    def grad(m):
        return m @ a - c

    return value, grad


def update_m_pfgm(a, c, m_init, placement, inner_iter):
    """Strongly convex projected fast gradient on the row-separable quadratic."""
    placement = Placement.parse(placement)
    l_max, l_min = linalg.spectral_bounds(a)
    if l_max <= 0:
        return m_init
    # rank-deficient A (lam = 0 with few columns) would give beta = 1 exactly
    l_min = max(l_min, L_MIN_FLOOR)
    sq_max, sq_min = math.sqrt(l_max), math.sqrt(l_min)
    beta = (sq_max - sq_min) / (sq_max + sq_min)
    value, grad = m_subproblem(a, c)

    def project(m):
        return project_constraint(m, "M", placement)

    best, _ = _fgm(value, grad, project, m_init, 1.0 / l_max, inner_iter, beta=beta)
    return best


def solve_volreg(x, config, provided=None, callback=None):
    """Run the alternating solver on ``x``.

    Parameters
    ----------
    x : (I, J) array
        Nonnegative data.
    config : SolverConfig
    provided : tuple of arrays, optional
        Initial ``(m0, h0)``; projected onto the feasible set before use.
    callback : callable, optional
        Called as ``callback(iteration, m, h)`` after every outer iteration.

    Returns
    -------
    SolveResult
        Holds the iterate with the lowest recorded objective.
    """
    x = _check_x(x, config.k)
    placement = config.placement
    if provided is not None:
        m, h = (np.array(f, dtype=float) for f in provided)
        if m.shape != (x.shape[0], config.k) or h.shape != (config.k, x.shape[1]):
            raise ShapeMismatch(
                f"provided factors {m.shape}, {h.shape} do not fit X {x.shape} with k={config.k}"
            )
        m = project_constraint(m, "M", placement)
        h = project_constraint(h, "H", placement)
    else:
        m, h = init_factors(x, config.k, config.seed, placement)

    delta = config.delta
    try:
        lam = compute_lambda(x, m, h, config.lambda_prime, delta)
    except DegenerateScale:
        warnings.warn("degenerate logdet at initialization; using unit denominator")
        lam = config.lambda_prime * linalg.frobenius_norm_sq(x - m @ h)

    def record(m, h):
        fit = linalg.frobenius_norm_sq(x - m @ h)
        vol = linalg.logdet_shifted_gram(m.T @ m, delta)
        return fit + lam * vol, fit, vol

    res = SolveResult(m=m, h=h, lam=lam)
    best_obj = math.inf
    prev = None
    for it in range(config.max_outer):
        h = update_h_pfgm(x, m, h, placement, config.inner_iter)
        a, c = build_m_majorizer(x, h, m, lam, delta)
        m = update_m_pfgm(a, c, m, placement, config.inner_iter)
        obj, fit, vol = record(m, h)
        res.objective_history.append(obj)
        res.fit_history.append(fit)
        res.volume_history.append(vol)
        res.iterations_run = it + 1
        if callback is not None:
            callback(it, m, h)
        if obj < best_obj:
            best_obj = obj
            res.m, res.h = m, h
        log.debug("iter %d objective %.12g fit %.6g logdet %.6g", it + 1, obj, fit, vol)
        if prev is not None and abs(prev - obj) / max(abs(obj), 1.0) < config.tol_objective:
            res.converged = True
            break
        prev = obj
    return res


def solve_mvc(x, config):
    """Minimum-volume NMF: the core solver applied to ``x`` as is."""
    return solve_volreg(x, config)


def solve_mav(x, config):
    """Maximum-volume NMF through the transposed problem.

    ``config.placement`` names the constraint of the max-volume problem
    (default: columns of H sum to one). The core solver runs on ``x.T``
    with the matching placement; its factors ``(M', H')`` give
    ``M = H'.T`` and ``H = M'.T``. ``volume_history`` is rewritten as
    ``logdet(M'M + delta I)`` of the returned basis, while
    ``objective_history`` keeps the transposed objective, i.e.
    ``||X - MH||^2 + lam*logdet(HH' + delta I)``.
    """
    x = _check_x(x, config.k)
    tcfg = replace(config, placement=_TRANSPOSED_PLACEMENT[config.placement])
    vol = []

    def track(_, mt, ht):
        vol.append(linalg.logdet_shifted_gram(ht @ ht.T, config.delta))

    tres = solve_volreg(x.T, tcfg, callback=track)
    m, h = tres.h.T.copy(), tres.m.T.copy()
    return SolveResult(
        m=m,
        h=h,
        lam=tres.lam,
        objective_history=list(tres.objective_history),
        fit_history=list(tres.fit_history),
        volume_history=vol,
        iterations_run=tres.iterations_run,
        converged=tres.converged,
    )


def best_of_restarts(solve, x, config, restarts=5):
    """Run ``solve`` with seeds ``config.seed, config.seed+1, ...`` and keep
    the result with the lowest final objective (first seed wins ties)."""
    best = None
    for r in range(restarts):
        res = solve(x, replace(config, seed=config.seed + r))
        if best is None or res.objective < best.objective:
            best = res
    return best
