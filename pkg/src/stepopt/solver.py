"""Smoothing Newton method for the step-constrained program.

Each iteration selects the clamp columns of G(x) + tau*W, restricts the
stationarity system to the nonnegative positions inside them, and takes a
Newton step on the smoothed system, falling back to the negative residual
when the linear solve is unreliable.  A backtracking search keeps the
iterate's violation count within a relaxed budget (gamma + 1) * s, and the
smoothing weight shrinks geometrically but never above a fixed multiple of
the current residual norm.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .geometry import candidate_sets, step_norm
from .problems import ProblemInstance, grad_columns, weighted_constraint_hessian
from .stationarity import (
    ActiveSet,
    PrimalDualPoint,
    StationarityReport,
    active_set,
    check_tau_stationary,
    stationarity_residual,
)

__all__ = [
    "SolverConfig",
    "IterationRecord",
    "SolveResult",
    "SolverAbort",
    "gamma_for",
    "select_candidate_columns",
    "newton_direction",
    "fallback_direction",
    "feasibility_line_search",
    "solve",
    "quadratic_rate_ratios",
]


class SolverAbort(RuntimeError):
    """Raised when an iterate or evaluator stops producing finite numbers."""


def gamma_for(alpha: float, s: int) -> float:
    """Line-search slack for a violation level alpha: a/s with a in {2, 3, 4}.

    The anchors are alpha = 0.01, 0.05, 0.1; other levels take the nearest
    anchor (thresholds at 0.03 and 0.075).
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if s < 1:
        raise ValueError(f"budget must be >= 1, got {s}")
    a = 2.0 if alpha < 0.03 else (3.0 if alpha < 0.075 else 4.0)
    return a / s


@dataclass
class SolverConfig:
    """Tuning knobs for :func:`solve`.

    ``tol_scale`` is multiplied by K*M*N to form the stopping tolerance.
    ``gamma`` is the relative slack of the line-search violation budget;
    None selects 3/s.  ``pi`` is the backtracking ratio, ``t_max`` the
    largest backtracking exponent, ``rho``/``mu_bar``/``nu`` control the
    smoothing weight, ``pivot_tol`` the relative pivot threshold deciding
    whether a Newton system is trustworthy.
    """

    s: int
    tau: float = 0.75
    max_it: int = 2000
    tol_scale: float = 1e-9
    rho: float = 1e-2
    mu_bar: float = 1e-2
    nu: float = 0.999
    pi: float = 0.85
    gamma: Optional[float] = None
    t_max: int = 50
    pivot_tol: float = 1e-12

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"budget s must be >= 1, got {self.s}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.max_it < 0:
            raise ValueError(f"max_it must be >= 0, got {self.max_it}")
        if not self.tol_scale > 0:
            raise ValueError(f"tol_scale must be positive, got {self.tol_scale}")
        if not 0 < self.rho:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0 < self.mu_bar:
            raise ValueError(f"mu_bar must be positive, got {self.mu_bar}")
        if not 0 < self.nu < 1:
            raise ValueError(f"nu must be in (0, 1), got {self.nu}")
        if not 0 < self.pi < 1:
            raise ValueError(f"pi must be in (0, 1), got {self.pi}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.t_max < 0:
            raise ValueError(f"t_max must be >= 0, got {self.t_max}")
        if not self.pivot_tol > 0:
            raise ValueError(f"pivot_tol must be positive, got {self.pivot_tol}")


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration trace entry; residual/objective/violations are pre-step."""

    iter: int
    residual: float
    objective: float
    violations: int
    step: float
    mu: float
    direction_kind: str


@dataclass(frozen=True)
class SolveResult:
    point: PrimalDualPoint
    status: str
    iterations: int
    final_residual: float
    trace: tuple[IterationRecord, ...]
    final_report: StationarityReport
    active: ActiveSet = field(repr=False, default=None)


def select_candidate_columns(lam: np.ndarray, s: int) -> np.ndarray:
    """Deterministic clamp-column choice for the matrix lam at budget s.

    Keeps the s columns of largest positive-part norm (ties toward the lower
    index) and clamps the rest together with the zero-max columns.
    """
    fam = candidate_sets(lam, s)
    return np.array(fam.representative, dtype=int)


def newton_direction(problem: ProblemInstance, point: PrimalDualPoint, V: ActiveSet,
                     mu: float, pivot_tol: float = 1e-12,
                     Z: Optional[np.ndarray] = None) -> tuple[Optional[np.ndarray], bool]:
    """Newton step on the smoothed system, reduced to K + |V| unknowns.

    The complement block of the Jacobian is the identity, so its component
    of the direction is just the negated multiplier values; the remaining
    square system couples x with the multipliers on V.  Returns (direction,
    True) in block order [x; W on V; W off V], or (None, False) when the LU
    factorization shows a relative pivot below ``pivot_tol``.
    """
    x, W = point.x, point.W
    K = problem.K
    if Z is None:
        Z = problem.G(x)
    g = problem.grad_f(x).astype(float, copy=True)
    L = len(V)
    if L:
        Gv = grad_columns(problem, x, V.rows, V.cols)
        w_v = W[V.rows, V.cols]
        g += Gv @ w_v
        theta = problem.hess_f(x) + weighted_constraint_hessian(
            problem, x, V.rows, V.cols, w_v)
        A = np.block([[theta, Gv], [Gv.T, -mu * np.eye(L)]])
        rhs = -np.concatenate([g, Z[V.rows, V.cols]])
    else:
        A = problem.hess_f(x).astype(float, copy=True)
        rhs = -g
    scale = np.abs(A).max()
    if not np.isfinite(scale) or scale == 0.0:
        return None, False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # exact-zero pivots are caught below
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    if np.abs(np.diag(lu)).min() < pivot_tol * scale:
        return None, False
    head = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    if not np.all(np.isfinite(head)):
        return None, False
    crows, ccols = V.complement()
    return np.concatenate([head, -W[crows, ccols]]), True


def fallback_direction(problem: ProblemInstance, point: PrimalDualPoint, V: ActiveSet,
                       Z: Optional[np.ndarray] = None) -> np.ndarray:
    """Steepest residual-descent surrogate: the negated stacked residual."""
    return -stationarity_residual(problem, point, V, Z=Z)


def feasibility_line_search(problem: ProblemInstance, x: np.ndarray, d_x: np.ndarray,
                            s: int, gamma: float, pi: float,
                            t_max: int = 50) -> tuple[int, float, bool]:
    """Smallest backtracking exponent keeping violations within (gamma+1)*s.

    Returns (t, pi**t, stalled); when no exponent up to t_max satisfies the
    bound, the step is zero with stalled=True so the iterate never leaves
    the relaxed budget region.
    """
    bound = (gamma + 1.0) * s
    alpha = 1.0
    for t in range(t_max + 1):
        if step_norm(problem.G(x + alpha * d_x)) <= bound:
            return t, alpha, False
        alpha *= pi
    return t_max, 0.0, True


def solve(problem: ProblemInstance, config: SolverConfig,
          start: Optional[PrimalDualPoint] = None) -> SolveResult:
    """Run the smoothing Newton iteration from ``start`` (default: zeros).

    Terminates with status 'Converged' (residual below tol_scale*K*M*N),
    'MaxIterations', or 'LineSearchStalled' (backtracking hit its cap twice
    in a row).  Raises :class:`SolverAbort` on non-finite iterates.
    """
    s, tau = config.s, config.tau
    gamma = config.gamma if config.gamma is not None else 3.0 / s
    tol = config.tol_scale * problem.K * problem.M * problem.N

    pt = PrimalDualPoint.zeros(problem) if start is None else PrimalDualPoint(
        np.array(start.x, dtype=float), np.array(start.W, dtype=float))
    x, W = pt.x.copy(), pt.W.copy()

    def refresh(x, W):
        Z = problem.G(x)
        if not np.all(np.isfinite(Z)):
            raise SolverAbort("constraint evaluation produced non-finite values")
        cols = select_candidate_columns(Z + tau * W, s)
        V = active_set(problem, PrimalDualPoint(x, W), tau, cols)
        F = stationarity_residual(problem, PrimalDualPoint(x, W), V, Z=Z)
        return Z, V, F, float(np.linalg.norm(F))

    Z, V, F, res = refresh(x, W)
    mu = min(config.mu_bar, config.rho * res)

    trace: list[IterationRecord] = []
    stall_streak = 0
    it = 0
    while True:
        if res < tol:
            status = "Converged"
            break
        if it > config.max_it:
            status = "MaxIterations"
            break
        if stall_streak >= 2:
            status = "LineSearchStalled"
            break

        point = PrimalDualPoint(x, W)
        d, solvable = newton_direction(problem, point, V, mu, config.pivot_tol, Z=Z)
        if solvable:
            kind = "newton"
        else:
            d = fallback_direction(problem, point, V, Z=Z)
            kind = "fallback"

        t, alpha, stalled = feasibility_line_search(
            problem, x, d[:problem.K], s, gamma, config.pi, config.t_max)
        stall_streak = stall_streak + 1 if stalled else 0

        trace.append(IterationRecord(
            iter=it, residual=res, objective=problem.f(x),
            violations=step_norm(Z), step=alpha, mu=mu, direction_kind=kind))

        K = problem.K
        x = x + alpha * d[:K]
        if len(V):
            W[V.rows, V.cols] += alpha * d[K:K + len(V)]
        crows, ccols = V.complement()
        if crows.size:
            W[crows, ccols] += alpha * d[K + len(V):]
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(W))):
            raise SolverAbort(f"non-finite iterate at iteration {it}")

        Z, V, F, res = refresh(x, W)
        mu = min(config.nu * mu, config.rho * res)
        it += 1

    final_pt = PrimalDualPoint(x, W)
    report = check_tau_stationary(problem, final_pt, tau, s, tol=tol)
    return SolveResult(point=final_pt, status=status, iterations=it,
                       final_residual=res, trace=tuple(trace),
                       final_report=report, active=V)


def quadratic_rate_ratios(trace, final_residual: Optional[float] = None) -> list[tuple[int, float]]:
    """Ratios r_{l+1} / r_l^2 of consecutive positive trace residuals.

    ``final_residual`` appends the post-loop residual so the terminal step
    participates; each ratio is tagged with the iteration index of its
    numerator.
    """
    residuals = [(rec.iter, rec.residual) for rec in trace]
    if final_residual is not None and trace:
        residuals.append((trace[-1].iter + 1, float(final_residual)))
    out = []
    for (_, r0), (i1, r1) in zip(residuals, residuals[1:]):
        if r0 > 0.0 and r1 > 0.0:
            out.append((i1, r1 / r0 ** 2))
    return out
