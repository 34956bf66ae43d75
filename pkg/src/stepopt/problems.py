"""Problem instances: objective and sampled constraint evaluators.

An instance bundles callables for f, its derivatives, the M x N constraint
value matrix G(x), and per-entry constraint derivatives.  Two constructors
are provided: the sampled norm-design benchmark (squared Gaussian data by
default) and a fixed two-variable instance whose binary-style optimality
conditions hold at a point that is not a local minimizer.

Optional vectorized hooks let the solver assemble its linear algebra without
per-entry Python loops; module-level helpers fall back to loops when a hook
is absent.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ProblemInstance",
    "NormOptInstance",
    "make_norm_opt",
    "make_counterexample",
    "norm_opt_draw",
    "load_samples",
    "save_samples",
    "grad_columns",
    "weighted_constraint_hessian",
]


@dataclass(frozen=True, kw_only=True)
class ProblemInstance:
    """Smooth objective with an M x N matrix of sampled constraint values.

    Attributes
    ----------
    K, M, N : int
        Decision dimension, constraints per sample, sample count.
    f, grad_f, hess_f : callable
        Objective value (float), gradient (K,), Hessian (K, K) at x.
    G : callable
        Constraint value matrix (M, N) at x.
    grad_G, hess_G : callable
        Gradient (K,) and Hessian (K, K) of the (m, n) constraint entry;
        called as grad_G(x, m, n).
    grad_G_cols, weighted_hess_G, f_batch, G_batch : callable, optional
        Vectorized fast paths; see ``grad_columns`` and
        ``weighted_constraint_hessian`` for the loop fallbacks.
    """

    K: int
    M: int
    N: int
    f: Callable[[np.ndarray], float]
    grad_f: Callable[[np.ndarray], np.ndarray]
    hess_f: Callable[[np.ndarray], np.ndarray]
    G: Callable[[np.ndarray], np.ndarray]
    grad_G: Callable[[np.ndarray, int, int], np.ndarray]
    hess_G: Callable[[np.ndarray, int, int], np.ndarray]
    grad_G_cols: Optional[Callable] = None
    weighted_hess_G: Optional[Callable] = None
    f_batch: Optional[Callable] = None
    G_batch: Optional[Callable] = None

    def __post_init__(self):
        if self.K < 1 or self.M < 1 or self.N < 1:
            raise ValueError(f"dimensions must be positive, got K={self.K} M={self.M} N={self.N}")


@dataclass(frozen=True, kw_only=True)
class NormOptInstance(ProblemInstance):
    """Sampled norm-design benchmark instance.

    Minimizes lambda2*||x||^2 + sum_k(lambda1*max(-x_k, 0) - x_k) subject to
    at most s of the N sampled constraints sum_k xi_sq[n, m, k]*x_k^2 <= b
    being violated.  ``xi_sq`` holds the squared sample draws with shape
    (N, M, K); ``xi`` keeps the raw draws so files round-trip exactly.
    ``seed`` is None for instances loaded from a file.
    """

    xi: np.ndarray
    xi_sq: np.ndarray
    b: float
    lambda1: float
    lambda2: float
    seed: Optional[int]


def grad_columns(problem: ProblemInstance, x: np.ndarray, rows, cols) -> np.ndarray:
    """Stack grad_G(x, m, n) for the given (rows, cols) pairs as a (K, L) matrix."""
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    if problem.grad_G_cols is not None:
        return problem.grad_G_cols(x, rows, cols)
    out = np.empty((problem.K, rows.size))
    for j, (m, n) in enumerate(zip(rows, cols)):
        out[:, j] = problem.grad_G(x, int(m), int(n))
    return out


def weighted_constraint_hessian(problem: ProblemInstance, x, rows, cols, weights) -> np.ndarray:
    """Sum of weights[j] * hess_G(x, rows[j], cols[j]) as a (K, K) matrix."""
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    weights = np.asarray(weights, dtype=float)
    if problem.weighted_hess_G is not None:
        return problem.weighted_hess_G(x, rows, cols, weights)
    out = np.zeros((problem.K, problem.K))
    for m, n, w in zip(rows, cols, weights):
        out += w * problem.hess_G(x, int(m), int(n))
    return out


def _build_norm_opt(xi: np.ndarray, b: float, lambda1: float, lambda2: float,
                    seed: Optional[int]) -> NormOptInstance:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 3:
        raise ValueError("sample array must have shape (N, M, K)")
    N, M, K = xi.shape
    if not np.all(np.isfinite(xi)):
        raise ValueError("sample array has non-finite entries")
    if not b > 0:
        raise ValueError(f"threshold b must be positive, got {b}")
    xi_sq = xi ** 2

    def f(x):
        x = np.asarray(x, dtype=float)
        return float(lambda2 * x @ x + lambda1 * np.maximum(-x, 0.0).sum() - x.sum())

    def grad_f(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * lambda2 * x - 1.0 - lambda1 * (x < 0.0)

    def hess_f(x):
        return 2.0 * lambda2 * np.eye(K)

    def G(x):
        x = np.asarray(x, dtype=float)
        return np.einsum("nmk,k->mn", xi_sq, x * x) - b

    def grad_G(x, m, n):
        return 2.0 * xi_sq[n, m] * np.asarray(x, dtype=float)

    def hess_G(x, m, n):
        return np.diag(2.0 * xi_sq[n, m])

    def grad_G_cols(x, rows, cols):
        # columns of squared draws at the requested (m, n) pairs, times 2x
        return (2.0 * xi_sq[cols, rows, :] * np.asarray(x, dtype=float)).T

    def weighted_hess_G(x, rows, cols, weights):
        if len(weights) == 0:
            return np.zeros((K, K))
        return np.diag(2.0 * (np.asarray(weights, dtype=float) @ xi_sq[cols, rows, :]))

    def f_batch(X):
        X = np.asarray(X, dtype=float)
        return lambda2 * (X * X).sum(axis=1) + lambda1 * np.maximum(-X, 0.0).sum(axis=1) - X.sum(axis=1)

    def G_batch(X):
        X = np.asarray(X, dtype=float)
        return np.einsum("pk,nmk->pmn", X * X, xi_sq) - b

    return NormOptInstance(
        K=K, M=M, N=N,
        f=f, grad_f=grad_f, hess_f=hess_f,
        G=G, grad_G=grad_G, hess_G=hess_G,
        grad_G_cols=grad_G_cols, weighted_hess_G=weighted_hess_G,
        f_batch=f_batch, G_batch=G_batch,
        xi=xi, xi_sq=xi_sq, b=float(b),
        lambda1=float(lambda1), lambda2=float(lambda2), seed=seed,
    )


def make_norm_opt(K: int, M: int, N: int, *, b: float = 100.0,
                  lambda1: float = 0.5, lambda2: float = 0.5,
                  seed: int = 0) -> NormOptInstance:
    """Draw a seeded norm-design instance with i.i.d. standard normal samples.

    The raw draws are squared internally; identical (dims, seed) reproduce
    the instance bit for bit.
    """
    if K < 1 or M < 1 or N < 1:
        raise ValueError(f"dimensions must be positive, got K={K} M={M} N={N}")
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((N, M, K))
    return _build_norm_opt(xi, b, lambda1, lambda2, seed)


def norm_opt_draw(K: int, M: int, b: float = 100.0):
    """Sampler for fresh norm-design constraint values at a fixed point.

    Returns a callable draw(x, count, rng) -> (M, count) matrix whose
    (m, i) entry is sum_k xi_mk^2 x_k^2 - b for an independent draw i.
    """

    def draw(x, count, rng):
        x_sq = np.asarray(x, dtype=float) ** 2
        xi = rng.standard_normal((count, M, K))
        return np.einsum("imk,k->mi", xi * xi, x_sq) - b

    return draw


def make_counterexample() -> ProblemInstance:
    """Two-variable instance separating the two stationarity notions.

    f(x) = (x0 - 2)^2 with constraint row (x0^2 - x1, x1 - 1) and budget
    s = 1.  At x = (1, 1) the binary-style conditions hold with multipliers
    (1, 1) while the projection-based conditions fail; the global minimum
    f = 0 sits at x0 = 2, x1 >= 4 (second constraint violated, first kept).
    """

    def f(x):
        return float((x[0] - 2.0) ** 2)

    def grad_f(x):
        return np.array([2.0 * (x[0] - 2.0), 0.0])

    def hess_f(x):
        return np.array([[2.0, 0.0], [0.0, 0.0]])

    def G(x):
        return np.array([[x[0] ** 2 - x[1], x[1] - 1.0]])

    def grad_G(x, m, n):
        if n == 0:
            return np.array([2.0 * x[0], -1.0])
        return np.array([0.0, 1.0])

    def hess_G(x, m, n):
        if n == 0:
            return np.array([[2.0, 0.0], [0.0, 0.0]])
        return np.zeros((2, 2))

    def f_batch(X):
        X = np.asarray(X, dtype=float)
        return (X[:, 0] - 2.0) ** 2

    def G_batch(X):
        X = np.asarray(X, dtype=float)
        out = np.empty((X.shape[0], 1, 2))
        out[:, 0, 0] = X[:, 0] ** 2 - X[:, 1]
        out[:, 0, 1] = X[:, 1] - 1.0
        return out

    return ProblemInstance(
        K=2, M=1, N=2,
        f=f, grad_f=grad_f, hess_f=hess_f,
        G=G, grad_G=grad_G, hess_G=hess_G,
        f_batch=f_batch, G_batch=G_batch,
    )


def save_samples(instance_or_xi, path) -> None:
    """Write raw sample draws as CSV blocks, one sample per blank-line block.

    Each block has M lines of K comma-separated values; a '#' header records
    the dimensions.  Values are written with repr so a reload is bit-exact.
    """
    if isinstance(instance_or_xi, NormOptInstance):
        xi = instance_or_xi.xi
    else:
        xi = np.asarray(instance_or_xi, dtype=float)
    if xi.ndim != 3:
        raise ValueError("sample array must have shape (N, M, K)")
    N, M, K = xi.shape
    lines = [f"# norm-design samples: N={N} M={M} K={K}"]
    for n in range(N):
        if n:
            lines.append("")
        for m in range(M):
            lines.append(",".join(repr(float(v)) for v in xi[n, m]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_samples(path, *, b: float = 100.0, lambda1: float = 0.5,
                 lambda2: float = 0.5) -> NormOptInstance:
    """Build a norm-design instance from a sample CSV written by save_samples.

    The file holds raw (unsquared) draws: blocks of M lines with K
    comma-separated values each, blank lines between samples, '#' lines
    ignored.  Dimensions are inferred; blocks must be consistent.
    """
    with open(path) as fh:
        raw = fh.read()
    blocks: list[list[list[float]]] = []
    current: list[list[float]] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        if not stripped:
            if current:
                blocks.append(current)
                current = []
            continue
        try:
            row = [float(v) for v in stripped.split(",")]
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from None
        current.append(row)
    if current:
        blocks.append(current)
    if not blocks:
        raise ValueError(f"{path}: no sample blocks found")
    M = len(blocks[0])
    K = len(blocks[0][0])
    for i, block in enumerate(blocks):
        if len(block) != M or any(len(row) != K for row in block):
            raise ValueError(f"{path}: sample block {i} is ragged (expected {M} lines of {K} values)")
    xi = np.array(blocks, dtype=float)
    return _build_norm_opt(xi, b, lambda1, lambda2, seed=None)
