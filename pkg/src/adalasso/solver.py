"""Weighted Lasso by cyclic coordinate descent, certified by the KKT residual.

Solves ``min_b (1/2n)||y - X b||^2 + lam * sum_j w_j |b_j|``.  Coordinates with an
infinite weight are pinned at exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit

from .core import Estimate, RegressionProblem, WeightVector


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    weights: Optional[WeightVector] = None
    tol: float = 1e-8
    max_iter: int = 100_000
    warm_start: Optional[np.ndarray] = None
    debug: bool = False
    polish: bool = True

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lambda must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@njit(cache=True)
def _sweep(G, beta, grad, thresh, idx):
    """One cyclic pass over ``idx``; ``grad`` holds X^T(y - X beta)/n and is kept in sync."""
    p = G.shape[0]
    max_change = 0.0
    for t in range(idx.shape[0]):
        j = idx[t]
        gjj = G[j, j]
        old = beta[j]
        if gjj <= 0.0:
            new = 0.0
        else:
            z = grad[j] + gjj * old
            a = abs(z) - thresh[j]
            if a > 0.0:
                new = a / gjj if z > 0.0 else -a / gjj
            else:
                new = 0.0
        d = new - old
        if d != 0.0:
            for k in range(p):
                grad[k] -= d * G[k, j]
            beta[j] = new
            c = abs(d) * (gjj if gjj > 0.0 else 1.0)
            if c > max_change:
                max_change = c
    return max_change


def _weights_of(config: SolverConfig, p: int) -> np.ndarray:
    if config.weights is None:
        return np.ones(p)
    w = config.weights.w
    if w.size != p:
        raise ValueError(f"weights have length {w.size}, design has {p} columns")
    return w


def _kkt_from_grad(grad, beta, lam, w) -> float:
    nz = beta != 0
    res = np.zeros_like(beta)
    fin = np.isfinite(w)
    lw = np.where(fin, lam * np.where(fin, w, 0.0), np.inf)
    active = nz & fin
    res[active] = np.abs(grad[active] - np.sign(beta[active]) * lw[active])
    zero = ~nz & fin
    res[zero] = np.maximum(np.abs(grad[zero]) - lw[zero], 0.0)
    # a nonzero coefficient with infinite weight is infinitely far from optimal
    res[nz & ~fin] = np.inf
    return float(res.max()) if res.size else 0.0


def kkt_residual(problem: RegressionProblem, config: SolverConfig, beta) -> float:
    """Largest subgradient violation of ``beta``; zero exactly at an optimum."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (problem.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({problem.p},)")
    w = _weights_of(config, problem.p)
    grad = problem.X.T @ (problem.y - problem.X @ beta) / problem.n
    return _kkt_from_grad(grad, beta, config.lam, w)


def objective(problem: RegressionProblem, lam: float, w: np.ndarray, beta: np.ndarray) -> float:
    r = problem.y - problem.X @ beta
    nz = beta != 0
    pen = float(np.sum(w[nz] * np.abs(beta[nz]))) if nz.any() else 0.0
    return float(r @ r) / (2 * problem.n) + lam * pen


def _polish(G, zvec, beta, lam, w):
    """Solve the active-set stationarity equations exactly, keeping the sign pattern."""
    A = np.flatnonzero(beta)
    if A.size == 0:
        return None
    GA = G[np.ix_(A, A)]
    rhs = zvec[A] - lam * w[A] * np.sign(beta[A])
    try:
        cond = np.linalg.cond(GA)
        if not np.isfinite(cond) or cond > 1e10:
            return None
        bA = np.linalg.solve(GA, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.array_equal(np.sign(bA), np.sign(beta[A])):
        return None
    out = np.zeros_like(beta)
    out[A] = bA
    return out


def solve_weighted_lasso(problem: RegressionProblem, config: SolverConfig) -> Estimate:
    X, y = problem.X, problem.y
    n, p = X.shape
    if y.size != n:
        raise ValueError("response length does not match design rows")
    w = _weights_of(config, p)
    lam = float(config.lam)
    excluded = np.isinf(w)
    thresh = np.where(excluded, np.inf, lam * np.where(excluded, 0.0, w))
    free = np.flatnonzero(~excluded).astype(np.int64)

    G = np.ascontiguousarray(X.T @ X) / n
    zvec = X.T @ y / n

    beta = np.zeros(p)
    if config.warm_start is not None:
        ws = np.asarray(config.warm_start, dtype=float)
        if ws.shape != (p,):
            raise ValueError("warm start has the wrong length")
        beta[:] = ws
        beta[excluded] = 0.0
    grad = zvec - G @ beta

    trace = [] if config.debug else None
    if trace is not None:
        trace.append(objective(problem, lam, w, beta))

    def exact_grad(b):
        return X.T @ (y - X @ b) / n

    sweeps = 0
    kkt = np.inf
    converged = False
    scale = max(1.0, float(np.max(np.diag(G)))) if p else 1.0
    while sweeps < config.max_iter:
        _sweep(G, beta, grad, thresh, free)
        sweeps += 1
        if trace is not None:
            _check_monotone(trace, objective(problem, lam, w, beta))
        grad = exact_grad(beta)
        kkt = _kkt_from_grad(grad, beta, lam, w)
        if kkt <= config.tol:
            converged = True
            break
        active = np.flatnonzero(beta != 0).astype(np.int64)
        if active.size == 0 or active.size == free.size:
            continue
        # inner passes on the active set until it settles, then re-check everything
        while sweeps < config.max_iter:
            change = _sweep(G, beta, grad, thresh, active)
            sweeps += 1
            if trace is not None:
                _check_monotone(trace, objective(problem, lam, w, beta))
            if change <= 0.1 * config.tol * scale:
                break

    if config.polish and p:
        cand = _polish(G, zvec, beta, lam, w)
        if cand is not None:
            cgrad = exact_grad(cand)
            ckkt = _kkt_from_grad(cgrad, cand, lam, w)
            if ckkt <= kkt:
                beta, kkt = cand, ckkt
                converged = converged or kkt <= config.tol

    return Estimate(
        beta_hat=beta,
        kkt_residual=float(kkt),
        iterations=sweeps,
        converged=bool(converged),
        objective_trace=tuple(trace) if trace is not None else None,
    )


def _check_monotone(trace: list, value: float) -> None:
    prev = trace[-1]
    if value > prev + 1e-12 * max(1.0, abs(prev)):
        raise AssertionError(f"objective increased across a sweep: {prev!r} -> {value!r}")
    trace.append(value)


def solve_lasso(problem: RegressionProblem, lam: float, **kwargs) -> Estimate:
    """Standard (unit-weight) Lasso."""
    return solve_weighted_lasso(problem, SolverConfig(lam=lam, **kwargs))


@dataclass(frozen=True)
class Reduction:
    problem: RegressionProblem
    kept: np.ndarray
    scale: np.ndarray
    p: int
    recover: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)


def reduce_to_standard(problem: RegressionProblem, weights: WeightVector) -> Reduction:
    """Rewrite the weighted program as a standard Lasso on ``X W^{-1}``.

    Columns with infinite weight are dropped; ``recover`` maps a solution of the
    reduced problem back to the original coordinates (zeros where dropped).
    """
    w = weights.w
    if w.size != problem.p:
        raise ValueError("weights length does not match the design")
    kept = np.flatnonzero(np.isfinite(w))
    scale = w[kept]
    Xr = problem.X[:, kept] / scale
    truth = None
    if problem.truth is not None:
        from .core import TrueModel
        truth = TrueModel(problem.truth.beta_star[kept] * scale)
    reduced = RegressionProblem(Xr, problem.y, problem.sigma_eps, truth)
    p = problem.p

    def recover(beta0) -> np.ndarray:
        beta0 = np.asarray(beta0, dtype=float)
        if beta0.shape != (kept.size,):
            raise ValueError("reduced solution has the wrong length")
        out = np.zeros(p)
        out[kept] = beta0 / scale
        return out

    return Reduction(reduced, kept, scale, p, recover)
