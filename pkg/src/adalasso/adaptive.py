"""Two-stage adaptive Lasso: initial Lasso, weights, thresholded sparsity, weighted refit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conditions import lambda_init_formula, re_constant
from .core import Constants, Estimate, RegressionProblem, WeightVector
from .solver import SolverConfig, solve_lasso, solve_weighted_lasso


@dataclass(frozen=True)
class AdaptiveConfig:
    constants: Constants = field(default_factory=Constants)
    lambda_init: Optional[float] = None
    lambda_n: Optional[float] = None
    lambda_n_position: float = 0.0
    # restricted-eigenvalue surrogate used in the lambda_n range; computed when None
    K: Optional[float] = None
    re_budget: int = 3
    re_iters: int = 60
    re_subsets: int = 12
    re_max_subsets: int = 48
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lambda_n_position <= 1.0:
            raise ValueError("lambda_n_position must lie in [0, 1]")
        if self.lambda_init is not None and not self.lambda_init > 0:
            raise ValueError("lambda_init must be positive")
        if self.lambda_n is not None and not self.lambda_n >= 0:
            raise ValueError("lambda_n must be nonnegative")
        if self.K is not None and not self.K > 0:
            raise ValueError("K must be positive")


@dataclass(frozen=True)
class LambdaRange:
    lo: float
    hi: float

    @property
    def degenerate(self) -> bool:
        return self.lo > self.hi

    def at(self, position: float) -> float:
        if self.degenerate:
            return self.lo
        return self.lo + position * (self.hi - self.lo)


@dataclass(frozen=True)
class AdaptiveTrace:
    beta_init: np.ndarray
    lambda_init_used: float
    weights: WeightVector
    s_bar: int
    s_bar_set: tuple
    lambda_n_range: LambdaRange
    lambda_n_used: float
    final: Estimate
    K_used: float = math.nan
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "beta_init": [float(b) for b in self.beta_init],
            "lambda_init_used": float(self.lambda_init_used),
            "weights": self.weights.to_list(),
            "s_bar": int(self.s_bar),
            "s_bar_set": [int(j) for j in self.s_bar_set],
            "lambda_n_range": {
                "lo": float(self.lambda_n_range.lo),
                "hi": float(self.lambda_n_range.hi),
                "degenerate": self.lambda_n_range.degenerate,
            },
            "lambda_n_used": float(self.lambda_n_used),
            "K_used": float(self.K_used) if math.isfinite(self.K_used) else None,
            "final": self.final.to_dict(),
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class InitialFit:
    beta_init: np.ndarray
    lambda_init: float
    estimate: Estimate


def fit_initial(problem: RegressionProblem, config: AdaptiveConfig) -> InitialFit:
    c = config.constants
    if config.lambda_init is not None:
        lam = float(config.lambda_init)
    else:
        lam = lambda_init_formula(c, problem.require_sigma(), problem.n, problem.p)
    est = solve_lasso(problem, lam, tol=c.tol, max_iter=c.max_iter)
    return InitialFit(np.array(est.beta_hat), lam, est)


def compute_weights(beta_init) -> WeightVector:
    """w_j = max(1/|b_j|, 1), and +inf where b_j = 0."""
    a = np.abs(np.asarray(beta_init, dtype=float))
    # subnormal coefficients overflow to an infinite weight, which is the limit anyway
    with np.errstate(divide="ignore", over="ignore"):
        w = np.where(a > 0, np.maximum(1.0 / a, 1.0), np.inf)
    return WeightVector(w)


def threshold_support(beta_init, lambda_init: float) -> tuple:
    """Indices with |b_j| > 4 lambda_init (strict)."""
    if lambda_init < 0:
        raise ValueError("lambda_init must be nonnegative")
    a = np.abs(np.asarray(beta_init, dtype=float))
    return tuple(int(j) for j in np.flatnonzero(a > 4.0 * lambda_init))


def lambda_n_range(s_bar: int, K: float, constants: Constants, lambda_init: float, p: int, n: int,
                   s_for_log: int, sigma: float) -> LambdaRange:
    """lo = (64 K^2 / eta) F, hi = 16 M K F with F = c0 sigma lambda_init sqrt(s_bar) sqrt(2 log(p - s) / n)."""
    if s_bar < 1:
        raise ValueError("s_bar must be at least 1")
    if not K > 0:
        raise ValueError("K must be positive")
    if p - s_for_log < 2:
        raise ValueError(f"need p - s >= 2, got p={p}, s={s_for_log}")
    if n < 1 or sigma < 0 or lambda_init < 0:
        raise ValueError("need n >= 1, sigma >= 0 and lambda_init >= 0")
    c = constants
    F = c.c0 * sigma * lambda_init * math.sqrt(s_bar) * math.sqrt(2.0 * math.log(p - s_for_log) / n)
    return LambdaRange(64.0 * K * K / c.eta * F, 16.0 * c.M * K * F)


def _surrogate_K(problem: RegressionProblem, s_bar: int, config: AdaptiveConfig, notes: list) -> float:
    p = problem.p
    if p < 2:
        notes.append("p < 2: restricted-eigenvalue surrogate set to 1")
        return 1.0
    s = min(max(s_bar, 1), p // 2)
    if s != s_bar:
        notes.append(f"restricted-eigenvalue surrogate evaluated at s={s} (s_bar={s_bar})")
    r = re_constant(problem.X, s, s, config.constants.k0, budget=config.re_budget, iters=config.re_iters,
                    sample_subsets=config.re_subsets, max_subsets=config.re_max_subsets, seed=config.seed)
    if not math.isfinite(r.K_search):
        notes.append("restricted-eigenvalue search found a null cone direction: K is infinite")
    return r.K_search


def adaptive_lasso(problem: RegressionProblem, config: AdaptiveConfig = AdaptiveConfig()) -> AdaptiveTrace:
    c = config.constants
    notes: list[str] = []
    init = fit_initial(problem, config)
    if not init.estimate.converged:
        notes.append("initial Lasso did not converge")
    weights = compute_weights(init.beta_init)
    sbar_set = threshold_support(init.beta_init, init.lambda_init)
    s_bar = len(sbar_set)
    p, n = problem.p, problem.n

    if config.lambda_n is not None:
        lam_n = float(config.lambda_n)
        rng = LambdaRange(lam_n, lam_n)
        K = config.K if config.K is not None else math.nan
    else:
        sigma = problem.require_sigma()
        s_eff = max(s_bar, 1)
        if s_bar == 0:
            notes.append("empty thresholded set: s_bar clamped to 1 in the lambda_n range")
        s_log = min(s_bar, max(p - 2, 0))
        if s_log != s_bar:
            notes.append(f"log(p - s) evaluated with s={s_log} to keep p - s >= 2")
        K = config.K if config.K is not None else _surrogate_K(problem, s_bar, config, notes)
        if p - s_log < 2:
            # too few columns for the log factor; the range collapses to the lower end of its formula
            notes.append("p < 2: lambda_n range uses log 2")
            F_p = s_log + 2
        else:
            F_p = p
        rng = lambda_n_range(s_eff, K, c, init.lambda_init, F_p, n, s_log, sigma)
        if rng.degenerate:
            notes.append(f"degenerate lambda_n range [{rng.lo:.6g}, {rng.hi:.6g}]: using the lower endpoint")
        lam_n = rng.at(config.lambda_n_position)

    final = solve_weighted_lasso(problem, SolverConfig(lam=lam_n, weights=weights, tol=c.tol, max_iter=c.max_iter))
    if not final.converged:
        notes.append("weighted Lasso did not converge")
    return AdaptiveTrace(init.beta_init, init.lambda_init, weights, s_bar, sbar_set, rng, lam_n, final,
                         float(K), tuple(notes))
