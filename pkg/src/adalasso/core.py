"""Shared data model: regression problems, estimates, weights and constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

C2_FLOOR = 4.0 * math.sqrt(5.0 / 3.0)


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def support_of(beta: np.ndarray) -> tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(np.asarray(beta) != 0))


@dataclass(frozen=True)
class TrueModel:
    beta_star: np.ndarray
    support: tuple[int, ...] = field(init=False)
    s: int = field(init=False)
    beta_min: float = field(init=False)

    def __post_init__(self):
        beta = _frozen(self.beta_star)
        object.__setattr__(self, "beta_star", beta)
        supp = support_of(beta)
        object.__setattr__(self, "support", supp)
        object.__setattr__(self, "s", len(supp))
        bmin = float(np.min(np.abs(beta[list(supp)]))) if supp else 0.0
        object.__setattr__(self, "beta_min", bmin)

    @property
    def signs(self) -> np.ndarray:
        return np.sign(self.beta_star)


@dataclass(frozen=True)
class RegressionProblem:
    """Design ``X`` (n x p), response ``y`` and, when known, the noise level.

    ``truth`` is only populated for synthetic instances.
    """

    X: np.ndarray
    y: np.ndarray
    sigma_eps: Optional[float] = None
    truth: Optional[TrueModel] = None

    def __post_init__(self):
        X = np.asfortranarray(np.array(self.X, dtype=float, copy=True))
        if X.ndim != 2:
            raise ValueError(f"design must be 2-d, got shape {X.shape}")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", _frozen(np.ravel(self.y)))
        if self.sigma_eps is not None and not self.sigma_eps >= 0:
            raise ValueError("sigma_eps must be nonnegative")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def require_sigma(self) -> float:
        if self.sigma_eps is None:
            raise ValueError("noise level sigma_eps is required but not set on the problem")
        return float(self.sigma_eps)

    @property
    def noise(self) -> np.ndarray:
        """Realized noise y - X beta*; needs the true model."""
        if self.truth is None:
            raise ValueError("problem has no true model attached")
        return self.y - self.X @ self.truth.beta_star

    def with_response(self, y) -> "RegressionProblem":
        return RegressionProblem(self.X, y, self.sigma_eps, self.truth)


@dataclass(frozen=True)
class Estimate:
    beta_hat: np.ndarray
    kkt_residual: float
    iterations: int
    converged: bool
    objective_trace: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "beta_hat", _frozen(self.beta_hat))

    @property
    def support(self) -> tuple[int, ...]:
        return support_of(self.beta_hat)

    @property
    def signs(self) -> np.ndarray:
        return np.sign(self.beta_hat).astype(int)

    def to_dict(self) -> dict:
        return {
            "beta": [float(b) for b in self.beta_hat],
            "support": list(self.support),
            "kkt_residual": float(self.kkt_residual),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


class WeightVector:
    """Penalty weights in (0, +inf]; an infinite weight pins the coordinate at zero."""

    __slots__ = ("_w",)

    def __init__(self, w: Sequence[float]):
        arr = np.array(w, dtype=float, copy=True).ravel()
        if np.any(np.isnan(arr)):
            raise ValueError("weights must not be NaN")
        if np.any(arr <= 0):
            raise ValueError("weights must be strictly positive")
        arr.setflags(write=False)
        self._w = arr

    @classmethod
    def ones(cls, p: int) -> "WeightVector":
        return cls(np.ones(p))

    @property
    def w(self) -> np.ndarray:
        return self._w

    def __len__(self) -> int:
        return self._w.size

    def __repr__(self) -> str:
        return f"WeightVector({self._w.tolist()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, WeightVector) and np.array_equal(self._w, other._w)

    @property
    def excluded(self) -> np.ndarray:
        return np.isinf(self._w)

    def w_max(self, idx) -> float:
        vals = self._w[np.asarray(idx, dtype=int)]
        if np.any(np.isinf(vals)):
            raise ValueError("w_max over a set containing an infinite weight")
        return float(vals.max()) if vals.size else float("nan")

    def w_min(self, idx) -> float:
        vals = self._w[np.asarray(idx, dtype=int)]
        vals = vals[np.isfinite(vals)]
        return float(vals.min()) if vals.size else float("inf")

    def signed_on(self, support, signs) -> np.ndarray:
        """b = (sgn(beta*_i) w_i) over the support."""
        idx = np.asarray(support, dtype=int)
        vals = self._w[idx]
        if np.any(np.isinf(vals)):
            raise ValueError("infinite weight inside the support")
        return np.asarray(signs, dtype=float) * vals

    def to_list(self) -> list:
        return [None if math.isinf(v) else float(v) for v in self._w]


@dataclass(frozen=True)
class Constants:
    c0: float = 1.0
    C2: float = C2_FLOOR + 0.1
    B: float = math.sqrt(24.0)
    eta: float = 0.5
    M: float = 8.0
    k0: float = 3.0
    tol: float = 1e-8
    max_iter: int = 100_000

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if not self.C2 > C2_FLOOR:
            raise ValueError(f"C2 must exceed 4*sqrt(5/3) = {C2_FLOOR:.6f}")
        if not self.B > 0:
            raise ValueError("B must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if not self.M >= 4.0 / self.eta:
            raise ValueError("M must be at least 4/eta")
        if not self.k0 > 0:
            raise ValueError("k0 must be positive")
        if not self.tol > 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter at least 1")


def validate_problem(problem: RegressionProblem, constants: Constants | None = None,
                     column_norm_bound: bool = False) -> list[str]:
    """Return a list of human-readable violations; empty when the problem is valid."""
    out = []
    X, y = problem.X, problem.y
    n, p = X.shape
    if n < 1 or p < 1:
        out.append(f"empty design of shape {X.shape}")
    if y.size != n:
        out.append("y length mismatch")
    bad = np.argwhere(~np.isfinite(X))
    for i, j in bad[:20]:
        out.append(f"non-finite entry at ({int(i)},{int(j)})")
    for i in np.flatnonzero(~np.isfinite(y))[:20]:
        out.append(f"non-finite response at {int(i)}")
    if column_norm_bound and n >= 1 and not bad.size:
        c0 = (constants or Constants()).c0
        norms = np.linalg.norm(X, axis=0)
        limit = c0 * math.sqrt(n)
        # relative slack only absorbs rounding in the norm computation
        for j in np.flatnonzero(norms > limit * (1 + 1e-12)):
            out.append(f"column {int(j)} norm {norms[j]:.6g} exceeds c0*sqrt(n) = {limit:.6g}")
    return out


@dataclass(frozen=True)
class TruthDiff:
    delta_S_inf: float
    delta_Sc_inf: float
    support_exact: bool
    signs_exact: bool


def diff_against_truth(estimate: Estimate | np.ndarray, truth: TrueModel) -> TruthDiff:
    beta_hat = estimate.beta_hat if isinstance(estimate, Estimate) else np.asarray(estimate, float)
    if beta_hat.shape != truth.beta_star.shape:
        raise ValueError("estimate and truth have different lengths")
    delta = beta_hat - truth.beta_star
    in_s = np.zeros(delta.size, dtype=bool)
    in_s[list(truth.support)] = True
    dS = float(np.max(np.abs(delta[in_s]))) if in_s.any() else 0.0
    dSc = float(np.max(np.abs(delta[~in_s]))) if (~in_s).any() else 0.0
    return TruthDiff(
        delta_S_inf=dS,
        delta_Sc_inf=dSc,
        support_exact=support_of(beta_hat) == truth.support,
        signs_exact=bool(np.array_equal(np.sign(beta_hat), np.sign(truth.beta_star))),
    )
