"""Synthetic designs, covariance families, sparse signals and graphical-model samples.

All generators are pure functions of their spec and seed.  Randomness comes from
numpy's counter-based Philox bit generator; independent streams for parallel
replicates are split off a master seed with ``SeedSequence.spawn``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np

from .core import RegressionProblem, TrueModel

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def spawn_seeds(master_seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(count)


def unit_diagonal(S: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diag(S))
    out = S / np.outer(d, d)
    np.fill_diagonal(out, 1.0)
    return (out + out.T) / 2


def check_pd(S: np.ndarray, what: str = "covariance") -> float:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{what} must be square")
    if not np.allclose(S, S.T, atol=1e-12, rtol=0):
        raise ValueError(f"{what} is not symmetric")
    lam = float(np.linalg.eigvalsh(S)[0])
    if not lam > 0:
        raise ValueError(f"{what} is not positive definite (smallest eigenvalue {lam:.3g})")
    return lam


def sym_sqrt(S: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(S)
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


@dataclass(frozen=True)
class CovarianceSpec:
    kind: Literal["identity", "equicorrelation", "toeplitz", "tridiagonal_precision", "custom"]
    p: int
    rho: float = 0.0
    a: float = 0.0
    custom: Optional[np.ndarray] = None

    def matrix(self) -> np.ndarray:
        p = self.p
        if p < 1:
            raise ValueError("p must be positive")
        if self.kind == "identity":
            S = np.eye(p)
        elif self.kind == "equicorrelation":
            S = np.full((p, p), float(self.rho))
            np.fill_diagonal(S, 1.0)
        elif self.kind == "toeplitz":
            idx = np.arange(p)
            S = float(self.rho) ** np.abs(idx[:, None] - idx[None, :])
        elif self.kind == "tridiagonal_precision":
            Q = np.eye(p) + self.a * (np.eye(p, k=1) + np.eye(p, k=-1))
            check_pd(Q, "precision")
            S = np.linalg.inv(Q)
            S = (S + S.T) / 2
        elif self.kind == "custom":
            if self.custom is None:
                raise ValueError("custom covariance needs a matrix")
            S = np.array(self.custom, dtype=float)
            if S.shape != (p, p):
                raise ValueError("custom matrix has the wrong shape")
        else:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        check_pd(S)
        return unit_diagonal(S)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "p": self.p}
        if self.kind in ("equicorrelation", "toeplitz"):
            d["rho"] = self.rho
        if self.kind == "tridiagonal_precision":
            d["a"] = self.a
        if self.kind == "custom":
            d["matrix"] = np.asarray(self.custom).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CovarianceSpec":
        kind = d["kind"]
        if kind == "irrepresentable_violating":
            return irrepresentable_violating_design(int(d["p"]), int(d["s"]), float(d.get("rho", 0.55)))
        custom = np.asarray(d["matrix"], float) if "matrix" in d else None
        return cls(kind, int(d["p"]), rho=float(d.get("rho", 0.0)), a=float(d.get("a", 0.0)), custom=custom)


@dataclass(frozen=True)
class SignalSpec:
    s: int
    beta_min: float
    magnitude: Literal["fixed", "uniform"] = "fixed"
    b_max: Optional[float] = None
    sign_pattern: Literal["random", "all_positive"] = "random"
    support_placement: Literal["random", "first_s"] = "first_s"

    def to_dict(self) -> dict:
        return {
            "s": self.s, "beta_min": self.beta_min, "magnitude": self.magnitude,
            "b_max": self.b_max, "sign_pattern": self.sign_pattern,
            "support_placement": self.support_placement,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SignalSpec":
        return cls(
            s=int(d["s"]), beta_min=float(d["beta_min"]),
            magnitude=d.get("magnitude", "fixed"), b_max=d.get("b_max"),
            sign_pattern=d.get("sign_pattern", "random"),
            support_placement=d.get("support_placement", "first_s"),
        )


def gen_random_design(spec: CovarianceSpec, n: int, seed: SeedLike) -> np.ndarray:
    """n x p matrix with i.i.d. N(0, Sigma) rows, built as Z @ Sigma^{1/2}."""
    if n < 1:
        raise ValueError("n must be positive")
    root = sym_sqrt(spec.matrix())
    Z = make_rng(seed).standard_normal((n, spec.p))
    return Z @ root


def design_with_gram(Sigma: np.ndarray, n: int, seed: SeedLike) -> np.ndarray:
    """A design whose empirical Gram X^T X / n equals ``Sigma`` up to rounding (needs n >= p)."""
    p = Sigma.shape[0]
    if n < p:
        raise ValueError("an exact Gram needs n >= p")
    Z = make_rng(seed).standard_normal((n, p))
    Qm, _ = np.linalg.qr(Z)
    return np.sqrt(n) * Qm @ sym_sqrt(Sigma)


def gen_beta(p: int, signal: SignalSpec, rng: np.random.Generator) -> np.ndarray:
    s = signal.s
    if not 0 <= s <= p:
        raise ValueError(f"sparsity s={s} must lie in [0, p={p}]")
    if s and not signal.beta_min > 0:
        raise ValueError("beta_min must be positive")
    if signal.support_placement == "first_s":
        supp = np.arange(s)
    else:
        supp = np.sort(rng.choice(p, size=s, replace=False))
    if signal.magnitude == "fixed":
        mag = np.full(s, signal.beta_min)
    else:
        hi = signal.b_max if signal.b_max is not None else 2 * signal.beta_min
        mag = rng.uniform(signal.beta_min, hi, size=s)
    if signal.sign_pattern == "all_positive":
        sgn = np.ones(s)
    else:
        sgn = rng.choice([-1.0, 1.0], size=s)
    beta = np.zeros(p)
    beta[supp] = sgn * mag
    return beta


def gen_problem(design: np.ndarray, signal: SignalSpec, sigma_eps: float, seed: SeedLike) -> RegressionProblem:
    """y = X beta + eps with eps ~ N(0, sigma_eps^2 I); the true model is attached."""
    X = np.asarray(design, dtype=float)
    n, p = X.shape
    if signal.s > p:
        raise ValueError("s exceeds p")
    rng = make_rng(seed)
    beta = gen_beta(p, signal, rng)
    eps = sigma_eps * rng.standard_normal(n)
    return RegressionProblem(X, X @ beta + eps, sigma_eps=sigma_eps, truth=TrueModel(beta))


def gen_ggm_samples(precision, n: int, seed: SeedLike):
    """Samples from N(0, Q^{-1}) with Sigma rescaled to unit diagonal.

    Returns ``(samples, rescaled)`` where ``rescaled`` is the precision model of the
    unit-diagonal covariance actually sampled from.
    """
    from .ggm import PrecisionModel

    Q = np.asarray(precision.Q if isinstance(precision, PrecisionModel) else precision, float)
    check_pd(Q, "precision")
    S = np.linalg.inv(Q)
    d = np.sqrt(np.diag(S))
    # Sigma' = D^{-1/2} Sigma D^{-1/2}  <=>  Q' = D^{1/2} Q D^{1/2}
    Qr = Q * np.outer(d, d)
    Qr = (Qr + Qr.T) / 2
    Sr = unit_diagonal(S)
    Z = make_rng(seed).standard_normal((n, Q.shape[0]))
    return Z @ sym_sqrt(Sr), PrecisionModel(Qr)


def irrepresentable_violating_design(p: int, s: int, rho: float = 0.55) -> CovarianceSpec:
    """Covariance where the first s variables are independent and variable s (0-based)
    loads ``rho`` on each of them; every other variable is independent noise.

    The irrepresentable norm for S = first s coordinates is ``s * rho``; the
    construction is rejected unless that exceeds 1 while Sigma stays positive definite.
    """
    from .conditions import irrepresentable_margin, lambda_min_subset

    if p < s + 1:
        raise ValueError("need p >= s + 1")
    if s * rho <= 1:
        raise ValueError(f"s*rho = {s * rho:.3g} does not exceed 1; design would not violate the condition")
    if s * rho * rho >= 1:
        raise ValueError("loading too strong: covariance would not be positive definite")
    S = np.eye(p)
    S[s, :s] = rho
    S[:s, s] = rho
    spec = CovarianceSpec("custom", p, custom=S)
    Sigma = spec.matrix()
    supp = list(range(s))
    norm = irrepresentable_margin(Sigma, supp, eta=0.0, gram=True).norm
    lam2s = lambda_min_subset(Sigma, min(2 * s, p), gram=True)
    if not (norm > 1 and lam2s > 1e-6):
        raise ValueError(f"construction failed verification: norm={norm:.4g}, lambda_min(2s)={lam2s:.3g}")
    return spec
