"""Design-condition diagnostics for sparse recovery.

Every function accepts a design ``X`` (n x p) and works with its Gram matrix
``X^T X / n``; pass ``gram=True`` to hand in a population covariance instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import Constants, RegressionProblem, WeightVector

DEFAULT_CAP = 10**6
_CHUNK = 20_000


class EnumerationCapExceeded(ValueError):
    """Raised when exhaustive subset enumeration exceeds the configured cap."""


def _gram(X, gram: bool = False) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if gram:
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise ValueError("a Gram/covariance matrix must be square")
        return X
    return X.T @ X / X.shape[0]


def _as_index(S, p: int) -> np.ndarray:
    idx = np.asarray(sorted(int(i) for i in S), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= p):
        raise ValueError("support index out of range")
    return idx


def _complement(S: np.ndarray, p: int) -> np.ndarray:
    mask = np.ones(p, dtype=bool)
    mask[S] = False
    return np.flatnonzero(mask)


def _subset_batches(p: int, k: int, cap: int, sample: Optional[int], rng) -> Iterable[np.ndarray]:
    total = math.comb(p, k)
    if total <= cap:
        it = itertools.combinations(range(p), k)
        while True:
            block = list(itertools.islice(it, _CHUNK))
            if not block:
                return
            yield np.asarray(block, dtype=int)
    elif sample:
        rng = rng if rng is not None else np.random.default_rng(0)
        keys = rng.random((sample, p))
        yield np.sort(np.argsort(keys, axis=1)[:, :k], axis=1)
    else:
        raise EnumerationCapExceeded(
            f"C({p},{k}) = {total} subsets exceeds the cap {cap}; pass sample=<count> for sampled mode"
        )


def _sparse_eig(G: np.ndarray, k: int, which: str, cap: int, sample, rng) -> float:
    p = G.shape[0]
    if not 1 <= k <= p:
        raise ValueError(f"subset size {k} outside [1, {p}]")
    best = math.inf if which == "min" else -math.inf
    for block in _subset_batches(p, k, cap, sample, rng):
        sub = G[block[:, :, None], block[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        if which == "min":
            best = min(best, float(ev[:, 0].min()))
        else:
            best = max(best, float(ev[:, -1].max()))
    return best


def lambda_min_subset(X, s: int, cap: int = DEFAULT_CAP, gram: bool = False,
                      sample: Optional[int] = None, seed: int = 0) -> float:
    """Smallest eigenvalue of X_J^T X_J / n over all |J| <= s.

    By eigenvalue interlacing the minimum is attained at |J| = s.  In sampled
    mode the result only upper-bounds the true value.
    """
    G = _gram(X, gram)
    k = min(int(s), G.shape[0])
    return _sparse_eig(G, k, "min", cap, sample, np.random.default_rng(seed))


def lambda_max_subset(X, s: int, cap: int = DEFAULT_CAP, gram: bool = False,
                      sample: Optional[int] = None, seed: int = 0) -> float:
    G = _gram(X, gram)
    k = min(int(s), G.shape[0])
    return _sparse_eig(G, k, "max", cap, sample, np.random.default_rng(seed))


def lambda_min_population(Sigma, s: int, cap: int = DEFAULT_CAP) -> float:
    """Random-design variant: 16/17 times the sparse minimum eigenvalue of Sigma."""
    return 16.0 / 17.0 * lambda_min_subset(Sigma, s, cap=cap, gram=True)


# ---------------------------------------------------------------- RE constant


@dataclass(frozen=True)
class REConstant:
    """Bracket on the restricted-eigenvalue constant K(s, m, k0).

    ``K_search`` comes from the best cone vector found by multi-start projected
    gradient; any feasible vector certifies ``K >= K_search``.  ``K_upper`` is a
    certified bound ``K <= K_upper`` (infinite when no certificate applies).
    """

    K_search: float
    K_upper: float
    kind: str
    s: int
    m: int
    k0: float
    n_subsets: int
    sampled: bool
    ratio_search: float = field(repr=False, default=math.nan)

    @property
    def value(self) -> float:
        return self.K_upper if math.isfinite(self.K_upper) else self.K_search

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = self.value
        for key in ("K_search", "K_upper", "value", "ratio_search"):
            if not math.isfinite(d[key]):
                d[key] = None
        return d


def _l1_ball_project(V: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Column-wise Euclidean projection of V onto {||v||_1 <= radius}."""
    A = np.abs(V)
    over = A.sum(axis=0) > radius
    if not over.any():
        return V
    Vo, Ao, r = V[:, over], A[:, over], radius[over]
    U = -np.sort(-Ao, axis=0)
    css = np.cumsum(U, axis=0)
    k = np.arange(1, U.shape[0] + 1)[:, None]
    ok = U - (css - r) / k > 0
    rho = U.shape[0] - 1 - np.argmax(ok[::-1], axis=0)
    theta = (css[rho, np.arange(U.shape[1])] - r) / (rho + 1)
    theta = np.maximum(theta, 0.0)
    out = V.copy()
    out[:, over] = np.sign(Vo) * np.maximum(Ao - theta, 0.0)
    return out


def _denominator_mask(Gam: np.ndarray, J0mask: np.ndarray, m: int) -> np.ndarray:
    """J0 together with the m largest |gamma| entries outside J0, per column."""
    if m <= 0:
        return J0mask
    A = np.where(J0mask, -np.inf, np.abs(Gam))
    p = Gam.shape[0]
    mm = min(m, p)
    top = np.argpartition(-A, mm - 1, axis=0)[:mm]
    T = J0mask.copy()
    np.put_along_axis(T, top, True, axis=0)
    return T


def _cone_ratio(G, Gam, J0mask, m):
    T = _denominator_mask(Gam, J0mask, m)
    den = np.sum(np.where(T, Gam, 0.0) ** 2, axis=0)
    num = np.einsum("ij,ij->j", Gam, G @ Gam)
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.where(den > 0, num / den, np.inf)
    return R, T, den


def _cone_search(G, J0s: np.ndarray, m: int, k0: float, starts: int, iters: int, rng) -> float:
    """Smallest Rayleigh-type ratio ||X g||^2 / (n ||g_T||^2) found over the cones of ``J0s``."""
    p = G.shape[0]
    nJ, s = J0s.shape
    L = max(float(np.linalg.eigvalsh(G)[-1]), 1e-12)
    extra = m if m > 0 else s
    cols, masks = [], []
    for J0 in J0s:
        mask = np.zeros(p, dtype=bool)
        mask[J0] = True
        # start 1: smallest eigenvector of G on J0 (complement zero, always feasible)
        w, V = np.linalg.eigh(G[np.ix_(J0, J0)])
        g = np.zeros(p)
        g[J0] = V[:, 0]
        cols.append(g)
        masks.append(mask)
        # start 2: smallest eigenvector on J0 plus its most correlated neighbours
        rest = np.flatnonzero(~mask)
        if rest.size:
            corr = np.max(np.abs(G[np.ix_(J0, rest)]), axis=0)
            nb = rest[np.argsort(-corr, kind="stable")[:extra]]
            idx = np.concatenate([J0, nb])
            w, V = np.linalg.eigh(G[np.ix_(idx, idx)])
            g = np.zeros(p)
            g[idx] = V[:, 0]
            cols.append(g)
            masks.append(mask)
        for _ in range(max(starts - 2, 0)):
            g = rng.standard_normal(p)
            cols.append(g)
            masks.append(mask)
    Gam = np.stack(cols, axis=1)
    M = np.stack(masks, axis=1)

    def feasible(Gm):
        comp = np.where(M, 0.0, Gm)
        radius = k0 * np.sum(np.abs(np.where(M, Gm, 0.0)), axis=0)
        comp = _l1_ball_project(comp, radius)
        return np.where(M, Gm, comp)

    Gam = feasible(Gam)
    R, T, den = _cone_ratio(G, Gam, M, m)
    best = float(np.min(R))
    step = 1.0 / L
    for _ in range(iters):
        Gam = Gam / np.sqrt(np.maximum(den, 1e-300))
        R = np.where(np.isfinite(R), R, 0.0)
        grad = G @ Gam - R * np.where(T, Gam, 0.0)
        Gam = feasible(Gam - step * grad)
        R, T, den = _cone_ratio(G, Gam, M, m)
        best = min(best, float(np.min(R)))
    return max(best, 0.0)


def re_constant(X, s: int, m: int = 0, k0: float = 3.0, budget: int = 4, gram: bool = False,
                cap: int = DEFAULT_CAP, max_subsets: int = 2000, sample_subsets: int = 24,
                iters: int = 150, seed: int = 0, focus: Sequence[Sequence[int]] = ()) -> REConstant:
    """Bracket K(s, m, k0) (``m = 0`` gives the m-free variant with denominator ||g_J0||).

    J0 ranges over all subsets of size s when there are at most ``max_subsets``
    of them, otherwise over ``sample_subsets`` random and correlation-greedy
    subsets plus any ``focus`` subsets supplied by the caller.
    """
    G = _gram(X, gram)
    p = G.shape[0]
    s, m = int(s), int(m)
    if s < 1 or s > p:
        raise ValueError("s must lie in [1, p]")
    if s + m > p:
        raise ValueError(f"infeasible parameters: s + m = {s + m} > p = {p}")
    if k0 < 0:
        raise ValueError("k0 must be nonnegative")
    rng = np.random.default_rng(seed)

    total = math.comb(p, s)
    sampled = total > max_subsets
    if not sampled:
        J0s = np.asarray(list(itertools.combinations(range(p), s)), dtype=int)
    else:
        picks = [np.sort(np.asarray(f, dtype=int))[:s] for f in focus if len(f) >= s]
        keys = rng.random((sample_subsets, p))
        picks.extend(np.sort(np.argsort(keys, axis=1)[:, :s], axis=1))
        absG = np.abs(G - np.diag(np.diag(G)))
        for j in rng.choice(p, size=min(sample_subsets, p), replace=False):
            nb = np.argsort(-absG[j], kind="stable")[: s - 1]
            picks.append(np.sort(np.concatenate([[j], nb])))
        J0s = np.unique(np.asarray(picks, dtype=int), axis=0)

    if k0 == 0:
        # the cone collapses to vectors supported on J0: an exact sparse eigenvalue
        ratio = _sparse_eig(G, s, "min", cap, None if not sampled else len(J0s), rng) \
            if not sampled else float(min(np.linalg.eigvalsh(G[np.ix_(J, J)])[0] for J in J0s))
    else:
        ratio = _cone_search(G, J0s, m, k0, max(budget, 2), iters, rng)
    K_search = 1.0 / math.sqrt(ratio) if ratio > 0 else math.inf

    lower = 0.0
    full_min = float(np.linalg.eigvalsh(G)[0])
    if full_min > 0:
        lower = full_min
    if k0 == 0 and not sampled:
        lower = max(lower, ratio)
    mb = m if m > 0 else s
    if k0 > 0 and s + mb <= p:
        try:
            phi_min = lambda_min_subset(G, s + mb, cap=cap, gram=True)
            phi_max = lambda_max_subset(G, mb, cap=cap, gram=True)
            b = math.sqrt(max(phi_min, 0.0)) - k0 * math.sqrt(s * phi_max / mb)
            if b > 0:
                lower = max(lower, b * b)
        except EnumerationCapExceeded:
            pass
    K_upper = 1.0 / math.sqrt(lower) if lower > 0 else math.inf
    if math.isfinite(K_upper) and K_upper <= K_search * (1 + 1e-6):
        kind = "exact"
        K_upper = max(K_upper, K_search)
    elif math.isfinite(K_upper):
        kind = "upper_bound"
    else:
        kind = "search"
    return REConstant(K_search, K_upper, kind, s, m, float(k0), int(len(J0s)), bool(sampled), ratio)


# ------------------------------------------------------ restricted orthogonality


@dataclass(frozen=True)
class Orthogonality:
    theta: float
    exact: bool
    n_pairs: int


def restricted_orthogonality(X, s: int, s_prime: int, gram: bool = False, cap: int = DEFAULT_CAP,
                             sample: Optional[int] = None, seed: int = 0) -> Orthogonality:
    """Largest singular value of the cross-Gram X_T^T X_T' / n over disjoint
    T, T' with |T| <= s and |T'| <= s_prime."""
    G = _gram(X, gram)
    p = G.shape[0]
    s, sp = int(s), int(s_prime)
    if s < 1 or sp < 1 or s + sp > p:
        raise ValueError("need s, s_prime >= 1 and s + s_prime <= p")
    if min(s, sp) == 1:
        # the cross-Gram is a single row: its norm is the l2 norm of the k largest entries
        k = max(s, sp)
        off = np.abs(G - np.diag(np.diag(G)))
        top = -np.sort(-off, axis=1)[:, :k]
        return Orthogonality(float(np.sqrt(np.max(np.sum(top**2, axis=1)))), True, p * math.comb(p - 1, k))
    total = math.comb(p, s) * math.comb(p - s, sp)
    rng = np.random.default_rng(seed)
    best = 0.0
    if total <= cap:
        pairs_T, pairs_U = [], []
        for T in itertools.combinations(range(p), s):
            rest = [j for j in range(p) if j not in T]
            for U in itertools.combinations(rest, sp):
                pairs_T.append(T)
                pairs_U.append(U)
                if len(pairs_T) >= _CHUNK:
                    best = max(best, _cross_norm(G, pairs_T, pairs_U))
                    pairs_T, pairs_U = [], []
        if pairs_T:
            best = max(best, _cross_norm(G, pairs_T, pairs_U))
        return Orthogonality(best, True, total)
    if not sample:
        raise EnumerationCapExceeded(f"{total} subset pairs exceed the cap {cap}; pass sample=<count>")
    perm = np.argsort(rng.random((sample, p)), axis=1)
    best = _cross_norm(G, perm[:, :s], perm[:, s:s + sp])
    return Orthogonality(best, False, int(sample))


def _cross_norm(G, Ts, Us) -> float:
    Ts = np.asarray(Ts, dtype=int)
    Us = np.asarray(Us, dtype=int)
    sub = G[Ts[:, :, None], Us[:, None, :]]
    return float(np.linalg.svd(sub, compute_uv=False)[:, 0].max())


# --------------------------------------------------------------- incoherence


def _regression_matrix(G, S, Sc) -> np.ndarray:
    """G_{Sc,S} G_{S,S}^{-1}, i.e. X_{Sc}^T X_S (X_S^T X_S)^{-1}."""
    GSS = G[np.ix_(S, S)]
    if S.size and np.linalg.cond(GSS) > 1e12:
        raise np.linalg.LinAlgError("X_S^T X_S is singular")
    return np.linalg.solve(GSS, G[np.ix_(S, Sc)]).T


@dataclass(frozen=True)
class RnResult:
    value: float
    c0: float
    lambda_min_s: Optional[float]
    theta_1s: Optional[float]
    bound_c0: Optional[float]
    bound_theta: Optional[float]
    violates_c0: bool
    violates_theta: bool


def r_n(X, S, gram: bool = False, c0: Optional[float] = None, check_bounds: bool = True,
        cap: int = DEFAULT_CAP, rtol: float = 1e-10) -> RnResult:
    """Max row l1 norm of X_{S^c}^T X_S (X_S^T X_S)^{-1}, with the two norm-bound checks.

    The bounds are r_n <= c0 sqrt(s) / sqrt(Lambda_min(s)) and
    r_n <= theta_{1,s} sqrt(s) / Lambda_min(s); ``c0`` defaults to the largest
    normalized column norm over S^c.
    """
    G = _gram(X, gram)
    p = G.shape[0]
    S = _as_index(S, p)
    Sc = _complement(S, p)
    A = _regression_matrix(G, S, Sc)
    value = float(np.max(np.sum(np.abs(A), axis=1))) if Sc.size and S.size else 0.0
    if c0 is None:
        c0 = float(np.sqrt(np.max(np.diag(G)[Sc]))) if Sc.size else 0.0
    lam = th = b1 = b2 = None
    v1 = v2 = False
    s = S.size
    if check_bounds and s >= 1 and Sc.size:
        try:
            lam = lambda_min_subset(G, s, cap=cap, gram=True)
            th = restricted_orthogonality(G, 1, s, gram=True).theta if s + 1 <= p else 0.0
            b1 = c0 * math.sqrt(s) / math.sqrt(lam) if lam > 0 else math.inf
            b2 = th * math.sqrt(s) / lam if lam > 0 else math.inf
            v1 = value > b1 * (1 + rtol) + rtol
            v2 = value > b2 * (1 + rtol) + rtol
        except EnumerationCapExceeded:
            pass
    return RnResult(value, float(c0), lam, th, b1, b2, v1, v2)


@dataclass(frozen=True)
class Irrepresentable:
    norm: float
    holds: bool
    margin: float


def irrepresentable_margin(X, S, eta: float, gram: bool = False) -> Irrepresentable:
    G = _gram(X, gram)
    p = G.shape[0]
    S = _as_index(S, p)
    Sc = _complement(S, p)
    A = _regression_matrix(G, S, Sc)
    norm = float(np.max(np.sum(np.abs(A), axis=1))) if Sc.size and S.size else 0.0
    return Irrepresentable(norm, norm <= 1 - eta, 1 - eta - norm)


@dataclass(frozen=True)
class WeightedIncoherence:
    per_j_ok: np.ndarray
    per_j_slack: np.ndarray
    sufficient_ok: bool
    holds: bool
    complement: np.ndarray


def weighted_incoherence(X, S, weights: WeightVector, signs_on_S, eta: float,
                         gram: bool = False) -> WeightedIncoherence:
    """Per-coordinate (w, S)-incoherence |X_j^T X_S (X_S^T X_S)^{-1} b| <= w_j (1 - eta)
    and its sufficient form r_n <= (w_min(S^c) / w_max(S)) (1 - eta)."""
    G = _gram(X, gram)
    p = G.shape[0]
    S = _as_index(S, p)
    Sc = _complement(S, p)
    b = weights.signed_on(S, signs_on_S)
    A = _regression_matrix(G, S, Sc)
    lhs = np.abs(A @ b)
    wSc = weights.w[Sc]
    with np.errstate(invalid="ignore"):
        slack = np.where(np.isinf(wSc), np.inf, wSc * (1 - eta) - lhs)
    ok = slack >= 0
    rn = float(np.max(np.sum(np.abs(A), axis=1))) if Sc.size and S.size else 0.0
    wmin = weights.w_min(Sc)
    wmax = weights.w_max(S) if S.size else 1.0
    suff = rn <= (wmin / wmax) * (1 - eta) if math.isfinite(wmin) else True
    return WeightedIncoherence(ok, slack, bool(suff), bool(np.all(ok)), Sc)


# -------------------------------------------------------------------- events


def noise_correlation(X, eps) -> float:
    X = np.asarray(X, float)
    eps = np.asarray(eps, float)
    if eps.shape != (X.shape[0],):
        raise ValueError("noise length does not match design rows")
    return float(np.max(np.abs(X.T @ eps))) / X.shape[0]


def event_T_threshold(n: int, p: int, sigma: float, c0: float) -> float:
    return c0 * sigma * math.sqrt(6.0 * math.log(p) / n)


def event_T(X, eps, sigma: float, c0: float) -> bool:
    """||X^T eps / n||_inf <= c0 sigma sqrt(6 log p / n)."""
    n, p = np.shape(X)
    return noise_correlation(X, eps) <= event_T_threshold(n, p, sigma, c0)


@dataclass(frozen=True)
class EventX:
    max_delta: float
    threshold: float
    holds: bool


def event_X(X, Sigma, C2: float) -> EventX:
    """max_jk |(X^T X / n - Sigma)_jk| < C2 sqrt(log p / n)."""
    X = np.asarray(X, float)
    Sigma = np.asarray(Sigma, float)
    n, p = X.shape
    if Sigma.shape != (p, p):
        raise ValueError("Sigma shape does not match the design")
    delta = float(np.max(np.abs(X.T @ X / n - Sigma)))
    thr = C2 * math.sqrt(math.log(p) / n)
    return EventX(delta, thr, delta < thr)


# --------------------------------------------------------------- certificate


@dataclass(frozen=True)
class ConditionResult:
    holds: bool
    margin: float


@dataclass(frozen=True)
class SignCertificate:
    condition_a: ConditionResult
    condition_b: ConditionResult
    predicts_recovery: bool
    beta_S: Optional[np.ndarray] = None

    def strict(self, tol: float) -> Optional[bool]:
        """True when both margins exceed ``tol``, False when either is below ``-tol``
        (one failed condition already rules out a sign-correct solution), else None."""
        a, b = self.condition_a.margin, self.condition_b.margin
        if a > tol and b > tol:
            return True
        if a < -tol or b < -tol:
            return False
        return None

    def to_dict(self) -> dict:
        def f(x):
            return float(x) if math.isfinite(x) else None
        return {
            "condition_a": {"holds": self.condition_a.holds, "margin": f(self.condition_a.margin)},
            "condition_b": {"holds": self.condition_b.holds, "margin": f(self.condition_b.margin)},
            "predicts_recovery": self.predicts_recovery,
        }


def sign_recovery_certificate(problem: RegressionProblem, lam: float,
                              weights: Optional[WeightVector] = None) -> SignCertificate:
    """Exact check of whether a weighted-Lasso solution with sgn(beta_hat) = sgn(beta*) exists.

    (a) |G_{Sc S} G_SS^{-1} [X_S^T eps/n - lam b] - X_Sc^T eps/n| <= lam w_Sc
    (b) sgn(beta*_S + G_SS^{-1} [X_S^T eps/n - lam b]) = sgn(beta*_S)
    with b = sgn(beta*_S) * w_S and eps the realized noise.
    """
    if problem.truth is None:
        raise ValueError("certificate needs the true model")
    X, n, p = problem.X, problem.n, problem.p
    w = weights if weights is not None else WeightVector.ones(p)
    if len(w) != p:
        raise ValueError("weights length does not match the design")
    beta = problem.truth.beta_star
    S = np.asarray(problem.truth.support, dtype=int)
    Sc = _complement(S, p)
    if np.any(np.isinf(w.w[S])):
        # an excluded true coordinate is pinned at zero: its sign cannot be recovered
        return SignCertificate(ConditionResult(False, math.nan), ConditionResult(False, -math.inf), False)
    eps = problem.noise
    xe = X.T @ eps / n
    G = X.T @ X / n
    sgn = np.sign(beta[S])
    b = sgn * w.w[S]
    if S.size:
        GSS = G[np.ix_(S, S)]
        u = np.linalg.solve(GSS, xe[S] - lam * b)
        v = G[np.ix_(Sc, S)] @ u - xe[Sc]
        beta_S = beta[S] + u
        margin_b = float(np.min(sgn * beta_S))
    else:
        v = -xe[Sc]
        beta_S = np.zeros(0)
        margin_b = math.inf
    wSc = w.w[Sc]
    fin = np.isfinite(wSc)
    slack_a = lam * wSc[fin] - np.abs(v[fin])
    margin_a = float(np.min(slack_a)) if slack_a.size else math.inf
    a = ConditionResult(margin_a >= 0, margin_a)
    bres = ConditionResult(margin_b > 0, margin_b)
    return SignCertificate(a, bres, bool(a.holds and bres.holds), beta_S)


# ------------------------------------------------------- theorem hypotheses


THEOREMS = (
    "weighted_general",          # generic weighted-Lasso selection with delta bounds
    "fixed_design",              # fixed design, r_n computed exactly
    "fixed_design_general_rn",   # fixed design, r_n bounded through Lambda_min
    "fixed_design_orthogonality",  # fixed design, r_n bounded through theta_{1,s}
    "random_design",             # Gaussian random design with population Sigma
)


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    hypothesis: str
    holds: bool
    slack: float
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slack"] = float(self.slack) if math.isfinite(self.slack) else (None if math.isnan(self.slack) else
                                                                           (1e308 if self.slack > 0 else -1e308))
        return d


def _chk(name, hyp, lhs, rhs, strict=False, note="") -> HypothesisCheck:
    """Check lhs <= rhs (or lhs < rhs); slack = rhs - lhs."""
    slack = rhs - lhs
    holds = (lhs < rhs) if strict else (lhs <= rhs)
    if math.isnan(slack):
        holds = False
    return HypothesisCheck(name, hyp, bool(holds), float(slack), note)


def lambda_init_formula(constants: Constants, sigma: float, n: int, p: int, c0: Optional[float] = None) -> float:
    c0 = constants.c0 if c0 is None else c0
    return constants.B * c0 * sigma * math.sqrt(math.log(p) / n)


def theorem_hypotheses(problem: RegressionProblem, constants: Constants, which: str, *,
                       K: Optional[float] = None, lambda_min: Optional[float] = None,
                       theta: Optional[float] = None, r_tilde: Optional[float] = None,
                       lambda_init: Optional[float] = None, lambda_n: Optional[float] = None,
                       s_bar: Optional[int] = None, Sigma=None, budget: int = 4,
                       seed: int = 0) -> list[HypothesisCheck]:
    """Evaluate every inequality in the hypotheses of the named recovery result.

    Unsupplied design quantities are computed: K as the conditions-module bracket
    (its certified upper end when finite, otherwise the search estimate), Lambda_min(s)
    and theta_{1,s} by enumeration.  ``lambda_n`` defaults to the midpoint of the
    admissible range.
    """
    if which not in THEOREMS:
        raise ValueError(f"unknown theorem id {which!r}; choose from {THEOREMS}")
    if problem.truth is None:
        raise ValueError("hypothesis checks need the true model")
    truth = problem.truth
    X, n, p = problem.X, problem.n, problem.p
    s, bmin = truth.s, truth.beta_min
    S = list(truth.support)
    sigma = problem.require_sigma()
    eta, M, k0 = constants.eta, constants.M, constants.k0
    if s < 1:
        return [HypothesisCheck("beta_min", "beta_min > 0 (nonempty support)", False, -math.inf)]
    out: list[HypothesisCheck] = []
    random = which == "random_design"
    notes = []

    if random:
        if Sigma is None:
            raise ValueError("random-design checks need the population covariance Sigma")
        Sigma = np.asarray(Sigma, float)
        c0 = math.sqrt(1.5)
        lam_min = lambda_min if lambda_min is not None else lambda_min_population(Sigma, s)
        if K is None:
            kr = re_constant(Sigma, s, s, 3.0, budget=budget, gram=True, seed=seed, focus=[S])
            K_sigma = kr.value
            if kr.kind == "search":
                notes.append("K from search only (not certified)")
        else:
            K_sigma = K / math.sqrt(2)
        Kx = math.sqrt(2) * K_sigma
        out.append(_chk("unit_diagonal", "Sigma_jj = 1 for all j",
                        float(np.max(np.abs(np.diag(Sigma) - 1))), 1e-10))
        out.append(_chk("C2_floor", "C2 > 4 sqrt(5/3)", 4 * math.sqrt(5 / 3), constants.C2, strict=True))
        out.append(_chk("dimension", "p < exp(n / (4 C2^2))", math.log(p), n / (4 * constants.C2**2), strict=True))
    else:
        c0 = 1.0 if which != "weighted_general" else constants.c0
        lam_min = lambda_min if lambda_min is not None else lambda_min_subset(X, s)
        if K is None:
            kr = re_constant(X, s, s, 3.0, budget=budget, seed=seed, focus=[S])
            Kx = kr.value
            if kr.kind == "search":
                notes.append("K from search only (not certified)")
        else:
            Kx = K
        colmax = float(np.max(np.linalg.norm(X, axis=0)))
        out.append(_chk("column_norm", "max_j ||X_j||_2 <= c0 sqrt(n)", colmax, c0 * math.sqrt(n) * (1 + 1e-12)))
    note = "; ".join(notes)

    lam_init = lambda_init if lambda_init is not None else lambda_init_formula(constants, sigma, n, p, c0)
    log_ps = math.log(max(p - s, 2))
    root = math.sqrt(2 * log_ps / n)
    out.append(_chk("eigen_condition", "Lambda_min(s) > 0", 0.0, lam_min, strict=True))
    out.append(_chk("restricted_eigenvalue", "RE(s, s, 3) holds: K finite", 0.0,
                    1.0 / Kx if math.isfinite(Kx) else 0.0, strict=True, note=note))
    out.append(_chk("eta_range", "0 < eta < 1", abs(eta - 0.5), 0.5, strict=True))

    if which == "weighted_general":
        d_S = 4 * Kx**2 * lam_init * math.sqrt(s)
        d_Sc = 16 * Kx**2 * lam_init * math.sqrt(s)
        rt = r_tilde if r_tilde is not None else r_n(X, S, check_bounds=False).value
        lo = 4 * c0 * sigma * d_Sc / eta * root
        hi = M * c0 * sigma * d_Sc * root
        lam_n = lambda_n if lambda_n is not None else 0.5 * (lo + hi)
        C1 = max(2 * rt / (1 - eta), M / math.sqrt(3))
        out += [
            _chk("delta_S_bound", "1 > delta_S", d_S, 1.0, strict=True),
            _chk("delta_Sc_bound", "1 > delta_Sc", d_Sc, 1.0, strict=True),
            _chk("M_floor", "M >= 4 / eta", 4 / eta, M),
            _chk("lambda_n_lower", "lambda_n >= 4 c0 sigma delta_Sc / eta sqrt(2 log(p-s)/n)", lo, lam_n),
            _chk("lambda_n_upper", "lambda_n <= M c0 sigma delta_Sc sqrt(2 log(p-s)/n)", lam_n, hi),
            _chk("sparsity", "r_n <= (1 - eta) / delta_Sc", rt, (1 - eta) / d_Sc),
            _chk("beta_min", "beta_min > max{2 delta_S, 2 lambda_n sqrt(s)/Lmin, "
                 "4 c0 sigma/Lmin sqrt(6 s log p/n), C1 delta_Sc}",
                 max(2 * d_S, 2 * lam_n * math.sqrt(s) / lam_min,
                     4 * c0 * sigma / lam_min * math.sqrt(6 * s * math.log(p) / n), C1 * d_Sc),
                 bmin, strict=True),
        ]
        return out

    sb = s if s_bar is None else s_bar
    base = c0 * sigma * lam_init * math.sqrt(sb) * root
    lo = 64 * Kx**2 / eta * base
    hi = 16 * M * Kx * base
    lam_n = lambda_n if lambda_n is not None else 0.5 * (lo + hi)
    M_hi = math.sqrt(lam_min) / ((1 - eta) * c0 * sigma) * math.sqrt(n / (2 * math.log(p))) if sigma > 0 else math.inf
    out += [
        _chk("M_lower", "M >= 4 K / eta", 4 * Kx / eta, M),
        _chk("M_upper", "M <= sqrt(Lmin) / ((1 - eta) c0 sigma) sqrt(n / (2 log p))", M, M_hi),
        _chk("lambda_n_lower", "lambda_n >= 64 K^2 / eta c0 sigma lambda_init sqrt(s_bar) sqrt(2 log(p-s)/n)",
             lo, lam_n),
        _chk("lambda_n_upper", "lambda_n <= 16 M K c0 sigma lambda_init sqrt(s_bar) sqrt(2 log(p-s)/n)",
             lam_n, hi),
    ]
    lin_sparsity = n / (96 * c0**2 * sigma**2 * Kx**2 * math.log(p)) if sigma > 0 else math.inf
    scale = 16 * Kx**2 * lam_init * math.sqrt(s)

    if which == "fixed_design":
        rt = r_tilde if r_tilde is not None else r_n(X, S, check_bounds=False).value
        out += [
            _chk("linear_sparsity", "s < n / (96 c0^2 sigma^2 K^2 log p)", s, lin_sparsity, strict=True),
            _chk("sparsity", "r_n sqrt(s) <= (1 - eta) / (32 K^2 lambda_init)", rt * math.sqrt(s),
                 (1 - eta) / (32 * Kx**2 * lam_init)),
            _chk("beta_min", "beta_min > max{2 r_n / (1 - eta), M / sqrt(3)} 16 K^2 lambda_init sqrt(s)",
                 max(2 * rt / (1 - eta), M / math.sqrt(3)) * scale, bmin, strict=True),
        ]
    elif which == "fixed_design_general_rn":
        out += [
            _chk("sparsity", "s <= sqrt(Lmin) (1 - eta) / (32 K^2 lambda_init)", s,
                 math.sqrt(lam_min) * (1 - eta) / (32 * Kx**2 * lam_init)),
            _chk("beta_min", "beta_min > max{2 sqrt(s) / ((1 - eta) sqrt(Lmin)), M / sqrt(3)} 16 K^2 lambda_init sqrt(s)",
                 max(2 * math.sqrt(s) / ((1 - eta) * math.sqrt(lam_min)), M / math.sqrt(3)) * scale,
                 bmin, strict=True),
        ]
    elif which == "fixed_design_orthogonality":
        th = theta if theta is not None else (restricted_orthogonality(X, 1, s).theta if s + 1 <= p else 0.0)
        out += [
            _chk("orthogonality", "Lmin > 16 k0 K^2 lambda_init s theta_{1,s}",
                 16 * k0 * Kx**2 * lam_init * s * th, lam_min, strict=True,
                 note="design condition evaluated at the configured lambda_init"),
            _chk("k0_cap", "k0 <= 3", k0, 3.0),
            _chk("linear_sparsity", "s < n / (96 c0^2 sigma^2 K^2 log p)", s, lin_sparsity, strict=True),
            _chk("beta_min", "beta_min > max{2 sqrt(s) theta_{1,s} / ((1 - eta) Lmin), M / sqrt(3)} 16 K^2 lambda_init sqrt(s)",
                 max(2 * math.sqrt(s) * th / ((1 - eta) * lam_min), M / math.sqrt(3)) * scale, bmin, strict=True),
        ]
    else:
        cap = 1 / (32 * K_sigma**2) * min(1 / constants.C2,
                                          math.sqrt(lam_min) * (1 - eta) / (6 * math.sqrt(6) * sigma)
                                          if sigma > 0 else math.inf) * math.sqrt(n / math.log(p))
        out += [
            _chk("sparsity", "s <= 1/(32 K_Sigma^2) min{1/C2, sqrt(Lmin)(1-eta)/(6 sqrt(6) sigma)} sqrt(n/log p)",
                 s, cap),
            _chk("beta_min", "beta_min > max{2 sqrt(s) / ((1 - eta) sqrt(Lmin)), M / sqrt(3)} 16 K^2 lambda_init sqrt(s)",
                 max(2 * math.sqrt(s) / ((1 - eta) * math.sqrt(lam_min)), M / math.sqrt(3)) * scale,
                 bmin, strict=True),
        ]
    return out


# -------------------------------------------------------------------- report


@dataclass
class ConditionReport:
    s: int
    lambda_min_s: Optional[float] = None
    lambda_min_s_random: Optional[float] = None
    K_est: Optional[REConstant] = None
    theta: Optional[float] = None
    theta_exact: Optional[bool] = None
    r_n: Optional[RnResult] = None
    irrepresentable: Optional[Irrepresentable] = None
    weighted_incoherence_ok: Optional[bool] = None
    event_T: Optional[bool] = None
    event_X: Optional[EventX] = None
    theorem_checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float):
                return x if math.isfinite(x) else None
            if isinstance(x, (np.floating,)):
                return clean(float(x))
            if isinstance(x, (np.bool_,)):
                return bool(x)
            if isinstance(x, np.ndarray):
                return [clean(v) for v in x.tolist()]
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            return x

        d = {
            "s": self.s,
            "lambda_min_s": self.lambda_min_s,
            "lambda_min_s_random": self.lambda_min_s_random,
            "K_est": self.K_est.to_dict() if self.K_est else None,
            "theta": self.theta,
            "theta_exact": self.theta_exact,
            "r_n": asdict(self.r_n) if self.r_n else None,
            "irrepresentable_norm": self.irrepresentable.norm if self.irrepresentable else None,
            "irrepresentable_margin": (1 - self.irrepresentable.norm) if self.irrepresentable else None,
            "irrepresentable_holds": self.irrepresentable.holds if self.irrepresentable else None,
            "weighted_incoherence_ok": self.weighted_incoherence_ok,
            "event_T": self.event_T,
            "event_X": asdict(self.event_X) if self.event_X else None,
            "theorem_checks": [c.to_dict() for c in self.theorem_checks],
            "notes": list(self.notes),
        }
        return clean(d)


def condition_report(X, s: Optional[int] = None, support: Optional[Sequence[int]] = None,
                     Sigma=None, m: Optional[int] = None, constants: Optional[Constants] = None,
                     budget: int = 4, weights: Optional[WeightVector] = None, signs=None,
                     eps=None, sigma: Optional[float] = None, seed: int = 0) -> ConditionReport:
    """Collect every computable design quantity into one report."""
    constants = constants or Constants()
    X = np.asarray(X, float)
    n, p = X.shape
    if s is None:
        if support is None:
            raise ValueError("need s or a support")
        s = len(support)
    s = int(s)
    rep = ConditionReport(s=s)
    sample = None
    try:
        rep.lambda_min_s = lambda_min_subset(X, s)
    except EnumerationCapExceeded:
        rep.lambda_min_s = lambda_min_subset(X, s, sample=20_000, seed=seed)
        rep.notes.append("Lambda_min(s) from sampled subsets (upper estimate)")
        sample = 20_000
    if Sigma is not None:
        Sigma = np.asarray(Sigma, float)
        try:
            rep.lambda_min_s_random = lambda_min_population(Sigma, s)
        except EnumerationCapExceeded:
            rep.notes.append("population Lambda_min(s) skipped: enumeration cap")
        rep.event_X = event_X(X, Sigma, constants.C2)
    mm = s if m is None else int(m)
    if s + mm <= p and s >= 1:
        rep.K_est = re_constant(X, s, mm, constants.k0, budget=budget, seed=seed,
                                focus=[list(support)] if support is not None else ())
    if 2 * s <= p:
        ro = restricted_orthogonality(X, s, s, sample=sample or 20_000, seed=seed)
        rep.theta, rep.theta_exact = ro.theta, ro.exact
    if support is not None:
        S = list(support)
        try:
            rep.r_n = r_n(X, S)
            rep.irrepresentable = irrepresentable_margin(X, S, constants.eta)
            w = weights if weights is not None else WeightVector.ones(p)
            sg = np.ones(len(S)) if signs is None else np.asarray(signs, float)
            if not np.any(np.isinf(w.w[S])):
                rep.weighted_incoherence_ok = weighted_incoherence(X, S, w, sg, constants.eta).holds
        except np.linalg.LinAlgError:
            rep.notes.append("X_S^T X_S singular: r_n and incoherence unavailable")
    if eps is not None and sigma is not None:
        rep.event_T = event_T(X, eps, sigma, constants.c0)
    return rep
