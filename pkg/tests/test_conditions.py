import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adalasso import conditions as C
from adalasso.core import Constants, RegressionProblem, TrueModel, WeightVector
from adalasso.solver import SolverConfig, solve_weighted_lasso
from adalasso.synth import design_with_gram

from conftest import orthonormal_design


def corr2(rho):
    return np.array([[1.0, rho], [rho, 1.0]])


def brute_lambda_min(X, s):
    """Smallest singular value of every column subset, squared and scaled."""
    n, p = X.shape
    best = math.inf
    for J in itertools.combinations(range(p), s):
        sv = np.linalg.svd(X[:, J], compute_uv=False)
        best = min(best, sv[-1] ** 2 / n if len(sv) == s else 0.0)
    return best


# ---------------------------------------------------------------- Lambda_min


def test_lambda_min_identity(rng):
    X = orthonormal_design(20, 6, rng)
    for s in range(1, 7):
        assert C.lambda_min_subset(X, s) == pytest.approx(1.0, abs=1e-12)


def test_lambda_min_two_by_two():
    assert C.lambda_min_subset(corr2(0.3), 2, gram=True) == pytest.approx(0.7)
    assert C.lambda_min_subset(corr2(-0.8), 2, gram=True) == pytest.approx(0.2)


def test_lambda_min_singletons(rng):
    X = rng.standard_normal((15, 7)) * rng.uniform(0.5, 2, 7)
    assert C.lambda_min_subset(X, 1) == pytest.approx(np.min(np.sum(X**2, axis=0)) / 15)


def test_lambda_min_matches_svd_oracle(rng):
    for _ in range(5):
        X = rng.standard_normal((12, 7))
        for s in (1, 2, 3, 5):
            assert C.lambda_min_subset(X, s) == pytest.approx(brute_lambda_min(X, s), rel=1e-9, abs=1e-12)


def test_lambda_min_cap_and_sampling(rng):
    X = rng.standard_normal((30, 40))
    with pytest.raises(C.EnumerationCapExceeded):
        C.lambda_min_subset(X, 5, cap=1000)
    exact = C.lambda_min_subset(X, 2)
    sampled = C.lambda_min_subset(X, 2, cap=10, sample=200)
    assert sampled >= exact - 1e-12


@given(st.integers(0, 10**6))
def test_lambda_min_non_increasing(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((10, 6))
    vals = [C.lambda_min_subset(X, s) for s in range(1, 7)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_population_variant():
    assert C.lambda_min_population(np.eye(4), 2) == pytest.approx(16 / 17)


# ------------------------------------------------------------------ RE constant


def grid_re_ratio(G, s, m, k0, step=0.03):
    """Minimum cone ratio over a hyperspherical grid in R^4 (brute-force oracle)."""
    a = np.arange(0, np.pi + 1e-9, step)
    c = np.arange(0, 2 * np.pi, step)
    A1, A2, A3 = np.meshgrid(a, a, c, indexing="ij")
    A1, A2, A3 = A1.ravel(), A2.ravel(), A3.ravel()
    g = np.stack([np.cos(A1), np.sin(A1) * np.cos(A2), np.sin(A1) * np.sin(A2) * np.cos(A3),
                  np.sin(A1) * np.sin(A2) * np.sin(A3)])
    num = np.einsum("ij,ij->j", g, G @ g)
    best = math.inf
    for J0 in itertools.combinations(range(4), s):
        J = list(J0)
        rest = [j for j in range(4) if j not in J]
        feas = np.sum(np.abs(g[rest]), axis=0) <= k0 * np.sum(np.abs(g[J]), axis=0)
        den = np.sum(g[J] ** 2, axis=0)
        if m:
            top = -np.sort(-np.abs(g[rest]), axis=0)[:m]
            den = den + np.sum(top**2, axis=0)
        r = num[feas] / den[feas]
        if r.size:
            best = min(best, float(r.min()))
    return best


def near_dependent(rho):
    G = np.eye(4)
    G[0, 1] = G[1, 0] = rho
    G[2, 3] = G[3, 2] = 0.2
    return G


@pytest.mark.parametrize("rho, m", [(0.6, 1), (0.9, 1), (0.9, 0)])
def test_re_search_matches_grid_oracle(rho, m):
    G = near_dependent(rho)
    r = C.re_constant(G, 1, m, 1.0, budget=6, gram=True, iters=400)
    grid = grid_re_ratio(G, 1, m, 1.0)
    # the search ratio is attained by a feasible vector, so it cannot undercut the infimum
    assert r.ratio_search <= grid + 0.02
    assert grid <= r.ratio_search + 0.02
    # the certified bound sits on the correct side of the oracle
    assert 1.0 / r.K_upper**2 <= grid + 1e-9


def test_re_orthonormal_is_one(rng):
    X = orthonormal_design(40, 8, rng)
    for s, m, k0 in [(1, 1, 3.0), (2, 2, 3.0), (3, 0, 1.0)]:
        r = C.re_constant(X, s, m, k0)
        assert r.K_upper <= 1 + 1e-6 and r.K_search == pytest.approx(1.0, abs=1e-6)
        assert r.kind == "exact"


def test_re_grows_with_dependence():
    ks = [C.re_constant(near_dependent(rho), 1, 1, 3.0, gram=True, budget=6, iters=300).K_search
          for rho in (0.3, 0.6, 0.9, 0.99)]
    assert all(a < b for a, b in zip(ks, ks[1:]))


def test_re_m_free_variant_not_larger(rng):
    X = rng.standard_normal((30, 6))
    a = C.re_constant(X, 2, 0, 3.0, budget=6, iters=300)
    b = C.re_constant(X, 2, 2, 3.0, budget=6, iters=300)
    assert a.K_upper <= b.K_upper + 1e-12
    assert a.K_search <= b.K_search * (1 + 1e-3)


def test_re_cone_free_is_exact(rng):
    X = rng.standard_normal((20, 6))
    r = C.re_constant(X, 2, 0, 0.0)
    assert r.kind == "exact"
    assert r.K_search == pytest.approx(1 / math.sqrt(C.lambda_min_subset(X, 2)))


def test_re_infeasible_parameters(rng):
    with pytest.raises(ValueError):
        C.re_constant(rng.standard_normal((10, 4)), 3, 3, 3.0)


def test_lambda_min_dominates_re_bound(rng):
    for _ in range(5):
        X = rng.standard_normal((25, 6))
        r = C.re_constant(X, 2, 0, 3.0, budget=4)
        assert C.lambda_min_subset(X, 2) >= 1 / r.K_upper**2 - 1e-12
        assert C.lambda_min_subset(X, 2) >= 1 / r.K_search**2 - 1e-12


def test_l1_projection_matches_definition(rng):
    V = rng.standard_normal((9, 5))
    r = np.array([0.5, 1.0, 100.0, 2.0, 0.1])
    P = C._l1_ball_project(V, r)
    assert np.all(np.sum(np.abs(P), axis=0) <= r + 1e-12)
    # optimality: no feasible random perturbation gets closer
    for j in range(5):
        d0 = np.linalg.norm(P[:, j] - V[:, j])
        for _ in range(200):
            q = P[:, j] + 0.05 * rng.standard_normal(9)
            if np.sum(np.abs(q)) <= r[j]:
                assert np.linalg.norm(q - V[:, j]) >= d0 - 1e-12


# -------------------------------------------------------- restricted orthogonality


def brute_theta(G, s, sp):
    p = G.shape[0]
    best = 0.0
    for T in itertools.combinations(range(p), s):
        rest = [j for j in range(p) if j not in T]
        for U in itertools.combinations(rest, sp):
            best = max(best, np.linalg.norm(G[np.ix_(T, U)], 2))
    return best


def test_theta_examples(rng):
    X = orthonormal_design(20, 5, rng)
    assert C.restricted_orthogonality(X, 2, 2).theta == pytest.approx(0.0, abs=1e-12)
    assert C.restricted_orthogonality(corr2(-0.4), 1, 1, gram=True).theta == pytest.approx(0.4)
    Y = rng.standard_normal((10, 4))
    Y[:, 3] = Y[:, 1]
    assert C.restricted_orthogonality(Y, 1, 1).theta == pytest.approx(np.sum(Y[:, 1] ** 2) / 10)


@pytest.mark.parametrize("s, sp", [(1, 1), (1, 3), (3, 1), (2, 2), (2, 3)])
def test_theta_matches_brute_force(rng, s, sp):
    G = np.cov(rng.standard_normal((7, 30)))
    ro = C.restricted_orthogonality(G, s, sp, gram=True)
    assert ro.exact
    assert ro.theta == pytest.approx(brute_theta(G, s, sp), rel=1e-12)


def test_theta_sampled_mode(rng):
    X = rng.standard_normal((20, 30))
    with pytest.raises(C.EnumerationCapExceeded):
        C.restricted_orthogonality(X, 3, 3, cap=100)
    ro = C.restricted_orthogonality(X, 3, 3, cap=100, sample=50)
    assert not ro.exact and ro.theta > 0


# ------------------------------------------------------------- r_n, incoherence


def test_rn_examples(rng):
    X = orthonormal_design(20, 5, rng)
    assert C.r_n(X, [0, 2]).value == pytest.approx(0.0, abs=1e-12)
    assert C.r_n(corr2(0.35), [0], gram=True).value == pytest.approx(0.35)
    Y = rng.standard_normal((10, 4))
    Y[:, 3] = Y[:, 0]
    assert C.r_n(Y, [0]).value == pytest.approx(1.0)


def test_rn_singular():
    G = np.ones((3, 3))
    with pytest.raises(np.linalg.LinAlgError):
        C.r_n(G, [0, 1], gram=True)


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_rn_norm_bounds_hold(seed, s):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((15, 7)) @ np.linalg.cholesky(0.4 * np.eye(7) + 0.6)  .T
    S = sorted(rng.choice(7, s, replace=False))
    r = C.r_n(X, S)
    assert not r.violates_c0 and not r.violates_theta
    assert r.value <= r.bound_c0 * (1 + 1e-10) and r.value <= r.bound_theta * (1 + 1e-10)


def test_irrepresentable_examples(rng):
    X = orthonormal_design(20, 5, rng)
    irr = C.irrepresentable_margin(X, [1], 0.5)
    assert irr.holds and irr.norm == pytest.approx(0.0, abs=1e-12)
    irr = C.irrepresentable_margin(corr2(0.95), [0], 0.1, gram=True)
    assert not irr.holds and irr.norm == pytest.approx(0.95)
    rho, p, s = 0.3, 10, 3
    G = np.full((p, p), rho)
    np.fill_diagonal(G, 1.0)
    irr = C.irrepresentable_margin(G, range(s), 0.05, gram=True)
    assert irr.norm == pytest.approx(s * rho / (1 + (s - 1) * rho)) and irr.norm == pytest.approx(0.5625)
    assert irr.holds


def test_weighted_incoherence_rescue():
    G = corr2(0.95)
    wi = C.weighted_incoherence(G, [0], WeightVector([1.0, 20.0]), [1.0], 0.1, gram=True)
    assert wi.holds and wi.per_j_ok.tolist() == [True]
    assert wi.per_j_slack[0] == pytest.approx(20 * 0.9 - 0.95)
    assert not C.weighted_incoherence(G, [0], WeightVector([1.0, 1.0]), [1.0], 0.1, gram=True).holds


def test_weighted_incoherence_infinite_complement(rng):
    X = rng.standard_normal((10, 4))
    X[:, 3] = X[:, 0]
    w = WeightVector([1.0, 1.0, np.inf, np.inf])
    wi = C.weighted_incoherence(X, [0, 1], w, [1, -1], 0.5)
    assert wi.holds and wi.sufficient_ok
    with pytest.raises(ValueError):
        C.weighted_incoherence(X, [2], w, [1], 0.5)


@given(st.integers(0, 10**6), st.floats(0.01, 0.99))
def test_unit_weights_agree_with_irrepresentable(seed, eta):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((20, 6)) + 0.7 * rng.standard_normal((20, 1))
    S = [0, 2]
    signs = rng.choice([-1.0, 1.0], 2)
    wi = C.weighted_incoherence(X, S, WeightVector.ones(6), signs, eta)
    irr = C.irrepresentable_margin(X, S, eta)
    assert wi.sufficient_ok == irr.holds
    # the per-coordinate test is a relaxation of the row-norm test
    if irr.holds:
        assert wi.holds


# ------------------------------------------------------------------- events


def test_event_T(rng):
    X = rng.standard_normal((50, 5))
    assert C.event_T(X, np.zeros(50), 1.0, 1.0)
    X2 = np.column_stack([np.ones(50), rng.standard_normal(50)])
    assert not C.event_T(X2, 50 * np.ones(50), 1.0, 1.0)


def test_event_X(rng):
    Sigma = 0.5 * np.eye(5) + 0.5
    X = design_with_gram(Sigma, 40, 3)
    ev = C.event_X(X, Sigma, Constants().C2)
    assert ev.holds and ev.max_delta < 1e-12
    ev = C.event_X(np.ones((100, 5)), np.eye(5), Constants().C2)
    assert not ev.holds and ev.max_delta == pytest.approx(1.0)
    with pytest.raises(ValueError):
        C.event_X(X, np.eye(4), 5.0)


# -------------------------------------------------------------- certificate


def test_certificate_noiseless_orthonormal(rng):
    X = orthonormal_design(30, 6, rng)
    beta = np.array([2.0, -1.0, 0, 0, 0, 0])
    pr = RegressionProblem(X, X @ beta, 0.0, TrueModel(beta))
    cert = C.sign_recovery_certificate(pr, 0.5, WeightVector.ones(6))
    assert cert.predicts_recovery
    assert cert.condition_a.margin == pytest.approx(0.5, abs=1e-10)
    assert cert.condition_b.margin == pytest.approx(0.5, abs=1e-10)
    assert np.allclose(cert.beta_S, [1.5, -0.5])


def test_certificate_huge_lambda(rng):
    X = orthonormal_design(30, 6, rng)
    beta = np.array([2.0, -1.0, 0, 0, 0, 0])
    pr = RegressionProblem(X, X @ beta, 0.0, TrueModel(beta))
    cert = C.sign_recovery_certificate(pr, 5.0)
    assert not cert.condition_b.holds and not cert.predicts_recovery
    assert cert.strict(1e-7) is False


def test_certificate_infinite_weight_on_support(rng):
    X = rng.standard_normal((20, 4))
    beta = np.array([1.0, 0, 0, 0])
    pr = RegressionProblem(X, X @ beta, 0.0, TrueModel(beta))
    cert = C.sign_recovery_certificate(pr, 0.1, WeightVector([np.inf, 1, 1, 1]))
    assert not cert.predicts_recovery and cert.strict(1e-7) is False


def random_certificate_case(rng):
    n = int(rng.integers(20, 80))
    p = int(rng.integers(5, 40))
    s = int(rng.integers(1, min(6, n // 4, p) + 1))
    X = rng.standard_normal((n, p)) + rng.uniform(0, 0.8) * rng.standard_normal((n, 1))
    beta = np.zeros(p)
    S = rng.choice(p, s, replace=False)
    beta[S] = rng.uniform(0.2, 2, s) * rng.choice([-1, 1], s)
    sigma = float(rng.uniform(0.05, 1))
    pr = RegressionProblem(X, X @ beta + sigma * rng.standard_normal(n), sigma, TrueModel(beta))
    w = rng.uniform(0.5, 4, p)
    w[rng.random(p) < 0.1] = np.inf
    w[S] = rng.uniform(0.5, 3, s)
    return pr, WeightVector(w), float(rng.uniform(0.01, 0.6))


def test_certificate_agrees_with_solver(rng):
    decisive = 0
    for _ in range(150):
        pr, w, lam = random_certificate_case(rng)
        cert = C.sign_recovery_certificate(pr, lam, w)
        pred = cert.strict(1e-7)
        if pred is None:
            continue
        decisive += 1
        est = solve_weighted_lasso(pr, SolverConfig(lam, w))
        assert est.converged
        assert pred == bool(np.array_equal(np.sign(est.beta_hat), np.sign(pr.truth.beta_star)))
    assert decisive >= 100


# -------------------------------------------------------- theorem hypotheses


def orthonormal_problem(rng, beta_min, n=400, p=10, sigma=0.1):
    X = orthonormal_design(n, p, rng)
    beta = np.zeros(p)
    beta[0] = beta_min
    return RegressionProblem(X, X @ beta + sigma * rng.standard_normal(n), sigma, TrueModel(beta))


def test_theorem_orthonormal_all_hold(rng):
    pr = orthonormal_problem(rng, 10.0)
    for which in ("fixed_design", "fixed_design_general_rn", "fixed_design_orthogonality"):
        checks = C.theorem_hypotheses(pr, Constants(), which, K=1.0, lambda_min=1.0, theta=0.0,
                                      lambda_init=1e-3)
        bad = [c.name for c in checks if not c.holds]
        assert bad == [], (which, bad)


def test_theorem_weighted_general_orthonormal(rng):
    pr = orthonormal_problem(rng, 10.0)
    checks = C.theorem_hypotheses(pr, Constants(), "weighted_general", K=1.0, lambda_min=1.0, lambda_init=1e-3)
    assert all(c.holds for c in checks), [c.name for c in checks if not c.holds]


def test_theorem_random_design_names(rng):
    pr = orthonormal_problem(rng, 10.0, n=4000)
    checks = C.theorem_hypotheses(pr, Constants(), "random_design", Sigma=np.eye(10), lambda_init=1e-3)
    names = {c.name for c in checks}
    assert {"C2_floor", "dimension", "sparsity", "beta_min", "unit_diagonal"} <= names


def test_theorem_no_signal_fails(rng):
    X = rng.standard_normal((50, 6))
    pr = RegressionProblem(X, rng.standard_normal(50), 1.0, TrueModel(np.zeros(6)))
    checks = C.theorem_hypotheses(pr, Constants(), "fixed_design")
    assert [c.name for c in checks if not c.holds] == ["beta_min"]


def test_theorem_duplicated_column_fails_re(rng):
    X = rng.standard_normal((50, 6))
    X[:, 1] = X[:, 0]
    beta = np.zeros(6)
    beta[0] = 1.0
    pr = RegressionProblem(X, X @ beta, 0.5, TrueModel(beta))
    assert C.lambda_min_subset(X, 2) < 1e-12
    checks = {c.name: c for c in C.theorem_hypotheses(pr, Constants(), "fixed_design_general_rn")}
    assert not checks["restricted_eigenvalue"].holds


def test_theorem_unknown_id(rng):
    pr = orthonormal_problem(rng, 1.0)
    with pytest.raises(ValueError):
        C.theorem_hypotheses(pr, Constants(), "nope")


def test_condition_report_serializes(rng):
    X = rng.standard_normal((40, 8))
    rep = C.condition_report(X, support=[0, 3], Sigma=np.eye(8))
    d = rep.to_dict()
    assert d["s"] == 2 and d["lambda_min_s"] >= 0 and d["theta"] >= 0 and d["r_n"]["value"] >= 0
    assert d["K_est"]["kind"] in ("exact", "upper_bound", "search")
    assert d["irrepresentable_margin"] == pytest.approx(1 - d["irrepresentable_norm"])
