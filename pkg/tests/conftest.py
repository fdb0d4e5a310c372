import numpy as np
import pytest
from hypothesis import settings

from adalasso.core import RegressionProblem, TrueModel, WeightVector

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_instance(rng, n_range=(20, 100), p_range=(10, 200)):
    """Random problem, weights and lambda in the ranges used across the solver suite."""
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    p = int(rng.integers(p_range[0], p_range[1] + 1))
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    k = min(5, p)
    beta[rng.choice(p, k, replace=False)] = rng.uniform(0.5, 2, k) * rng.choice([-1, 1], k)
    y = X @ beta + 0.5 * rng.standard_normal(n)
    w = WeightVector(rng.uniform(0.5, 4, p))
    lam = float(rng.uniform(0.01, 1))
    return RegressionProblem(X, y, 0.5, TrueModel(beta)), w, lam


def orthonormal_design(n, p, rng):
    """X with X^T X / n = I exactly (up to rounding)."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return np.sqrt(n) * Q


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def record_info(number, detail):
    line = f"criterion {number:>2}: info  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
