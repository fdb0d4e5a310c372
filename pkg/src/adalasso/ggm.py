"""Gaussian graphical model selection by per-node adaptive Lasso regressions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .adaptive import AdaptiveConfig, AdaptiveTrace, adaptive_lasso
from .core import RegressionProblem, TrueModel

Edge = tuple[int, int]


def _edge(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class PrecisionModel:
    Q: np.ndarray
    edges: frozenset = field(init=False)

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float, copy=True)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("precision matrix must be square")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
            raise ValueError("precision matrix must be symmetric")
        Q = (Q + Q.T) / 2
        lam = float(np.linalg.eigvalsh(Q)[0])
        if not lam > 0:
            raise ValueError(f"precision matrix is not positive definite (smallest eigenvalue {lam:.3g})")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        iu = np.argwhere(np.triu(Q != 0, k=1))
        object.__setattr__(self, "edges", frozenset((int(i), int(j)) for i, j in iu))

    @property
    def p(self) -> int:
        return self.Q.shape[0]

    @property
    def Sigma(self) -> np.ndarray:
        S = np.linalg.inv(self.Q)
        return (S + S.T) / 2

    def node_sigma(self, i: int) -> float:
        """Residual standard deviation of node i given all others."""
        return 1.0 / math.sqrt(self.Q[i, i])

    def neighbors(self, i: int) -> set:
        return {j for j in range(self.p) if j != i and self.Q[i, j] != 0}


def beta_from_precision(Q, i: int) -> np.ndarray:
    """Coefficients of node i regressed on the other nodes: -Q_ij / Q_ii, in node order."""
    Q = np.asarray(Q.Q if isinstance(Q, PrecisionModel) else Q, dtype=float)
    if not Q[i, i] > 0:
        raise ValueError(f"non-positive diagonal entry Q[{i},{i}]")
    others = np.delete(np.arange(Q.shape[0]), i)
    return -Q[i, others] / Q[i, i]


def _others(p: int, i: int) -> np.ndarray:
    return np.delete(np.arange(p), i)


def neighborhood_regression(samples, i: int, config: AdaptiveConfig, sigma: Optional[float] = None,
                            truth: Optional[np.ndarray] = None) -> AdaptiveTrace:
    """Adaptive Lasso of column i on the remaining columns.

    Coefficients in the returned trace are indexed by position among the other
    columns; use :func:`neighbors_of` to map them to node labels.
    """
    Z = np.asarray(samples, dtype=float)
    n, p = Z.shape
    if n < 2:
        raise ValueError("need at least two samples")
    y = Z[:, i]
    X = Z[:, _others(p, i)]
    tm = TrueModel(truth) if truth is not None else None
    problem = RegressionProblem(X, y, sigma_eps=sigma, truth=tm)
    if np.ptp(y) == 0:
        return _trivial_trace(problem, "constant response column: empty neighborhood")
    return adaptive_lasso(problem, config)


def _trivial_trace(problem: RegressionProblem, note: str) -> AdaptiveTrace:
    from .adaptive import LambdaRange, compute_weights
    from .core import Estimate

    z = np.zeros(problem.p)
    est = Estimate(z, 0.0, 0, True)
    return AdaptiveTrace(z, 0.0, compute_weights(z), 0, (), LambdaRange(0.0, 0.0), 0.0, est, math.nan, (note,))


def neighbors_of(trace: AdaptiveTrace, i: int, p: int) -> set:
    labels = _others(p, i)
    return {int(labels[j]) for j in trace.final.support}


@dataclass
class GraphEstimate:
    and_edges: set
    or_edges: set
    per_node: list
    failures: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def disagreement(self) -> set:
        return self.or_edges - self.and_edges

    def edges(self, rule: str = "and") -> set:
        if rule == "and":
            return self.and_edges
        if rule == "or":
            return self.or_edges
        raise ValueError("rule must be 'and' or 'or'")

    def to_dict(self, rule: str = "both") -> dict:
        out = {}
        if rule in ("and", "both"):
            out["and_edges"] = sorted([list(e) for e in self.and_edges])
        if rule in ("or", "both"):
            out["or_edges"] = sorted([list(e) for e in self.or_edges])
        out["disagreement"] = sorted([list(e) for e in self.disagreement])
        summaries = []
        for i, tr in enumerate(self.per_node):
            if tr is None:
                summaries.append({"node": i, "failed": self.failures.get(i, "unknown error")})
                continue
            p = len(self.per_node)
            summaries.append({
                "node": i,
                "neighbors": sorted(neighbors_of(tr, i, p)),
                "s_bar": tr.s_bar,
                "lambda_init": tr.lambda_init_used,
                "lambda_n": tr.lambda_n_used,
                "converged": tr.final.converged,
                "warnings": list(tr.warnings),
            })
        out["per_node_summaries"] = summaries
        out["warnings"] = list(self.warnings)
        return out

    def to_dot(self, rule: str = "and") -> str:
        lines = ["graph G {"]
        lines += [f"  {i};" for i in range(len(self.per_node))]
        if rule == "both":
            for a, b in sorted(self.or_edges):
                style = "" if (a, b) in self.and_edges else " [style=dashed]"
                lines.append(f"  {a} -- {b}{style};")
        else:
            lines += [f"  {a} -- {b};" for a, b in sorted(self.edges(rule))]
        lines.append("}")
        return "\n".join(lines) + "\n"


def select_graph(samples, config: AdaptiveConfig, sigma: Optional[float | Sequence[float]] = None,
                 precision: Optional[PrecisionModel] = None) -> GraphEstimate:
    """Run all p neighborhood regressions and combine them with the AND and OR rules.

    Per-node noise levels come from ``precision`` (1/sqrt(Q_ii)) when given,
    otherwise from ``sigma`` (scalar or per node).  Node failures are recorded and
    the graph is assembled from the remaining nodes.
    """
    Z = np.asarray(samples, dtype=float)
    n, p = Z.shape
    if n < 2 or p < 2:
        raise ValueError("need n >= 2 samples and p >= 2 nodes")
    if precision is not None:
        if precision.p != p:
            raise ValueError("precision matrix size does not match the samples")
        sig = [precision.node_sigma(i) for i in range(p)]
    elif sigma is not None:
        sig = list(np.broadcast_to(np.asarray(sigma, dtype=float), (p,)))
    elif config.lambda_init is None or config.lambda_n is None:
        raise ValueError("per-node noise level needed: pass sigma or a precision model")
    else:
        sig = [None] * p

    notes = []
    var = Z.var(axis=0)
    off = np.flatnonzero(np.abs(var - 1.0) > 0.2)
    if off.size:
        notes.append(f"{off.size} node(s) have sample variance more than 20% away from 1")

    traces: list = [None] * p
    failures = {}
    nbrs: list = [set() for _ in range(p)]
    for i in range(p):
        truth = None
        if precision is not None:
            truth = beta_from_precision(precision.Q, i)
        try:
            tr = neighborhood_regression(Z, i, config, sig[i], truth)
        except (ValueError, np.linalg.LinAlgError) as exc:
            failures[i] = str(exc)
            continue
        traces[i] = tr
        nbrs[i] = neighbors_of(tr, i, p)
    if failures:
        notes.append(f"{len(failures)} node regression(s) failed")

    and_e, or_e = set(), set()
    for i in range(p):
        for j in nbrs[i]:
            e = _edge(i, j)
            or_e.add(e)
            if i in nbrs[j]:
                and_e.add(e)
    return GraphEstimate(and_e, or_e, traces, failures, notes)
