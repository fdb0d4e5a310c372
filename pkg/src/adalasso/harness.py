"""Monte Carlo experiments: plain vs adaptive Lasso support recovery."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .adaptive import AdaptiveConfig, adaptive_lasso, fit_initial
from .conditions import event_T, irrepresentable_margin, sign_recovery_certificate, weighted_incoherence
from .core import Constants, WeightVector, diff_against_truth
from .solver import solve_lasso
from .synth import CovarianceSpec, SignalSpec, design_with_gram, gen_problem, gen_random_design, make_rng

METHODS = ("plain_lasso", "adaptive_lasso", "thresholded_lasso_oracle")
DESIGNS = ("gaussian", "exact_gram")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    covariance: CovarianceSpec
    n: int
    signal: SignalSpec
    sigma_eps: float
    design: str = "gaussian"

    @property
    def p(self) -> int:
        return self.covariance.p

    def to_dict(self) -> dict:
        return {"covariance": self.covariance.to_dict(), "n": self.n, "signal": self.signal.to_dict(),
                "sigma_eps": self.sigma_eps, "design": self.design}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    methods: tuple = ("adaptive_lasso",)
    replicates: int = 100
    master_seed: int = 0
    constants: Constants = field(default_factory=Constants)
    lambda_grid: Optional[tuple] = None
    adaptive: dict = field(default_factory=dict)
    check_conditions: bool = False
    detail: bool = True
    sweep: Optional[dict] = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown or empty methods {bad}; choose from {METHODS}")
        if self.scenario.design not in DESIGNS:
            raise ConfigError(f"design must be one of {DESIGNS}")
        if self.lambda_grid is not None and len(self.lambda_grid) == 0:
            raise ConfigError("lambda_grid must not be empty")
        if self.sweep is not None:
            if self.sweep.get("parameter") not in ("n", "beta_min") or not self.sweep.get("values"):
                raise ConfigError("sweep needs parameter n|beta_min and a nonempty list of values")

    def adaptive_config(self) -> AdaptiveConfig:
        return AdaptiveConfig(constants=self.constants, **self.adaptive)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "methods": list(self.methods),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "constants": asdict(self.constants),
            "lambda_grid": list(self.lambda_grid) if self.lambda_grid is not None else None,
            "adaptive": dict(self.adaptive),
            "check_conditions": self.check_conditions,
            "detail": self.detail,
            "sweep": self.sweep,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            sc = d["scenario"]
            cov = CovarianceSpec.from_dict(sc["covariance"])
            scenario = Scenario(cov, int(sc["n"]), SignalSpec.from_dict(sc["signal"]),
                                float(sc["sigma_eps"]), sc.get("design", "gaussian"))
            constants = Constants(**d.get("constants", {}))
            grid = d.get("lambda_grid")
            adaptive = dict(d.get("adaptive", {}))
            AdaptiveConfig(constants=constants, **adaptive)
            return cls(
                scenario=scenario,
                methods=tuple(d.get("methods", ("adaptive_lasso",))),
                replicates=int(d.get("replicates", 100)),
                master_seed=int(d.get("master_seed", 0)),
                constants=constants,
                lambda_grid=tuple(float(x) for x in grid) if grid is not None else None,
                adaptive=adaptive,
                check_conditions=bool(d.get("check_conditions", False)),
                detail=bool(d.get("detail", True)),
                sweep=d.get("sweep"),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from exc


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    return x


@dataclass
class ExperimentResult:
    per_method: dict
    per_replicate: Optional[list]
    condition_summary: dict
    config: dict
    failure_rate: float
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        # wall time is kept out so that reports are reproducible byte for byte
        return _clean({
            "config": self.config,
            "per_method": self.per_method,
            "condition_summary": self.condition_summary,
            "failure_rate": self.failure_rate,
            "per_replicate": self.per_replicate,
        })


def replicate_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Stream for replicate ``index``; identical to the index-th child of SeedSequence(master).spawn."""
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def _draw(scenario: Scenario, seed: np.random.SeedSequence):
    ds, ps = seed.spawn(2)
    if scenario.design == "gaussian":
        X = gen_random_design(scenario.covariance, scenario.n, make_rng(ds))
    else:
        X = design_with_gram(scenario.covariance.matrix(), scenario.n, make_rng(ds))
    return gen_problem(X, scenario.signal, scenario.sigma_eps, make_rng(ps))


def _outcome(beta_hat, truth, converged=True) -> dict:
    d = diff_against_truth(np.asarray(beta_hat), truth)
    delta = np.asarray(beta_hat) - truth.beta_star
    return {
        "support_exact": bool(d.support_exact and converged),
        "sign_exact": bool(d.signs_exact and converged),
        "l2_error": float(np.linalg.norm(delta)),
        "l1_error": float(np.sum(np.abs(delta))),
        "failed": not converged,
    }


def _failed(msg: str) -> dict:
    return {"support_exact": False, "sign_exact": False, "l2_error": math.nan, "l1_error": math.nan,
            "failed": True, "error": msg}


def run_replicate(config: ExperimentConfig, index: int) -> dict:
    """One replicate; a pure function of the config and the index."""
    problem = _draw(config.scenario, replicate_seed(config.master_seed, index))
    truth = problem.truth
    c = config.constants
    tol = c.tol
    row: dict = {"replicate": index}
    acfg = config.adaptive_config()
    init = None

    if "plain_lasso" in config.methods or "thresholded_lasso_oracle" in config.methods or config.check_conditions:
        try:
            init = fit_initial(problem, acfg)
        except (ValueError, np.linalg.LinAlgError) as exc:
            init = None
            row["init_error"] = str(exc)

    if "plain_lasso" in config.methods:
        if config.lambda_grid is None:
            row["plain_lasso"] = _outcome(init.beta_init, truth,
                                          init.estimate.converged) if init else _failed("initial fit failed")
        else:
            grid_rows = []
            for lam in config.lambda_grid:
                try:
                    est = solve_lasso(problem, lam, tol=tol, max_iter=c.max_iter)
                    r = _outcome(est.beta_hat, truth, est.converged)
                    cert = sign_recovery_certificate(problem, lam, WeightVector.ones(problem.p))
                    r["certificate"] = cert.to_dict()
                except (ValueError, np.linalg.LinAlgError) as exc:
                    r = _failed(str(exc))
                grid_rows.append(r)
            row["plain_lasso_grid"] = grid_rows

    if "thresholded_lasso_oracle" in config.methods:
        if init is None:
            row["thresholded_lasso_oracle"] = _failed("initial fit failed")
        else:
            b = np.where(np.abs(init.beta_init) > truth.beta_min / 2, init.beta_init, 0.0)
            row["thresholded_lasso_oracle"] = _outcome(b, truth, init.estimate.converged)

    trace = None
    if "adaptive_lasso" in config.methods:
        try:
            trace = adaptive_lasso(problem, acfg)
            r = _outcome(trace.final.beta_hat, truth, trace.final.converged)
            cert = sign_recovery_certificate(problem, trace.lambda_n_used, trace.weights)
            strict = cert.strict(10 * tol)
            r["certificate"] = cert.to_dict()
            r["certificate_decisive"] = strict is not None
            r["certificate_agrees"] = None if strict is None else bool(strict == r["sign_exact"])
            r["s_bar"] = trace.s_bar
            r["lambda_init"] = trace.lambda_init_used
            r["lambda_n"] = trace.lambda_n_used
            r["lambda_n_degenerate"] = trace.lambda_n_range.degenerate
            r["K_used"] = trace.K_used
        except (ValueError, np.linalg.LinAlgError) as exc:
            r = _failed(str(exc))
        row["adaptive_lasso"] = r

    if config.check_conditions:
        S = list(truth.support)
        n = problem.n
        c0 = float(np.max(np.linalg.norm(problem.X, axis=0))) / math.sqrt(n)
        cond = {"event_T": event_T(problem.X, problem.noise, problem.sigma_eps, c0)}
        if init is not None:
            cond["init_l1_error"] = float(np.sum(np.abs(init.beta_init - truth.beta_star)))
            cond["lambda_init"] = init.lambda_init
        if S and len(S) < problem.p:
            try:
                irr = irrepresentable_margin(problem.X, S, c.eta)
                cond["irrepresentable_norm"] = irr.norm
                cond["irrepresentable_holds"] = irr.holds
                if trace is not None:
                    w = trace.weights
                    if np.any(np.isinf(w.w[S])):
                        cond["weighted_incoherence_ok"] = False
                    else:
                        cond["weighted_incoherence_ok"] = weighted_incoherence(
                            problem.X, S, w, truth.signs[S], c.eta).holds
            except np.linalg.LinAlgError:
                cond["singular_support_gram"] = True
        row["conditions"] = cond
    return row


def _run_batch(args):
    config, indices = args
    with threadpool_limits(limits=1):
        return [run_replicate(config, i) for i in indices]


def _rows(config: ExperimentConfig, jobs: int) -> list:
    idx = list(range(config.replicates))
    if jobs <= 1:
        return _run_batch((config, idx))
    chunks = [idx[k::jobs] for k in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_batch, [(config, ch) for ch in chunks if ch]))
    rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: r["replicate"])
    return rows


def _mean(vals):
    vals = [v for v in vals if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return float(np.mean(vals)) if vals else None


def _summarize(outcomes: list, reps: int) -> dict:
    agree = [o.get("certificate_agrees") for o in outcomes]
    decisive = [a for a in agree if a is not None]
    return {
        "exact_support_rate": sum(o["support_exact"] for o in outcomes) / reps,
        "exact_sign_rate": sum(o["sign_exact"] for o in outcomes) / reps,
        "mean_l2_error": _mean([o["l2_error"] for o in outcomes]),
        "mean_l1_error": _mean([o["l1_error"] for o in outcomes]),
        "certificate_agreement_rate": (sum(decisive) / len(decisive)) if decisive else None,
        "certificate_decisive_count": len(decisive),
        "failures": sum(bool(o["failed"]) for o in outcomes),
    }


def aggregate(config: ExperimentConfig, rows: list) -> ExperimentResult:
    reps = len(rows)
    per_method = {}
    failed_any = [False] * reps
    for m in config.methods:
        if m == "plain_lasso" and config.lambda_grid is not None:
            per_lam = []
            for k, lam in enumerate(config.lambda_grid):
                outs = [r["plain_lasso_grid"][k] for r in rows]
                s = _summarize(outs, reps)
                s["lambda"] = lam
                per_lam.append(s)
            # most favourable grid point for the baseline; ties go to the smaller lambda
            best = max(range(len(per_lam)), key=lambda k: (per_lam[k]["exact_support_rate"], -k))
            summary = dict(per_lam[best])
            summary["best_lambda"] = config.lambda_grid[best]
            summary["grid"] = per_lam
            per_method[m] = summary
            for i, r in enumerate(rows):
                failed_any[i] |= bool(r["plain_lasso_grid"][best]["failed"])
        else:
            outs = [r[m] for r in rows]
            per_method[m] = _summarize(outs, reps)
            for i, o in enumerate(outs):
                failed_any[i] |= bool(o["failed"])
    if "adaptive_lasso" in per_method:
        ad = [r["adaptive_lasso"] for r in rows]
        per_method["adaptive_lasso"]["mean_s_bar"] = _mean([o.get("s_bar") for o in ad])
        per_method["adaptive_lasso"]["mean_lambda_n"] = _mean([o.get("lambda_n") for o in ad])
        per_method["adaptive_lasso"]["degenerate_range_rate"] = \
            sum(bool(o.get("lambda_n_degenerate")) for o in ad) / reps

    cond_summary = {}
    if config.check_conditions:
        cs = [r["conditions"] for r in rows]

        def rate(key):
            vals = [c[key] for c in cs if key in c]
            return sum(map(bool, vals)) / len(vals) if vals else None

        cond_summary = {
            "event_T_rate": rate("event_T"),
            "irrepresentable_holds_rate": rate("irrepresentable_holds"),
            "irrepresentable_norm_mean": _mean([c.get("irrepresentable_norm") for c in cs]),
            "irrepresentable_norm_min": min((c["irrepresentable_norm"] for c in cs if "irrepresentable_norm" in c),
                                            default=None),
            "weighted_incoherence_rate": rate("weighted_incoherence_ok"),
            "mean_init_l1_error": _mean([c.get("init_l1_error") for c in cs]),
        }
    return ExperimentResult(
        per_method=per_method,
        per_replicate=rows if config.detail else None,
        condition_summary=cond_summary,
        config=config.to_dict(),
        failure_rate=sum(failed_any) / reps,
    )


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    t0 = time.perf_counter()
    rows = _rows(config, jobs)
    res = aggregate(config, rows)
    res.wall_time = time.perf_counter() - t0
    return res


def _with_value(config: ExperimentConfig, parameter: str, value) -> ExperimentConfig:
    sc = config.scenario
    if parameter == "n":
        sc = replace(sc, n=int(value))
    else:
        sc = replace(sc, signal=replace(sc.signal, beta_min=float(value)))
    return replace(config, scenario=sc, sweep=None)


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> list:
    """[(value, ExperimentResult)] over the sweep values, in the given order."""
    if config.sweep is None:
        raise ConfigError("config has no sweep")
    par = config.sweep["parameter"]
    return [(v, run_experiment(_with_value(config, par, v), jobs)) for v in config.sweep["values"]]


@dataclass
class Comparison:
    plain_rate: float
    plain_best_lambda: float
    adaptive_rate: float
    population_irrepresentable_norm: float
    weighted_incoherence_rate: Optional[float]
    plain_condition_failures: dict
    adaptive_condition_failures: dict
    result: ExperimentResult

    def to_dict(self) -> dict:
        return _clean({
            "plain_best_grid_rate": self.plain_rate,
            "plain_best_lambda": self.plain_best_lambda,
            "adaptive_rate": self.adaptive_rate,
            "population_irrepresentable_norm": self.population_irrepresentable_norm,
            "weighted_incoherence_rate": self.weighted_incoherence_rate,
            "plain_certificate_failures": self.plain_condition_failures,
            "adaptive_certificate_failures": self.adaptive_condition_failures,
        })


def _cert_failures(certs: list) -> dict:
    n = len(certs)
    a = sum(1 for c in certs if c and not c["condition_a"]["holds"])
    b = sum(1 for c in certs if c and not c["condition_b"]["holds"])
    return {"condition_a_fail_rate": a / n if n else None, "condition_b_fail_rate": b / n if n else None}


def compare_methods(config: ExperimentConfig, jobs: int = 1) -> Comparison:
    """Plain Lasso at its best grid lambda against the adaptive pipeline, with the
    certificate condition that fails for each."""
    if not config.lambda_grid:
        raise ConfigError("comparison needs a nonempty lambda_grid")
    cfg = replace(config, methods=("plain_lasso", "adaptive_lasso"), check_conditions=True, detail=True)
    res = run_experiment(cfg, jobs)
    pl = res.per_method["plain_lasso"]
    best = list(config.lambda_grid).index(pl["best_lambda"])
    rows = res.per_replicate
    Sigma = config.scenario.covariance.matrix()
    S = list(range(config.scenario.signal.s))
    pop = irrepresentable_margin(Sigma, S, config.constants.eta, gram=True).norm if S else 0.0
    return Comparison(
        plain_rate=pl["exact_support_rate"],
        plain_best_lambda=pl["best_lambda"],
        adaptive_rate=res.per_method["adaptive_lasso"]["exact_support_rate"],
        population_irrepresentable_norm=pop,
        weighted_incoherence_rate=res.condition_summary.get("weighted_incoherence_rate"),
        plain_condition_failures=_cert_failures([r["plain_lasso_grid"][best].get("certificate") for r in rows]),
        adaptive_condition_failures=_cert_failures([r["adaptive_lasso"].get("certificate") for r in rows]),
        result=res,
    )


def _csv_rows(result: ExperimentResult) -> tuple[list, list]:
    header = ["replicate"]
    methods = result.config["methods"]
    grid = result.config.get("lambda_grid")
    best = None
    if "plain_lasso" in methods and grid is not None:
        best = grid.index(result.per_method["plain_lasso"]["best_lambda"])
    keys = ["support_exact", "sign_exact", "l2_error", "l1_error", "failed"]
    for m in methods:
        header += [f"{m}.{k}" for k in keys]
    out = []
    for r in result.per_replicate or []:
        line = [r["replicate"]]
        for m in methods:
            o = r["plain_lasso_grid"][best] if (m == "plain_lasso" and best is not None) else r[m]
            line += [_clean(o[k]) for k in keys]
        out.append(line)
    return header, out


def emit_report(result, fmt: str, out_dir, parameter: str = "value") -> list:
    """Write ``report.json`` (+ ``timing.json``), ``replicates.csv`` or ``plot_<method>.csv``.

    For ``plotdata`` pass the list returned by :func:`run_sweep`.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt == "json":
        if isinstance(result, list):
            payload = [{"value": v, "result": r.to_dict()} for v, r in result]
            wall = sum(r.wall_time for _, r in result)
        else:
            payload = result.to_dict()
            wall = result.wall_time
        p = out / "report.json"
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        t = out / "timing.json"
        t.write_text(json.dumps({"wall_time": wall}) + "\n")
        paths += [p, t]
    elif fmt == "csv":
        results = result if isinstance(result, list) else [(None, result)]
        for v, r in results:
            name = "replicates.csv" if v is None else f"replicates_{v}.csv"
            header, rows = _csv_rows(r)
            p = out / name
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(rows)
            paths.append(p)
    elif fmt == "plotdata":
        if not isinstance(result, list):
            raise ValueError("plotdata needs sweep results")
        methods = result[0][1].config["methods"] if result else []
        par = parameter
        for m in methods:
            p = out / f"plot_{m}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow([par, "exact_support_rate"])
                for v, r in result:
                    w.writerow([v, r.per_method[m]["exact_support_rate"]])
            paths.append(p)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return paths
