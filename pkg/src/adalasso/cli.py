"""Command-line entry point: solve, adaptive, check, ggm, simulate."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .adaptive import AdaptiveConfig, adaptive_lasso
from .conditions import condition_report
from .core import Constants, RegressionProblem, WeightVector, validate_problem
from .ggm import PrecisionModel, select_graph
from .harness import ConfigError, ExperimentConfig, emit_report, run_experiment, run_sweep
from .solver import SolverConfig, solve_weighted_lasso

EXIT_CONFIG = 2
EXIT_FAILURES = 3


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, allow_nan=False)
    sys.stdout.write("\n")


def _constants(args) -> Constants:
    kw = {}
    for name in ("c0", "C2", "B", "eta", "M", "k0"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if kw.get("eta") is not None and "M" not in kw:
        # keep the default M admissible for the requested eta
        kw["M"] = max(Constants().M, 4.0 / kw["eta"])
    return Constants(**kw)


def _problem(args, sigma=None) -> RegressionProblem:
    X = io.read_matrix(args.design, header=args.header)
    y = io.read_vector(args.response, header=args.header)
    pr = RegressionProblem(X, y, sigma_eps=sigma)
    errs = validate_problem(pr)
    if errs:
        raise ValueError("; ".join(errs))
    return pr


def cmd_solve(args) -> int:
    pr = _problem(args)
    w = WeightVector(io.read_vector(args.weights, header=args.header)) if args.weights else None
    cfg = SolverConfig(lam=args.lam, weights=w, tol=args.tol, max_iter=args.max_iter)
    _dump(solve_weighted_lasso(pr, cfg).to_dict())
    return 0


def cmd_adaptive(args) -> int:
    pr = _problem(args, sigma=args.sigma)
    cfg = AdaptiveConfig(constants=_constants(args), lambda_init=args.lambda_init, lambda_n=args.lambda_n,
                         lambda_n_position=args.position, K=args.K)
    trace = adaptive_lasso(pr, cfg)
    for msg in trace.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    _dump(trace.to_dict())
    return 0


def cmd_check(args) -> int:
    X = io.read_matrix(args.design, header=args.header)
    Sigma = io.read_matrix(args.sigma_matrix, header=args.header) if args.sigma_matrix else None
    support = None
    if args.support:
        support = [int(round(v)) for v in io.read_vector(args.support, header=args.header)]
    if support is None and args.s is None:
        raise ValueError("pass --support or --s")
    rep = condition_report(X, s=args.s, support=support, Sigma=Sigma, m=args.m, constants=_constants(args),
                           budget=args.budget)
    _dump(rep.to_dict())
    return 0


def cmd_ggm(args) -> int:
    Z = io.read_matrix(args.samples, header=args.header)
    prec = PrecisionModel(io.read_matrix(args.precision, header=args.header)) if args.precision else None
    if prec is None and args.sigma is None:
        raise ValueError("pass --sigma or --precision")
    cfg = AdaptiveConfig(constants=_constants(args))
    g = select_graph(Z, cfg, sigma=args.sigma, precision=prec)
    for msg in g.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    if args.dot:
        Path(args.dot).write_text(g.to_dot("both" if args.rule == "both" else args.rule))
    _dump(g.to_dict(args.rule))
    return 0


def cmd_simulate(args) -> int:
    try:
        cfg = ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if cfg.sweep is not None:
        results = run_sweep(cfg, jobs=args.jobs)
        fmt = args.format
        paths = emit_report(results, fmt, args.out, parameter=cfg.sweep["parameter"])
        fail = max(r.failure_rate for _, r in results)
    else:
        if args.format == "plotdata":
            raise ConfigError("plotdata output needs a sweep in the config")
        res = run_experiment(cfg, jobs=args.jobs)
        paths = emit_report(res, args.format, args.out)
        fail = res.failure_rate
    for p in paths:
        print(p)
    if fail > args.max_fail_rate:
        print(f"replicate failure rate {fail:.3f} exceeds {args.max_fail_rate}", file=sys.stderr)
        return EXIT_FAILURES
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adalasso", description="Adaptive Lasso selection and diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--header", action="store_true", help="skip one header line in every CSV input")

    def consts(p, k0=False, C2=False):
        p.add_argument("--eta", type=float)
        p.add_argument("--M", type=float)
        p.add_argument("--B", type=float)
        p.add_argument("--c0", type=float)
        if k0:
            p.add_argument("--k0", type=float)
        if C2:
            p.add_argument("--C2", type=float)

    p = sub.add_parser("solve", help="weighted Lasso at a fixed lambda")
    common(p)
    p.add_argument("--design", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--weights")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("adaptive", help="two-stage adaptive Lasso")
    common(p)
    p.add_argument("--design", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--lambda-init", type=float)
    p.add_argument("--lambda-n", type=float)
    p.add_argument("--position", type=float, default=0.0)
    p.add_argument("--K", type=float, help="restricted-eigenvalue constant used in the lambda_n range")
    consts(p)
    p.set_defaults(func=cmd_adaptive)

    p = sub.add_parser("check", help="design-condition report")
    common(p)
    p.add_argument("--design", required=True)
    p.add_argument("--sigma-matrix")
    p.add_argument("--support", help="CSV of 0-based support indices")
    p.add_argument("--s", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--budget", type=int, default=4)
    consts(p, k0=True, C2=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("ggm", help="graphical-model edge selection")
    common(p)
    p.add_argument("--samples", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigma", type=float)
    g.add_argument("--precision")
    p.add_argument("--rule", choices=("and", "or", "both"), default="both")
    p.add_argument("--dot")
    consts(p)
    p.set_defaults(func=cmd_ggm)

    p = sub.add_parser("simulate", help="Monte Carlo experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("json", "csv", "plotdata"), default="json")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-fail-rate", type=float, default=0.0)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
