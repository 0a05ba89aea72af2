"""Command-line front end: ``oglasso solve`` and ``oglasso certify``.

``solve`` writes a report JSON (``--out``) and a JSON-lines trace next to it
(``<out stem>.trace.jsonl``). ``certify`` solves to high accuracy and writes a
per-group CSV comparing the LASSO and OGN zero-group certificates, closed by a
``total`` row with the three counts.

Exit codes: 0 converged, 1 not converged, 2 usage error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .adadrops import AdaDropsConfig, adadrops_run
from .certificates import (
    beta_group_norms,
    detect_zero_groups_lasso,
    detect_zero_groups_ogn,
    lasso_certificate,
    ogn_certificate,
)
from .data import (
    ProblemData,
    SyntheticSpec,
    gen_multitask,
    gen_sliding,
    gen_tree,
    lambda_max,
    parse_libsvm,
)
from .errors import StepSizeError
from .groups import build_lifting, compute_supports, read_groups
from .linalg import LinearSolverPlan, as_design
from .solvers import SOLVERS, SolverConfig, extract_support, pd_steps

SCHEMA = 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="LIBSVM file (needs --groups)")
    src.add_argument("--gen", choices=["sliding", "tree", "multitask"])
    common.add_argument("--groups", type=Path, help="group file: 'n N' then 'w k i_1 .. i_k' (1-based)")
    common.add_argument("--N", type=int, default=100, help="groups (sliding) or features (multitask)")
    common.add_argument("--gs", type=int, default=10, help="group size (sliding)")
    common.add_argument("--os", type=int, default=3, help="overlap (sliding)")
    common.add_argument("--m", type=int, help="samples (default about n/2)")
    common.add_argument("--q", type=int, default=5, help="tasks (multitask)")
    common.add_argument("--depth", type=int, default=4, help="tree depth")
    common.add_argument("--fanout", type=int, default=3, help="tree fanout")
    lam = common.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--lambda-ratio", type=float, default=10.0, help="lambda = lambda_max / R")
    common.add_argument("--solver", choices=sorted(SOLVERS),
                        help="default: admm for solve, varpro for certify")
    common.add_argument("--sigma", type=float, help="PD primal step")
    common.add_argument("--tau", type=float, help="PD dual step / ADMM penalty")
    common.add_argument("--linear", choices=["cholesky", "pcg"], default="cholesky")
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iters", type=int, default=20000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path)

    parser = argparse.ArgumentParser(prog="oglasso", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", parents=[common], help="run a solver, optionally under AdaDROPS")
    solve.add_argument("--adadrops", choices=["off", "lasso", "ogn"], default="off")
    solve.add_argument("--growth-cap", type=int, default=10)
    solve.add_argument("--init-size", type=int, default=10)
    solve.add_argument("--max-rounds", type=int, default=1000)
    cert = sub.add_parser("certify", parents=[common], help="compare zero-group certificates at x*")
    cert.add_argument("--cert-tol", type=float, default=1e-6,
                      help="relative safety margin on both certificate thresholds")
    return parser


def load_problem(args, parser):
    if args.data is not None:
        if args.groups is None:
            parser.error("--data needs --groups")
        covering = read_groups(args.groups)
        A, y = parse_libsvm(args.data, n_features=covering.n)
        A = as_design(A)
        if args.lam is not None:
            lam = args.lam
        else:
            lam = lambda_max(A, y, covering) / args.lambda_ratio
        return ProblemData(A, y, lam), covering
    kw = {"seed": args.seed, "lam": args.lam, "lambda_ratio": args.lambda_ratio}
    if args.gen == "sliding":
        if not 0 <= args.os < args.gs:
            parser.error("--os must satisfy 0 <= os < gs")
        return gen_sliding(SyntheticSpec(args.N, args.gs, args.os, m=args.m, **kw))
    if args.gen == "tree":
        return gen_tree(args.depth, args.fanout, m=args.m, **kw)
    return gen_multitask(args.N, args.q, m=args.m, **kw)


def solver_config(args, tol_default) -> SolverConfig:
    return SolverConfig(
        max_iters=args.max_iters,
        tol=args.tol if args.tol is not None else tol_default,
        sigma=args.sigma,
        tau=args.tau,
        plan=LinearSolverPlan(kind=args.linear),
        seed=args.seed,
    )


def _echo(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}


def _run(args, problem, L, config):
    if getattr(args, "adadrops", "off") != "off":
        cfg = AdaDropsConfig(
            option=args.adadrops,
            init_size=min(args.init_size, L.n_groups),
            growth_cap=args.growth_cap,
            inner=config,
            max_outer_rounds=args.max_rounds,
        )
        return adadrops_run(problem, L, args.solver, cfg)
    return SOLVERS[args.solver](problem, L, config)


def cmd_solve(args, parser) -> int:
    args.solver = args.solver or "admm"
    problem, covering = load_problem(args, parser)
    L = build_lifting(covering)
    config = solver_config(args, 1e-8)
    if args.solver == "pd":
        pd_steps(L, config)
    t0 = time.perf_counter()
    result = _run(args, problem, L, config)
    wall = time.perf_counter() - t0
    x = result.x
    last = result.trace.last
    support = extract_support(L, x)

    out = args.out or Path("oglasso_report.json")
    trace_path = out.with_name(out.stem + ".trace.jsonl")
    result.trace.to_jsonl(trace_path)
    report = {
        "schema": SCHEMA,
        "command": "solve",
        "seed": args.seed,
        "config": _echo(args),
        "n": problem.n,
        "m": problem.m,
        "n_groups": covering.n_groups,
        "lambda": problem.lam,
        "converged": bool(result.converged),
        "objective": last["obj"],
        "residual": last["res"],
        "iterations": last["iter"],
        "kappa": last["kappa"],
        "support": {
            "nnz_x": int(np.count_nonzero(x)),
            "active_groups": int(support.size),
            "groups": [int(t) + 1 for t in support],
        },
        "rounds": len(result.trace.rounds),
        "wall_time": wall,
        "trace": str(trace_path),
    }
    out.write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps({k: report[k] for k in ("converged", "objective", "residual", "kappa")}))
    return 0 if result.converged else 1


def cmd_certify(args, parser) -> int:
    args.solver = args.solver or "varpro"
    problem, covering = load_problem(args, parser)
    L = build_lifting(covering)
    config = solver_config(args, 1e-10)
    if args.solver == "pd":
        pd_steps(L, config)
    result = SOLVERS[args.solver](problem, L, config)
    support = extract_support(L, result.x)
    S = compute_supports(covering, L, support)
    x = S.project_x(result.x)
    beta = lasso_certificate(problem, x)
    cert = ogn_certificate(L, S, beta, x)
    lasso_zero = np.zeros(covering.n_groups, dtype=bool)
    ogn_zero = np.zeros(covering.n_groups, dtype=bool)
    lasso_zero[detect_zero_groups_lasso(beta, covering, tol=args.cert_tol)] = True
    ogn_zero[detect_zero_groups_ogn(L, cert, tol=args.cert_tol)] = True
    true_zero = ~S.active
    beta_norm = beta_group_norms(beta, covering)
    u_norm = L.block_norms(cert.u)

    fh = args.out.open("w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["group", "weight", "beta_norm", "ogn_norm", "lasso_zero", "ogn_zero", "true_zero"])
        for t in range(covering.n_groups):
            w.writerow([t + 1, repr(float(covering.weights[t])), repr(float(beta_norm[t])),
                        repr(float(u_norm[t])), int(lasso_zero[t]), int(ogn_zero[t]), int(true_zero[t])])
        w.writerow(["total", "", "", "", int(lasso_zero.sum()), int(ogn_zero.sum()), int(true_zero.sum())])
    finally:
        if args.out:
            fh.close()
    if args.out:
        print(json.dumps({
            "schema": SCHEMA, "seed": args.seed, "converged": bool(result.converged),
            "true_zero": int(true_zero.sum()), "lasso_detected": int(lasso_zero.sum()),
            "ogn_detected": int(ogn_zero.sum()),
        }))
    return 0 if result.converged else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args, parser)
        return cmd_certify(args, parser)
    except StepSizeError as exc:
        parser.error(str(exc))
    except (ArithmeticError, RuntimeError, ValueError, OSError) as exc:
        print(f"oglasso: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
