"""Command-line driver.

Exit codes: 0 success, 1 invalid config, 2 infeasible single instance,
3 self-check failure, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

EXIT_OK = 0
EXIT_BAD_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_CHECK_FAILED = 3
EXIT_SOLVER_FAILURE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaysec",
        description="Power-minimal secure source/relay beamforming under "
        "norm-bounded eavesdropper channel uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one seeded instance, print JSON")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--seed", type=int, default=0)

    p_sweep = sub.add_parser("sweep", help="power-vs-thresholds Monte Carlo sweep")
    p_sweep.add_argument("--config", required=True)

    p_eve = sub.add_parser("eve-dist", help="eavesdropper SNR distribution run")
    p_eve.add_argument("--config", required=True)

    p_check = sub.add_parser("check", help="run the invariant self-check suites")
    p_check.add_argument("--dims", default="2,3", help="comma list of M=N sizes")
    p_check.add_argument("--trials", type=int, default=20)
    p_check.add_argument("--seed", type=int, default=0)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def _load(path: str):
    from .config import ConfigError, load_spec

    try:
        return load_spec(path)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return None


def _cmd_solve(args) -> int:
    from .experiments import run_single
    from .rounding import RoundingConfig
    from .sysmodel import sample_channels

    spec = _load(args.config)
    if spec is None:
        return EXIT_BAD_CONFIG
    ch = sample_channels(spec.system, args.seed)
    pr = run_single(
        ch,
        spec.system,
        spec.alt,
        RoundingConfig(spec.k_samples, spec.rank_tol, args.seed),
        spec.include_sigma_e,
        spec.max_polish,
    )
    result = {
        "status": pr.lifted.status,
        "feasible": pr.ok,
        "iterations": pr.lifted.iterations,
        "xi_trace": [float(x) for x in pr.lifted.xi_trace],
        "polish_rounds": pr.polish_rounds,
        "seed": args.seed,
    }
    if pr.lifted.ok:
        result["relaxed_power"] = float(pr.lifted.power)
    if pr.rounded is not None:
        result["total_power"] = float(pr.rounded.total_power)
        result["rounding_source"] = pr.rounded.source
        result["q"] = [[v.real, v.imag] for v in pr.rounded.pair.q]
        result["w_mat"] = [
            [[v.real, v.imag] for v in row] for row in np.atleast_2d(pr.rounded.pair.w_mat)
        ]
    print(json.dumps(result, indent=2, sort_keys=True))
    if pr.lifted.status == "failed":
        return EXIT_SOLVER_FAILURE
    if not pr.ok:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from dataclasses import replace

    from .experiments import run_power_sweep, run_ps_sensitivity
    from .reporting import emit_reports
    from .sysmodel import sample_channels

    spec = _load(args.config)
    if spec is None:
        return EXIT_BAD_CONFIG
    records = run_power_sweep(spec)
    # document (not assert) how the initialization power moves the first
    # trial's stationary value at the first sweep point
    ch0 = sample_channels(spec.system, np.random.SeedSequence(spec.root_seed, spawn_key=(0, 0)))
    cfg0 = replace(
        spec.system,
        r_b=spec.r_b_values[0],
        r_e=spec.r_e_values[0],
        eps=spec.eps_values[0],
    )
    extras = {
        "ps_sensitivity": run_ps_sensitivity(
            ch0, cfg0, spec.alt, include_sigma_e=spec.include_sigma_e
        )
    }
    paths = emit_reports(records, spec, extras=extras)
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_eve_dist(args) -> int:
    from .experiments import run_eve_distribution
    from .reporting import EmptyReportError, emit_reports

    spec = _load(args.config)
    if spec is None:
        return EXIT_BAD_CONFIG
    records = run_eve_distribution(spec)
    try:
        paths = emit_reports(records, spec)
    except EmptyReportError as exc:
        print(f"no reportable records: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_check(args) -> int:
    from .selfcheck import run_self_check

    try:
        dims = [(int(d), int(d)) for d in args.dims.split(",") if d.strip()]
    except ValueError:
        print(f"invalid --dims value: {args.dims!r}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if not dims:
        print("empty --dims", file=sys.stderr)
        return EXIT_BAD_CONFIG
    report = run_self_check(dims=dims, trials=args.trials, seed=args.seed)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "solve": _cmd_solve,
        "sweep": _cmd_sweep,
        "eve-dist": _cmd_eve_dist,
        "check": _cmd_check,
        "serve": _cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
