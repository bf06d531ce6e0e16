"""Command-line entry points: estimate, simulate, reproduce."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .estimators import difference_in_means, linear_adjusted, nonparametric, rule_of_thumb
from .graphon import make_graphon
from .harness import (
    TABLE_IDS,
    emit_report,
    get_scenario,
    reproduce_table,
    run_scenario,
    scenario_ids,
)
from .kernels import KernelConfig
from .trial import load_edge_list, load_trial_csv
from .variance import (
    confidence_interval,
    conservative_network_term,
    estimate_b,
    estimate_derivative_means,
    leading_eigenpairs,
    pc_balancing_weights,
    variance_np_polyseq,
    variance_reg,
)


def _default_workers() -> int:
    return int(os.environ.get("NETATE_WORKERS", "1"))


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _cmd_estimate(args) -> int:
    network = None
    if args.edges:
        network, _ = load_edge_list(args.edges, min_count=args.min_count, drop_isolated=args.drop_isolated)
    data = load_trial_csv(args.data, pi=args.pi, network=network)

    if args.method == "dim":
        result = difference_in_means(data)
    elif args.method == "linear":
        result = linear_adjusted(data)
    else:
        q, h, b = rule_of_thumb(
            data.n, data.p, args.alpha, data.Z, h_band=args.h_band, b_trim=args.b_trim
        )
        config = KernelConfig(q=q, p=data.p, h_band=h, b_trim=b, alpha=args.alpha)
        result = nonparametric(data, config)

    variance = args.variance
    if variance is None:
        variance = "polyseq" if args.method == "np" else "spectral"
    allowed = ("polyseq", "none") if args.method == "np" else ("spectral", "conservative", "none")
    if variance not in allowed:
        print(f"error: --variance {variance} not available for --method {args.method}", file=sys.stderr)
        return 2
    if variance == "none":
        payload = {
            "tau_hat": result.tau_hat,
            "variance_hat": None,
            "ci_low": None,
            "ci_high": None,
            "method": result.method,
            "diagnostics": _json_ready(dict(result.diagnostics)),
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return 0

    b_hat = d1 = d0 = 0.0
    network_term_note = None
    if variance in ("spectral", "polyseq"):
        if network is not None:
            if args.rank is None:
                print("error: --rank is required with --edges for spectral/polyseq variance", file=sys.stderr)
                return 2
            b_hat = estimate_b(network)
            spectral = leading_eigenpairs(network, args.rank)
            weights = pc_balancing_weights(network, spectral, data.W, data.pi)
            d1, d0 = estimate_derivative_means(data, weights, data.pi)
        else:
            network_term_note = "omitted (no network supplied)"

    if variance == "polyseq":
        v_hat = variance_np_polyseq(
            data, b_hat, (d1, d0), max_degree=args.max_degree, rel_tol=args.rel_tol
        )
        diagnostics = dict(result.diagnostics)
    else:
        if args.method == "linear":
            fit_frame, fit = data, result
        else:
            fit_frame = _intercept_only(data)
            fit = linear_adjusted(fit_frame)
        report = variance_reg(fit_frame, fit, b_hat, d1, d0)
        c1, c2, c3, c4 = report.components
        if variance == "conservative":
            c4 = data.pi * (1.0 - data.pi) * conservative_network_term(result.tau_hat)
        v_hat = c1 + c2 + c3 + c4
        diagnostics = dict(result.diagnostics)
        diagnostics["variance_components"] = [c1, c2, c3, c4]

    lo, hi = confidence_interval(result.tau_hat, v_hat, data.n, args.level)
    diagnostics["variance_method"] = variance
    if network_term_note:
        diagnostics["network_term"] = network_term_note
    payload = {
        "tau_hat": result.tau_hat,
        "variance_hat": v_hat,
        "ci_low": lo,
        "ci_high": hi,
        "method": result.method,
        "diagnostics": _json_ready(diagnostics),
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _intercept_only(data):
    # the dim variance uses residuals around group means (intercept-only design)
    from dataclasses import replace

    return replace(data, Z=np.empty((data.n, 0)))


def _cmd_simulate(args) -> int:
    scenario = get_scenario(
        args.scenario,
        p=args.p,
        pi=args.pi,
        interference=None if args.interference is None else args.interference,
        np_alpha=args.alpha,
    )
    if args.graphon and scenario.graphon is not None:
        from dataclasses import replace

        scenario = replace(scenario, graphon=make_graphon(args.graphon))
    np_overrides = {}
    if args.h_band is not None:
        np_overrides["h_band"] = args.h_band
    if args.b_trim is not None:
        np_overrides["b_trim"] = args.b_trim
    summary = run_scenario(
        scenario,
        args.n,
        tuple(args.methods.split(",")),
        reps=args.reps,
        seed=args.seed,
        workers=args.workers,
        np_overrides=np_overrides,
    )
    paths = emit_report(summary, args.out, formats=("json", "csv", "histogram-csv"))
    for p in paths:
        print(p)
    return 0


def _cmd_reproduce(args) -> int:
    contacts = {}
    if args.contacts_morning:
        contacts["morning"] = args.contacts_morning
    if args.contacts_midday:
        contacts["midday"] = args.contacts_midday
    report = reproduce_table(
        args.table,
        budget=args.budget,
        seed=args.seed,
        workers=args.workers,
        out_dir=args.out,
        contacts=contacts or None,
    )
    for cell in report["cells"]:
        parts = []
        for key, value in cell.items():
            if isinstance(value, float):
                parts.append(f"{key}={value:.4g}")
            else:
                parts.append(f"{key}={value}")
        print("  ".join(parts))
    if report["scaled"]:
        factor = report["mc_tolerance_factor"]
        print(f"[scaled run: {report['reps']} reps; widen Monte Carlo tolerances by {factor:.2f}]")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netate",
        description="Average treatment effect estimation under network interference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate the ATE from a dataset CSV")
    est.add_argument("--data", required=True, help="CSV with header y,w,z1,...,zp")
    est.add_argument("--pi", type=float, required=True, help="design treatment probability")
    est.add_argument("--edges", help="edge-list CSV 'i,j[,count]'")
    est.add_argument("--min-count", type=int, default=1)
    est.add_argument("--drop-isolated", action="store_true")
    est.add_argument("--method", choices=("dim", "linear", "np"), default="linear")
    est.add_argument("--variance", choices=("spectral", "conservative", "polyseq", "none"))
    est.add_argument("--rank", type=int, help="spectral rank (required with --edges)")
    est.add_argument("--alpha", type=float, default=0.01, help="quantile level for the trim constant")
    est.add_argument("--h-band", type=float, help="bandwidth override")
    est.add_argument("--b-trim", type=float, help="trim threshold override")
    est.add_argument("--max-degree", type=int, default=5)
    est.add_argument("--rel-tol", type=float, default=0.05)
    est.add_argument("--level", type=float, default=0.95)
    est.add_argument("--out", help="write the JSON result here instead of stdout")
    est.set_defaults(func=_cmd_estimate)

    sim = sub.add_parser("simulate", help="run a registered Monte Carlo scenario")
    sim.add_argument("--scenario", required=True, choices=scenario_ids())
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--pi", type=float)
    sim.add_argument("--p", type=int)
    sim.add_argument("--graphon", help="graphon registry key override (e.g. constant:0.5)")
    sim.add_argument("--methods", default="dim,linear,np")
    sim.add_argument("--reps", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--workers", type=int, default=_default_workers())
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--h-band", type=float)
    sim.add_argument("--b-trim", type=float)
    sim.add_argument("--interference", action=argparse.BooleanOptionalAction, default=None)
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=_cmd_simulate)

    rep = sub.add_parser("reproduce", help="re-run one of the reported result grids")
    rep.add_argument("--table", required=True, choices=TABLE_IDS)
    rep.add_argument("--budget", type=float, default=1.0, help="fraction of the full 1000 reps")
    rep.add_argument("--seed", type=int, default=20240)
    rep.add_argument("--workers", type=int, default=_default_workers())
    rep.add_argument("--out", help="directory for report.json")
    rep.add_argument("--contacts-morning", help="contact CSV replacing the bundled morning network")
    rep.add_argument("--contacts-midday", help="contact CSV replacing the bundled midday network")
    rep.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
