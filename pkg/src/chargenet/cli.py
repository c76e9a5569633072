"""Command-line front end.

Subcommands: solve, oracle, evaluate, generate, report, simulate-queue.
Exit codes are a stable contract: 0 converged/ok, 2 not converged,
3 infeasible, 4 configuration error.  Tolerance relations are checked
before any solve work so misconfigured runs fail fast.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .bilevel import DesignDecision, evaluate_bilevel_point
from .errors import (ChargenetError, ConfigError, EquilibriumError,
                     InfeasibleError, InstanceFormatError)
from .network import GeneratorConfig, generate_instance, load_instance, \
    save_instance
from .oracle import DEFAULT_CAP, solve_oracle, write_oracle_csv
from .queueing import QueueParams, erlang_c_wait_prob, simulate_wait_prob
from .report import ITERATION_FIELDS, iteration_row, price_stats, render, \
    write_bundle
from .solver import Tolerances, run

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INFEASIBLE = 3
EXIT_CONFIG = 4

STATUS_EXIT = {"converged": EXIT_OK, "iteration-limit": EXIT_NOT_CONVERGED,
               "time-limit": EXIT_NOT_CONVERGED, "infeasible": EXIT_INFEASIBLE}


def _tolerances(args):
    kwargs = {}
    if args.eps_u is not None:
        kwargs["eps_u_rel"] = args.eps_u
    if args.eps_l is not None:
        kwargs["eps_l"] = args.eps_l
    tol = Tolerances(**kwargs)
    tol.validate()
    return tol


def cmd_solve(args):
    tol = _tolerances(args)  # gate before any solve work
    if args.price_step is not None and args.price_step <= 0:
        raise ConfigError("--price-step must be positive")
    inst = load_instance(args.instance)
    os.makedirs(args.out, exist_ok=True)
    log_path = os.path.join(args.out, "iterations.csv")
    with open(log_path, "w", newline="", encoding="utf-8") as log:
        writer = csv.writer(log)
        writer.writerow(ITERATION_FIELDS)

        def stream(rec):
            writer.writerow(iteration_row(rec))
            log.flush()

        res = run(inst, tolerances=tol, strategy=args.strategy,
                  max_iter=args.max_iter, time_budget=args.time_budget,
                  price_step=args.price_step, on_iteration=stream)

    echo = {"instance": os.path.abspath(args.instance),
            "strategy": args.strategy, "price_step": args.price_step,
            "max_iter": args.max_iter, "time_budget": args.time_budget,
            "seed": args.seed, "eps_u_rel": tol.eps_u_rel,
            "eps_u_abs": tol.eps_u_abs, "eps_l": tol.eps_l,
            "iterations": len(res.records),
            "wall_seconds": res.wall_seconds, "solver_status": res.status}
    if res.incumbent is None:
        with open(os.path.join(args.out, "summary.json"), "w",
                  encoding="utf-8") as fh:
            json.dump({"status": res.status, "message": res.message, **echo},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"infeasible: {res.message}", file=sys.stderr)
        return EXIT_INFEASIBLE
    write_bundle(args.out, inst, res.incumbent, extra=echo,
                 status=res.status, lbd=res.lbd, ubd=res.ubd)
    print(f"{res.status}: net {res.ubd:.6g} "
          f"(bounds [{res.lbd:.6g}, {res.ubd:.6g}], "
          f"{len(res.records)} iterations, {res.wall_seconds:.1f}s)")
    return STATUS_EXIT[res.status]


def cmd_oracle(args):
    if args.price_step is not None and args.price_step <= 0:
        raise ConfigError("--price-step must be positive")
    inst = load_instance(args.instance)
    result = solve_oracle(inst, price_step=args.price_step, cap=args.enum_cap,
                          keep_records=args.dump)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_oracle_csv(os.path.join(args.out, "oracle.csv"), inst, result)
    if result.best is None:
        print("oracle: no feasible design", file=sys.stderr)
        return EXIT_INFEASIBLE
    key = result.best.design.key()
    print(f"oracle optimum {result.best.net:.6g} over "
          f"{result.n_within_budget} designs within budget "
          f"({result.n_designs} on the grid); design {key}")
    return EXIT_OK


def _load_design(inst, run_dir):
    from .report import read_rows
    drows = read_rows(os.path.join(run_dir, "design.csv"))
    prows = read_rows(os.path.join(run_dir, "prices.csv"))
    S, T = len(inst.sites), inst.params.T
    if len(drows) != S:
        raise ConfigError(
            f"design.csv has {len(drows)} sites, instance has {S}")
    y = np.zeros(S, dtype=int)
    eta = np.zeros(S, dtype=int)
    prices = np.zeros((S, T))
    for row in drows:
        i = int(row["site"])
        y[i], eta[i] = int(row["open"]), int(row["eta"])
    for row in prows:
        prices[int(row["site"]), int(row["step"])] = row["price"]
    return DesignDecision(y=y, eta=eta, prices=prices)


def cmd_evaluate(args):
    inst = load_instance(args.instance)
    design = _load_design(inst, args.design)
    ev = evaluate_bilevel_point(inst, design)
    if args.out:
        write_bundle(args.out, inst, ev)
    if not ev.feasible:
        print(f"infeasible design: {ev.message}", file=sys.stderr)
        return EXIT_INFEASIBLE
    avg, std = price_stats(inst, design)
    print(f"net {ev.net:.6g} (capex {ev.breakdown.capex:.6g}, revenue "
          f"{ev.breakdown.revenue:.6g}); price avg/std {avg:.4g}/{std:.4g}")
    return EXIT_OK


def cmd_generate(args):
    cfg = GeneratorConfig(seed=args.seed, template=args.template,
                          demand_level=args.demand,
                          steps_per_period=args.steps_per_period)
    if args.n_outer is not None:
        cfg.n_outer = args.n_outer
    if args.n_inner is not None:
        cfg.n_inner = args.n_inner
    if args.n_spokes is not None:
        cfg.n_spokes = args.n_spokes
    if args.eta_max is not None:
        cfg.eta_max = args.eta_max
    if args.budget is not None:
        cfg.budget = args.budget
    inst = generate_instance(cfg)
    save_instance(inst, args.out)
    print(f"wrote {args.out}: {len(inst.nodes)} nodes, {len(inst.arcs)} arcs, "
          f"{len(inst.ods)} od pairs, {len(inst.sites)} candidate sites, "
          f"T={inst.params.T}")
    return EXIT_OK


def cmd_report(args):
    written = render(args.run, out_dir=args.out, compare_dir=args.compare)
    for path in written:
        print(path)
    return EXIT_OK


def cmd_simulate_queue(args):
    params = QueueParams(theta=args.theta, nu=args.nu, kappa=args.kappa)
    if args.xi < 0:
        raise ConfigError("--xi must be nonnegative")
    if args.eta < 1:
        raise ConfigError("--eta must be at least 1")
    if args.xi * args.theta >= args.eta:
        raise ConfigError(
            f"unstable queue: xi*theta = {args.xi * args.theta:g} >= "
            f"eta = {args.eta}")
    empirical = simulate_wait_prob(args.xi, args.eta, params,
                                   n_arrivals=args.samples, seed=args.seed)
    formula = erlang_c_wait_prob(args.xi, args.eta, params)
    se = float(np.sqrt(max(empirical * (1 - empirical), 1e-12)
                       / args.samples))
    print(f"empirical P(wait <= nu): {empirical:.6f} "
          f"(se ~ {se:.2g}, {args.samples} arrivals)")
    print(f"closed form:             {formula:.6f}")
    print(f"abs difference:          {abs(empirical - formula):.2e}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chargenet",
        description="Optimal EV charging locations, charger counts and "
                    "time-varying prices under equilibrium traffic.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the bounding solver")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--strategy", choices=("halve", "inverse"),
                   default="halve")
    p.add_argument("--price-step", type=float, default=None,
                   help="price grid step when the instance has no grid")
    p.add_argument("--eps-u", type=float, default=None,
                   help="relative convergence tolerance")
    p.add_argument("--eps-l", type=float, default=None,
                   help="lower-level relaxation slack")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--time-budget", type=float, default=None,
                   help="wall-clock budget in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="brute-force enumeration optimum")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default=None, help="directory for oracle.csv")
    p.add_argument("--price-step", type=float, default=None)
    p.add_argument("--enum-cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--dump", action="store_true",
                   help="record every enumerated design in oracle.csv")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evaluate", help="re-score a solved design directory")
    p.add_argument("--instance", required=True)
    p.add_argument("--design", required=True,
                   help="run directory holding design.csv and prices.csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", help="write a synthetic instance")
    p.add_argument("--template", choices=("hypothetical", "toy"),
                   default="hypothetical")
    p.add_argument("--demand", choices=("low", "medium"), default="medium")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps-per-period", type=int, default=1)
    p.add_argument("--n-outer", type=int, default=None)
    p.add_argument("--n-inner", type=int, default=None)
    p.add_argument("--n-spokes", type=int, default=None)
    p.add_argument("--eta-max", type=int, default=None)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--out", required=True, help="instance file to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("report", help="render charts for a run directory")
    p.add_argument("--run", required=True)
    p.add_argument("--out", default=None,
                   help="chart directory (default: the run directory)")
    p.add_argument("--compare", default=None,
                   help="second run directory for the percent-diff column")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate-queue",
                       help="discrete-event check of the wait-window formula")
    p.add_argument("--xi", type=float, required=True, help="arrival rate")
    p.add_argument("--eta", type=int, required=True, help="charger count")
    p.add_argument("--theta", type=float, default=1.0,
                   help="mean charging duration")
    p.add_argument("--nu", type=float, default=0.5, help="wait window")
    p.add_argument("--kappa", type=float, default=0.9,
                   help="service-level floor (reported only)")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate_queue)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InstanceFormatError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EquilibriumError as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ChargenetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
