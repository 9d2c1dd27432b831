"""Command-line entry point: simulate, bounds, verify-levin, compare."""

import argparse
import math
import sys

import numpy as np

from . import bounds, harness, levin

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    p = _Parser(prog="defcast", description="Defensive forecasting for quantile regret.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one configured experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--verify", action="store_true", help="check invariants at every step")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="directory for the CSV trace and JSON sidecar")

    b = sub.add_parser("bounds", help="print the closed-form bound table")
    b.add_argument("--T", type=int, required=True)
    b.add_argument("--N", type=int, required=True)
    b.add_argument("--eps", type=_floats, required=True, help="one or more eps, comma separated")
    b.add_argument("--delta-grid", type=_floats, help="NormalHedge delta values, comma separated")
    b.add_argument("--crossover", action="store_true", help="also print the eq6/eq10 crossover T*")

    v = sub.add_parser("verify-levin", help="grid-search check of the fixed-point lemma")
    v.add_argument("--omega-size", type=int, default=2)
    v.add_argument("--resolution", type=int, default=1000)
    v.add_argument("--count", type=int, default=50)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=1e-2)

    c = sub.add_parser("compare", help="several learners against one environment stream")
    c.add_argument("--learners", required=True, help="comma-separated variants")
    c.add_argument("--env", required=True, help="environment kind")
    c.add_argument("--N", type=int, default=4)
    c.add_argument("--T", type=int, default=500)
    c.add_argument("--seed", type=int)
    c.add_argument("--copies", type=int, default=2, help="for --env duplicated")
    c.add_argument("--base", default="iid_uniform", help="base kind for --env duplicated")
    c.add_argument("--verify", action="store_true")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out")
    return p


def _summarize(trace, out=sys.stdout):
    print(f"{trace.learner}: status={trace.status} T={trace.T} seed={trace.seed}", file=out)
    if trace.abort_reason:
        print(f"  aborted: {trace.abort_reason}", file=out)
    if trace.T:
        print(f"  L_T={trace.cum_loss[-1]:.6g}  min_n L^n_T={trace.best_loss[-1]:.6g}", file=out)
    for c in trace.checks:
        tag = "PASS" if c.passed else "FAIL"
        print(f"  [{tag}] {c.name}: worst margin {c.worst_margin:.3e}", file=out)


def cmd_simulate(args):
    cfg = harness.load_config(args.config)
    trace = harness.run(cfg, seed=args.seed, verify=args.verify)
    _summarize(trace)
    if args.out:
        csv_path, json_path = harness.emit(trace, args.out)
        print(f"wrote {csv_path} and {json_path}")
    return trace.exit_code()


def cmd_bounds(args):
    for e in args.eps:
        if not 0 < e <= 1:
            raise harness.ConfigError(f"eps must lie in (0, 1], got {e}")
    if args.T < 1 or args.N < 1:
        raise harness.ConfigError("need T >= 1 and N >= 1")
    grid = None if args.delta_grid is None else np.asarray(args.delta_grid)
    if grid is not None and (np.any(grid <= 0) or np.any(grid > 0.5)):
        raise harness.ConfigError("delta values must lie in (0, 1/2]")
    print(bounds.bound_report(args.T, args.N, args.eps, grid).format())
    if args.crossover:
        for e in args.eps:
            try:
                ts = bounds.crossover(args.N, e, grid)
                ref = 1e6 * math.log(args.N) ** 4
                print(f"crossover eps = {e:g}: T* = {ts}  (1e6 ln^4 N = {ref:.4g}, ratio {ts / ref:.3g})")
            except ValueError as exc:
                print(f"crossover eps = {e:g}: {exc}")
    return EXIT_OK


def cmd_verify_levin(args):
    if not 2 <= args.omega_size <= levin.MAX_OUTCOMES:
        raise harness.ConfigError(f"--omega-size must be in 2..{levin.MAX_OUTCOMES}")
    if args.resolution < 1 or args.count < 1:
        raise harness.ConfigError("--resolution and --count must be positive")
    results = levin.levin_suite(args.omega_size, args.resolution, args.count, args.seed, args.tol)
    found = sum(r["found"] for r in results)
    pre_ok = sum(r["precondition"] <= 1e-12 for r in results)
    worst = max(r["slack"] for r in results)
    print(f"|Omega| = {args.omega_size}  resolution = {args.resolution}  instances = {len(results)}")
    print(f"precondition holds: {pre_ok}/{len(results)}")
    print(f"found within tol {args.tol:g}: {found}/{len(results)}  worst slack {worst:.3e}")
    return EXIT_OK if found == len(results) else EXIT_VIOLATION


def _learner_cfg(variant, N, T):
    if variant == "dfa_fixed":
        return {"variant": variant, "horizon": max(T, 1)}
    if variant == "hedge":
        return {"variant": variant, "eta": math.sqrt(8 * math.log(max(N, 2)) / max(T, 1))}
    return {"variant": variant}


def cmd_compare(args):
    env = {"kind": args.env}
    if args.env == "duplicated":
        env = {"kind": "duplicated", "copies": args.copies, "base": {"kind": args.base}}
    configs = []
    for name in [x.strip() for x in args.learners.split(",") if x.strip()]:
        cfg = {"game": {"kind": "dtol", "N": args.N}, "T": args.T,
               "learner": _learner_cfg(name, args.N, args.T), "environment": env}
        cfg["seed"] = harness.resolve_seed(cfg, args.seed)
        configs.append(harness.validate_config(cfg))
    traces = harness.run_many(configs, verify=args.verify, jobs=args.jobs)
    for tr in traces:
        _summarize(tr)
        if args.out:
            harness.emit(tr, args.out)
    return max(tr.exit_code() for tr in traces)


COMMANDS = {
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "verify-levin": cmd_verify_levin,
    "compare": cmd_compare,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (harness.ConfigError, ValueError) as exc:
        print(f"defcast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"defcast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
