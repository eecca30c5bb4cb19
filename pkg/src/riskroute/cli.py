"""Command line interface.

Subcommands: solve-nominal, solve-robust, eval-policy, experiment,
bin-samples.  Results go to stdout as one JSON object (or to ``--out``
files); diagnostics go to stderr.  Exit codes: 0 success, 2 unreadable or
malformed input, 3 invalid or infeasible model, 4 numerical failure,
5 nonconvergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from decimal import Decimal, InvalidOperation

import numpy as np

from . import io_formats
from .ambiguity import preset_robust_m, preset_robust_md
from .errors import (
    ConfigurationError,
    EvaluationError,
    InfeasibleAmbiguityError,
    NonconvergenceError,
    NumericalError,
    ParseError,
    RiskrouteError,
    StateError,
)
from .evaluation import METHODS, ExperimentConfig, run_experiment, simulate_policy
from .model import Arc, BudgetGrid, Graph, RiskFunction
from .nominal import evaluate_policy_exact, solve_nominal
from .robust import arc_for, robust_policy_guarantee, solve_robust

_RISKS = ("on_time", "expected_overrun", "squared_overrun", "tabulated")
_AMBIGUITIES = ("robust-m", "robust-md", "custom")


def _dec(text: str) -> float:
    try:
        return float(Decimal(text))
    except (InvalidOperation, ValueError):
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None


def _dec_list(text: str) -> tuple:
    return tuple(_dec(part) for part in text.split(",") if part.strip())


def _risk_from_args(args) -> RiskFunction:
    if args.risk == "on_time":
        return RiskFunction.on_time()
    if args.risk == "expected_overrun":
        return RiskFunction.expected_overrun()
    if args.risk == "squared_overrun":
        return RiskFunction.squared_overrun()
    if getattr(args, "risk_table", None) is None:
        raise ConfigurationError("--risk tabulated needs --risk-table FILE")
    data = io_formats._read_json(args.risk_table)
    if not isinstance(data, dict):
        raise ParseError(f"{args.risk_table}: top level must be an object")
    for key in ("offset_k", "values", "t_f"):
        if key not in data:
            raise ParseError(f"{args.risk_table}: missing key {key!r}")
    if not isinstance(data["values"], list) or not data["values"]:
        raise ParseError(f"{args.risk_table}: 'values' must be a nonempty list")
    offset_k = data["offset_k"]
    if isinstance(offset_k, bool) or not isinstance(offset_k, int):
        raise ParseError(f"{args.risk_table}: offset_k must be an integer")
    vals = [io_formats._decimal(v, f"{args.risk_table}: values") for v in data["values"]]
    t_f = io_formats._decimal(data["t_f"], f"{args.risk_table}: t_f")
    return RiskFunction.tabulated(args.delta_t, offset_k, vals, t_f)


def _apply_eps(args) -> None:
    # the flag seeds the solver tolerances, explicit environment wins
    for name in ("RISKROUTE_EPS_FEAS", "RISKROUTE_EPS_VALUE"):
        if name not in os.environ:
            os.environ[name] = repr(args.eps)


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _policy_out(args, result) -> None:
    if args.out is None:
        return
    values = None
    if args.with_values:
        values = {
            node: [float(v) for v in result.store.rows(node)]
            for node in result.graph.nodes
        }
    io_formats.save_policy(result.policy, args.out, values=values)


def _build_sets(args, graph, delta_t, samples=None):
    if args.ambiguity == "custom":
        if args.statistics is None:
            raise ConfigurationError("--ambiguity custom needs --statistics FILE")
        sets = io_formats.load_statistics(args.statistics, delta_t)
        missing = [a.key for a in graph.arcs if a.key not in sets]
        if missing:
            raise ConfigurationError(f"statistics file misses arcs: {missing}")
        return {a.key: sets[a.key] for a in graph.arcs}
    if samples is None:
        raise ConfigurationError(f"--ambiguity {args.ambiguity} needs --samples FILE")
    missing = [a.key for a in graph.arcs if a.key not in samples]
    if missing:
        raise ConfigurationError(f"samples file misses arcs: {missing}")
    per_arc = 2 if args.ambiguity == "robust-md" else 1
    n_intervals = per_arc * len(graph.arcs) if args.n_intervals is None else args.n_intervals
    preset = preset_robust_md if args.ambiguity == "robust-md" else preset_robust_m
    return {
        a.key: preset(samples[a.key], delta_t, args.epsilon, n_intervals=n_intervals)
        for a in graph.arcs
    }


def _cmd_solve_nominal(args) -> int:
    _apply_eps(args)
    graph, dists, _ = io_formats.load_graph(args.graph, args.delta_t)
    risk = _risk_from_args(args)
    grid = BudgetGrid(args.delta_t, args.budget)
    result = solve_nominal(graph, dists, risk, grid, zero_floor=args.zero_floor)
    _policy_out(args, result)
    _emit(
        {
            "objective": result.objective,
            "budget": grid.k_T * args.delta_t,
            "t_f": result.tree.t_f,
        }
    )
    return 0


def _cmd_solve_robust(args) -> int:
    _apply_eps(args)
    graph, _, _ = io_formats.load_graph(args.graph, args.delta_t)
    samples = io_formats.load_samples(args.samples) if args.samples else None
    sets = _build_sets(args, graph, args.delta_t, samples)
    # arc bounds must match the ambiguity windows, whatever the file said
    graph = Graph(
        graph.nodes,
        [arc_for(a.tail, a.head, sets[a.key]) for a in graph.arcs],
        graph.source,
        graph.destination,
    )
    risk = _risk_from_args(args)
    grid = BudgetGrid(args.delta_t, args.budget)
    result = solve_robust(graph, sets, risk, grid, zero_floor=args.zero_floor)
    _policy_out(args, result)
    _emit(
        {
            "objective": result.objective,
            "budget": grid.k_T * args.delta_t,
            "t_f": result.tree.t_f,
        }
    )
    return 0


def _cmd_eval_policy(args) -> int:
    _apply_eps(args)
    graph, dists, _ = io_formats.load_graph(args.graph, args.delta_t)
    policy, _ = io_formats.load_policy(args.policy, args.delta_t)
    risk = _risk_from_args(args)
    grid = BudgetGrid(args.delta_t, args.budget)
    out = {"budget": grid.k_T * args.delta_t}
    if args.ambiguity is None:
        result = evaluate_policy_exact(
            graph, dists, risk, grid, policy, below_range=args.below_range
        )
        out["objective"] = result.objective
    else:
        samples = io_formats.load_samples(args.samples) if args.samples else None
        sets = _build_sets(args, graph, args.delta_t, samples)
        graph = Graph(
            graph.nodes,
            [arc_for(a.tail, a.head, sets[a.key]) for a in graph.arcs],
            graph.source,
            graph.destination,
        )
        result = robust_policy_guarantee(
            graph, sets, risk, grid, policy, below_range=args.below_range
        )
        out["objective"] = result.objective
        out["worst_case"] = True
    if args.simulate:
        sim = simulate_policy(
            graph, dists, risk, grid, policy, args.simulate,
            rng=np.random.default_rng(args.seed),
        )
        out["simulated_mean"] = sim.mean_value
        out["simulated_runs"] = sim.n_runs
    _emit(out)
    return 0


def _cmd_experiment(args) -> int:
    _apply_eps(args)
    graph, _, _ = io_formats.load_graph(args.graph, args.delta_t)
    samples = io_formats.load_samples(args.samples)
    cfg = ExperimentConfig(
        delta_t=args.delta_t,
        epsilon=args.epsilon,
        lambdas=args.lambdas,
        n_reps=args.reps,
        n_budgets=args.budgets,
        seed=args.seed,
        methods=tuple(args.methods.split(",")) if args.methods else METHODS,
    )
    report = run_experiment(
        graph.nodes, [a.key for a in graph.arcs], graph.source, graph.destination,
        samples, cfg,
    )
    target = args.out if args.out else sys.stdout
    io_formats.write_report(report, target, omit_runtime=args.omit_runtime)
    print(
        f"budgets [{report.t_min}, {report.t_max}], "
        f"{len(report.rows)} rows, {len(report.failures)} failures",
        file=sys.stderr,
    )
    return 0


def _cmd_bin_samples(args) -> int:
    samples = io_formats.load_samples(args.samples)
    if args.graph is not None:
        graph, _, _ = io_formats.load_graph(args.graph, args.delta_t)
        missing = [a.key for a in graph.arcs if a.key not in samples]
        if missing:
            raise ConfigurationError(f"samples file misses arcs: {missing}")
        keys = [a.key for a in graph.arcs]
        nodes, source, destination = graph.nodes, graph.source, graph.destination
    else:
        if args.source is None or args.destination is None:
            raise ConfigurationError(
                "bin-samples needs either --graph or both --source and --destination"
            )
        keys = sorted(samples.keys())
        nodes = sorted({n for k in keys for n in k})
        source, destination = args.source, args.destination
        if source not in nodes or destination not in nodes:
            raise ConfigurationError("source/destination missing from the samples")
    dists = {key: io_formats.bin_samples(samples[key], args.delta_t) for key in keys}
    arcs = [
        Arc(t, h, dists[(t, h)].support_lo, dists[(t, h)].support_hi)
        for (t, h) in keys
    ]
    graph = Graph(nodes, arcs, source, destination)
    io_formats.save_graph(graph, dists, args.delta_t, args.out)
    return 0


def _add_common(p, *, budget: bool = True) -> None:
    p.add_argument("--delta-t", type=_dec, required=True, metavar="DEC",
                   help="budget grid step (decimal string)")
    if budget:
        p.add_argument("--budget", type=_dec, required=True, metavar="DEC",
                       help="total budget T")
    p.add_argument("--eps", type=_dec, default=1e-8, metavar="DEC",
                   help="solver tolerance seed (env RISKROUTE_EPS_* wins)")
    p.add_argument("--seed", type=int, default=0, help="random seed")


def _add_risk(p) -> None:
    p.add_argument("--risk", choices=_RISKS, default="on_time")
    p.add_argument("--risk-table", metavar="FILE",
                   help="tabulated risk JSON (offset_k, values, t_f)")


def _add_policy_out(p) -> None:
    p.add_argument("--out", metavar="FILE", help="write the policy JSON here")
    p.add_argument("--with-values", action="store_true",
                   help="embed value rows in the policy file")


def _add_ambiguity(p, *, required: bool) -> None:
    p.add_argument("--ambiguity", choices=_AMBIGUITIES,
                   default="robust-m" if required else None)
    p.add_argument("--samples", metavar="FILE",
                   help="arc cost samples CSV for the preset ambiguity sets")
    p.add_argument("--statistics", metavar="FILE",
                   help="custom statistics JSON (with --ambiguity custom)")
    p.add_argument("--epsilon", type=_dec, default=0.05, metavar="DEC",
                   help="confidence budget for the preset intervals")
    p.add_argument("--n-intervals", type=int, default=None, metavar="N",
                   help="override the union-bound interval count")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="riskroute",
        description="Adaptive routing under a budget: exact and robust solvers.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-nominal", help="solve with known arc distributions")
    p.add_argument("--graph", required=True, metavar="FILE",
                   help="graph JSON with a pmf on every arc")
    _add_common(p)
    _add_risk(p)
    _add_policy_out(p)
    p.add_argument("--zero-floor", action="store_true",
                   help="skip rows below budget 0 (on-time risk only)")
    p.set_defaults(func=_cmd_solve_nominal)

    p = sub.add_parser("solve-robust", help="solve against ambiguity sets")
    p.add_argument("--graph", required=True, metavar="FILE",
                   help="graph JSON (structure; bounds come from the sets)")
    _add_common(p)
    _add_risk(p)
    _add_ambiguity(p, required=True)
    _add_policy_out(p)
    p.add_argument("--zero-floor", action="store_true",
                   help="skip rows below budget 0 (on-time risk only)")
    p.set_defaults(func=_cmd_solve_robust)

    p = sub.add_parser("eval-policy", help="score a stored policy exactly")
    p.add_argument("--graph", required=True, metavar="FILE")
    p.add_argument("--policy", required=True, metavar="FILE")
    _add_common(p)
    _add_risk(p)
    _add_ambiguity(p, required=False)
    p.add_argument("--below-range", choices=("error", "zero"), default="error",
                   help="reads under the stored rows: fail or score 0")
    p.add_argument("--simulate", type=int, default=0, metavar="RUNS",
                   help="also report a Monte Carlo estimate from this many runs")
    p.set_defaults(func=_cmd_eval_policy)

    p = sub.add_parser("experiment", help="subsample-robustness comparison")
    p.add_argument("--graph", required=True, metavar="FILE",
                   help="graph JSON (structure only)")
    p.add_argument("--samples", required=True, metavar="FILE")
    _add_common(p, budget=False)
    p.add_argument("--epsilon", type=_dec, default=0.05, metavar="DEC")
    p.add_argument("--lambdas", type=_dec_list, default=(0.01, 0.05, 1.0),
                   metavar="DEC,DEC,...")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--budgets", type=int, default=11)
    p.add_argument("--methods", default=None, metavar="M1,M2,...",
                   help=f"subset of {','.join(METHODS)}")
    p.add_argument("--out", metavar="FILE", help="report CSV (default stdout)")
    p.add_argument("--omit-runtime", action="store_true",
                   help="blank the runtime column for byte-stable output")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("bin-samples", help="bin cost samples into a graph JSON")
    p.add_argument("--samples", required=True, metavar="FILE")
    p.add_argument("--delta-t", type=_dec, required=True, metavar="DEC")
    p.add_argument("--graph", metavar="FILE",
                   help="take nodes/source/destination from this graph JSON")
    p.add_argument("--source", help="source node id (without --graph)")
    p.add_argument("--destination", help="destination node id (without --graph)")
    p.add_argument("--out", required=True, metavar="FILE")
    p.set_defaults(func=_cmd_bin_samples)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NonconvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 5
    except (NumericalError, StateError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except (ConfigurationError, InfeasibleAmbiguityError, EvaluationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except RiskrouteError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
