"""Command-line entry point: `calpkit <subcommand> ...`.

Exit codes: 0 success, 1 malformed or invalid input, 2 infeasible or over budget.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import bench as bench_mod
from .calp import STRATEGIES, RateSolution, solve_packing_lp, solve_rcalp_colgen, solve_rcalp_mwu
from .embedding import cost_C, cost_CC, validate_embedding, validate_rembedding
from .graphs import validate_instance
from .io import (MalformedInput, dumps, embedding_from_json, instance_to_dict, load_columns, load_instance,
                 read_json)
from .oracle import BudgetExceeded, mincost_c_exact, mincost_cc_exact

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2

NAMED_GRAPHS = {
    "K4": [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
    "K33": [(a, b) for a in "abc" for b in "xyz"],
    "prism": [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)],
}


class Infeasible(RuntimeError):
    pass


def _emit(args, payload, text):
    out = dumps(payload) if args.json else text
    if getattr(args, "output", None):
        Path(args.output).write_text(out if out.endswith("\n") else out + "\n")
    else:
        print(out)


def _fmt(x):
    if isinstance(x, float) and x == int(x) and math.isfinite(x):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _load(path, shared_sources=False, model="C"):
    net, dag = load_instance(path)
    rep = validate_instance(net, dag, model=model, shared_sources=shared_sources)
    if not rep.ok:
        lines = [f"  {v.code}: {v.message}" for v in rep.violations]
        raise MalformedInput(f"{path} is not a valid instance:\n" + "\n".join(lines))
    return net, dag


def _shared(path) -> bool:
    # instances whose sources share network nodes are accepted with a warning
    d = read_json(path)
    try:
        srcs = d["network"]["sources"]
        return len(set(srcs)) != len(srcs)
    except (KeyError, TypeError):
        return False


# ------------------------------------------------------------ subcommands ----

def cmd_validate(args):
    net, dag = load_instance(args.instance)
    rep = validate_instance(net, dag, model=args.model, shared_sources=args.shared_sources)
    payload = {"instance": args.instance, "valid": rep.ok, **rep.as_dict()}
    if args.embedding and rep.ok:
        emb = embedding_from_json(read_json(args.embedding), dag, net)
        erep = validate_rembedding(net, dag, emb) if args.model == "CC" else validate_embedding(net, dag, emb)
        payload["embedding"] = {"valid": erep.ok, **erep.as_dict()}
        if erep.ok:
            payload["embedding"]["cost_C"] = cost_C(net, dag, emb)
            if emb.is_restricted:
                payload["embedding"]["cost_CC"] = cost_CC(net, dag, emb)
    ok = rep.ok and payload.get("embedding", {}).get("valid", True)
    lines = [f"{args.instance}: {'valid' if rep.ok else 'INVALID'}"]
    lines += [f"  {v['code']}: {v['message']}" for v in rep.as_dict()["violations"]]
    lines += [f"  warning {w['code']}: {w['message']}" for w in rep.as_dict()["warnings"]]
    if "embedding" in payload:
        e = payload["embedding"]
        lines.append(f"embedding: {'valid' if e['valid'] else 'INVALID'}")
        lines += [f"  {v['code']}: {v['message']}" for v in e["violations"]]
        if e["valid"]:
            lines.append(f"  C = {_fmt(e['cost_C'])}" + (f", CC = {_fmt(e['cost_CC'])}" if "cost_CC" in e else ""))
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if ok else EXIT_INPUT


def _mincost(net, dag, model, solver, seed):
    from .emlp import emlp_mincost_cc
    from .structured import layered_dp_mincost_cc, spanning_tree_approx_mincost_cc, tree_dp_mincost_cc
    from .twonode import solve_two_node
    extra = {}
    if solver == "oracle":
        emb, _ = mincost_c_exact(net, dag) if model == "C" else mincost_cc_exact(net, dag)
        status = "optimal"
    elif solver == "twonode":
        if model != "C":
            raise MalformedInput("the two-node solver minimizes the per-function cost; use --model C")
        emb, _, sol = solve_two_node(net, dag)
        status, extra = "optimal", {"cut_weight": sol.weight}
    elif solver == "tree":
        emb, _ = tree_dp_mincost_cc(net, dag)
        status = "optimal" if model == "CC" else "approx"
    elif solver == "layered":
        emb, _ = layered_dp_mincost_cc(net, dag)
        status = "optimal" if model == "CC" else "approx"
    elif solver == "spantree":
        res = spanning_tree_approx_mincost_cc(net, dag)
        emb, status, extra = res.rembedding, "approx", {"ratio_bound": res.ratio_bound, "F": res.info.F}
    elif solver == "emlp":
        emb, _, lp = emlp_mincost_cc(net, dag, seed=seed)
        status, extra = "approx", {"lp_value": lp}
    else:
        raise MalformedInput(f"unknown solver {solver}")
    value = cost_C(net, dag, emb) if model == "C" else cost_CC(net, dag, emb)
    return emb, value, status, extra


def cmd_mincost(args):
    shared = _shared(args.instance)
    net, dag = _load(args.instance, shared, args.model)
    try:
        emb, value, status, extra = _mincost(net, dag, args.model, args.solver, args.seed)
    except ValueError as exc:
        if isinstance(exc, MalformedInput):
            raise
        raise Infeasible(str(exc)) from exc
    payload = {"model": args.model, "solver": args.solver, "value": value, "status": status, **extra,
               "embedding": emb.to_json()}
    _emit(args, payload, _fmt(value))
    return EXIT_OK


def _rate(args, net, dag) -> RateSolution:
    columns = load_columns(args.columns, dag, net) if args.columns else []
    pricing = args.pricing or ("none" if args.columns else "oracle")
    if pricing == "none":
        if not columns:
            raise MalformedInput("--pricing none needs --columns")
        sol = solve_packing_lp(net, dag, columns)
        sol.status, sol.alpha = "fixed", None
        sol.notes.append("fixed columns; no pricing")
        return sol
    if args.method == "mwu":
        return solve_rcalp_mwu(net, dag, eps=args.epsilon, strategy=pricing, columns=columns, seed=args.seed)
    return solve_rcalp_colgen(net, dag, strategy=pricing, columns=columns, seed=args.seed)


def _status(sol: RateSolution) -> str:
    return "optimal over the given columns" if sol.status == "fixed" else sol.status_text()


def _rate_payload(sol: RateSolution):
    return {"R": sol.objective, "status": _status(sol), "upper_bound": sol.upper_bound,
            "iterations": sol.iterations, "notes": list(sol.notes),
            "columns": [{"flow": x, "embedding": e.to_json()} for e, x in sol.columns],
            "duals": {f"{u}-{v}": y for (u, v), y in sol.duals.items()}}


def cmd_rate(args):
    net, dag = _load(args.instance, _shared(args.instance))
    sol = _rate(args, net, dag)
    text = f"R={_fmt(sol.objective)} ({_status(sol)})"
    _emit(args, _rate_payload(sol), text)
    return EXIT_OK


def cmd_schedule(args):
    from .scheduler import build_schedule, validate_schedule
    net, dag = _load(args.instance, _shared(args.instance))
    sol = _rate(args, net, dag)
    if sol.objective <= 0:
        raise Infeasible("rate is zero; nothing to schedule")
    trace = build_schedule(net, dag, sol, eps=args.tolerance)
    rep, lam = validate_schedule(net, dag, trace)
    if args.output:
        Path(args.output).write_text(trace.to_jsonl())
    summary = {"R": sol.objective, "K": trace.K, "L": trace.L, "d": trace.d, "rate": lam, "valid": rep.ok}
    if args.json:
        print(dumps(summary))
    elif args.output:
        print(f"K={trace.K} L={trace.L} d={trace.d} rate={_fmt(float(lam))} valid={rep.ok}")
    else:
        sys.stdout.write(trace.to_jsonl())
    return EXIT_OK if rep.ok else EXIT_INFEASIBLE


def cmd_validate_schedule(args):
    from .scheduler import schedule_to_flows, trace_from_jsonl, validate_schedule
    net, dag = _load(args.instance, _shared(args.instance))
    try:
        trace = trace_from_jsonl(Path(args.trace).read_text())
    except OSError as exc:
        raise MalformedInput(str(exc)) from exc
    rep, lam = validate_schedule(net, dag, trace)
    payload = {"valid": rep.ok, "rate": lam, **rep.as_dict()}
    if rep.ok:
        payload["recovered_objective"] = schedule_to_flows(net, dag, trace).objective
    lines = [f"{args.trace}: {'valid' if rep.ok else 'INVALID'}" + (f", rate={_fmt(float(lam))}" if rep.ok else "")]
    lines += [f"  {v['code']}: {v['message']}" for v in rep.as_dict()["violations"]]
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if rep.ok else EXIT_INPUT


def _read_edges(spec):
    if spec in NAMED_GRAPHS:
        return NAMED_GRAPHS[spec]
    p = Path(spec)
    if not p.exists():
        raise MalformedInput(f"no such graph file or named graph: {spec}")
    text = p.read_text()
    try:
        data = json.loads(text)
        data = data["edges"] if isinstance(data, dict) else data
        return [tuple(e) for e in data]
    except json.JSONDecodeError:
        edges = []
        for line in text.splitlines():
            line = line.split("#")[0].strip()
            if line:
                parts = line.replace(",", " ").split()
                if len(parts) != 2:
                    raise MalformedInput(f"bad edge line: {line!r}")
                edges.append((parts[0], parts[1]))
        return edges


def cmd_reduce(args):
    if args.kind == "maxcut":
        from .reductions import build_maxcut_instance, certification_report
        try:
            inst = build_maxcut_instance(_read_edges(args.source), require_cubic=not args.relaxed)
        except ValueError as exc:
            raise MalformedInput(str(exc)) from exc
        report = certification_report(inst)
        payload = {"instance": instance_to_dict(inst.net, inst.dag), "certification": report}
        text = (f"|V_H|={report['H_vertices']} |E_H|={report['H_edges']} sources={report['dag_sources']} "
                f"sink_in_degree={report['sink_in_degree']} max_weight={report['max_edge_weight']}\n"
                f"max cut={report['max_cut']} embedding cost={report['embedding_cost_of_max_cut']} "
                f"canonical minimum={report['canonical_minimum']} ok={report['ok']}")
        if args.output:
            Path(args.output).write_text(dumps(payload["instance"]) + "\n")
        print(dumps(payload) if args.json else text)
        return EXIT_OK if report["ok"] else EXIT_INFEASIBLE
    from .twonode import build_2cut_instance, cut_to_embedding, solve_2cut
    net, dag = _load(args.source, _shared(args.source))
    try:
        cut = build_2cut_instance(net, dag)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc
    sol = solve_2cut(cut)
    emb, cost = cut_to_embedding(net, dag, sol)
    payload = {"cut_instance": cut.to_json(), "solution": sol.to_json(), "cost": cost, "embedding": emb.to_json()}
    if args.output:
        Path(args.output).write_text(dumps(payload["cut_instance"]) + "\n")
    print(dumps(payload) if args.json else f"cut weight={_fmt(sol.weight)} embedding cost={_fmt(cost)}")
    return EXIT_OK


def cmd_bench(args):
    suite = bench_mod.default_suite(args.seed, args.random)
    rows = bench_mod.run_bench(suite, seeds=args.seeds, jobs=args.jobs)
    timing = not args.no_timing
    if args.json:
        out = dumps(bench_mod.to_records(rows, timing)) + "\n"
    else:
        out = bench_mod.to_csv(rows, timing)
    if args.output:
        Path(args.output).write_text(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


# ----------------------------------------------------------------- parser ----

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="calpkit", description="Placement, rate and scheduling tools for "
                                "computing functions over capacitated networks.")
    p.add_argument("--json", action="store_true", help="machine-readable JSON output")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized solvers (default 0)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        # accept the global flags after the subcommand too
        sp.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    v = sub.add_parser("validate", help="check an instance (and optionally an embedding)")
    v.add_argument("instance")
    v.add_argument("--model", choices=["C", "CC"], default="C")
    v.add_argument("--embedding", help="embedding JSON to check against the instance")
    v.add_argument("--shared-sources", action="store_true", help="allow several sources on one node")
    common(v)
    v.set_defaults(func=cmd_validate)

    m = sub.add_parser("mincost", help="minimum-cost embedding")
    m.add_argument("instance")
    m.add_argument("--model", choices=["C", "CC"], default="C",
                   help="C: shared edges counted once per function; CC: once per DAG edge")
    m.add_argument("--solver", choices=["oracle", "twonode", "tree", "layered", "spantree", "emlp"],
                   default="oracle")
    m.add_argument("-o", "--output")
    common(m)
    m.set_defaults(func=cmd_mincost)

    def rate_args(sp):
        sp.add_argument("instance")
        sp.add_argument("--columns", help="JSON list of embeddings to start from")
        sp.add_argument("--pricing", choices=["none", *STRATEGIES],
                        help="pricing oracle (default: none with --columns, else oracle)")
        sp.add_argument("--method", choices=["colgen", "mwu"], default="colgen")
        sp.add_argument("--epsilon", type=float, default=0.05, help="MWU accuracy (default 0.05)")
        sp.add_argument("-o", "--output")
        common(sp)

    r = sub.add_parser("rate", help="maximum computing rate over restricted embeddings")
    rate_args(r)
    r.set_defaults(func=cmd_rate)

    s = sub.add_parser("schedule", help="turn a rate solution into an event schedule (JSONL)")
    rate_args(s)
    s.add_argument("--tolerance", type=float, default=1e-2, help="allowed rate loss from rounding flows")
    s.set_defaults(func=cmd_schedule)

    vs = sub.add_parser("validate-schedule", help="replay a JSONL schedule and report its rate")
    vs.add_argument("instance")
    vs.add_argument("trace")
    vs.add_argument("-o", "--output")
    common(vs)
    vs.set_defaults(func=cmd_validate_schedule)

    rd = sub.add_parser("reduce", help="build reduction instances")
    rd.add_argument("kind", choices=["maxcut", "2cut"])
    rd.add_argument("source", help="maxcut: edge list file or one of " + ", ".join(NAMED_GRAPHS)
                    + "; 2cut: two-node instance JSON")
    rd.add_argument("--relaxed", action="store_true", help="maxcut: do not require a cubic graph")
    rd.add_argument("-o", "--output", help="write the constructed instance JSON here")
    common(rd)
    rd.set_defaults(func=cmd_reduce)

    b = sub.add_parser("bench", help="solver/ratio matrix as CSV")
    b.add_argument("--seeds", type=int, default=bench_mod.DEFAULT_SEEDS, help="rounding seeds per instance")
    b.add_argument("--random", type=int, default=6, help="random instances per family")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--no-timing", action="store_true", help="omit wall times (byte-identical reruns)")
    b.add_argument("-o", "--output")
    common(b)
    b.set_defaults(func=cmd_bench)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (BudgetExceeded, Infeasible) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (MalformedInput, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
