"""Solver/ratio matrix over a small instance suite, written as CSV rows."""

from __future__ import annotations

import csv
import io
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from . import instances
from .emlp import ckr_round, solve_earthmover_lp
from .graphs import all_pairs_shortest
from .oracle import BudgetExceeded, mincost_c_exact, mincost_cc_exact
from .structured import layered_dp_mincost_cc, spanning_tree_approx_mincost_cc, tree_dp_mincost_cc

FIELDS = ["instance", "solver", "value", "ratio", "std", "bound", "F", "wall_time"]
DEFAULT_SEEDS = 200


@dataclass
class Row:
    instance: str
    solver: str
    value: Optional[float]
    ratio: Optional[float] = None
    std: Optional[float] = None
    bound: Optional[float] = None     # certified ratio bound where the solver has one
    F: Optional[int] = None           # fundamental-cycle load of the spanning tree used
    wall_time: float = 0.0


def default_suite(seed: int = 0, n_random: int = 6) -> list:
    """(name, net, dag, tree) entries: the fixtures plus random general, tree and
    layered schemas. tree is a spanning tree of the schema or None for the default."""
    suite = [(name, *instances.FIXTURES[name](), None) for name in ("fig1", "fig2", "correlation")]
    suite.insert(2, ("fft4", *instances.fft4(), instances.fft4_tree()))
    for i in range(n_random):
        s = seed * 1000 + i
        suite.append((f"random{i}", *instances.random_instance(s, n_range=(3, 5), inner_range=(2, 4),
                                                               extra_dag=(1, 2)), None))
        suite.append((f"tree{i}", *instances.random_instance(s, n_range=(3, 5), inner_range=(2, 4), tree=True),
                      None))
        rng = random.Random(s)
        net = instances.random_network(rng, rng.randint(3, 4), 2)
        dag = instances.random_layered_dag(rng, 2, [rng.randint(1, 2) for _ in range(2)])
        suite.append((f"layered{i}", net, dag, None))
    return suite


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _ratio(value, opt):
    if value is None or opt is None:
        return None
    if opt == 0:
        return 1.0 if value == 0 else None
    return float(value) / float(opt)


def bench_instance(name, net, dag, tree=None, seeds: int = DEFAULT_SEEDS) -> list:
    rows = []
    dist = all_pairs_shortest(net)
    try:
        (_, opt), t = _timed(lambda: mincost_cc_exact(net, dag, dist=dist))
        rows.append(Row(name, "cc-oracle", opt, 1.0, wall_time=t))
    except BudgetExceeded:
        opt = None
    try:
        (_, copt), t = _timed(lambda: mincost_c_exact(net, dag, dist=dist))
        rows.append(Row(name, "c-oracle", copt, None, wall_time=t))
    except BudgetExceeded:
        pass
    if dag.is_tree_shaped():
        (_, v), t = _timed(lambda: tree_dp_mincost_cc(net, dag, dist=dist))
        rows.append(Row(name, "tree-dp", v, _ratio(v, opt), bound=1.0, wall_time=t))
    try:
        (_, v), t = _timed(lambda: layered_dp_mincost_cc(net, dag, dist=dist))
        rows.append(Row(name, "layered-dp", v, _ratio(v, opt), bound=1.0, wall_time=t))
    except ValueError:
        pass
    res, t = _timed(lambda: spanning_tree_approx_mincost_cc(net, dag, tree=tree, dist=dist))
    rows.append(Row(name, "spantree", res.cost, _ratio(res.cost, opt), bound=float(res.ratio_bound),
                    F=res.info.F, wall_time=t))
    (placement, lp), t = _timed(lambda: solve_earthmover_lp(net, dag, dist=dist))
    rows.append(Row(name, "emlp-lp", lp, _ratio(lp, opt), wall_time=t))
    costs, t = _timed(lambda: [float(ckr_round(placement, s)[2]) for s in range(seeds)])
    mean = statistics.fmean(costs)
    std = statistics.pstdev(costs) if len(costs) > 1 else 0.0
    rows.append(Row(name, "emlp-round", mean, _ratio(mean, opt), std=std, wall_time=t))
    return rows


def _run_one(args):
    return bench_instance(*args)


def run_bench(suite, seeds: int = DEFAULT_SEEDS, jobs: int = 1) -> list:
    """Rows in suite order; instances run in parallel when jobs > 1."""
    work = [(name, net, dag, tree, seeds) for name, net, dag, tree in suite]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_one, work))
    else:
        parts = [_run_one(w) for w in work]
    return [row for part in parts for row in part]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def to_csv(rows, timing: bool = True) -> str:
    fields = FIELDS if timing else FIELDS[:-1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(getattr(r, f) if f != "value" else _num(r.value)) for f in fields])
    return buf.getvalue()


def _num(x):
    if x is None:
        return None
    f = float(x)
    return int(f) if f == int(f) else f


def to_records(rows, timing: bool = True) -> list:
    out = []
    for r in rows:
        d = {"instance": r.instance, "solver": r.solver, "value": _num(r.value), "ratio": r.ratio,
             "std": r.std, "bound": r.bound, "F": r.F}
        if timing:
            d["wall_time"] = r.wall_time
        out.append(d)
    return out
