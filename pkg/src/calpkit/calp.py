"""Rate solver: packing LP over embedding columns, pricing, column generation, MWU."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.optimize import linprog

from .embedding import Embedding, cost_C, edge_usage, validate_embedding, validate_rembedding
from .graphs import ComputationDag, NetworkGraph, all_pairs_shortest
from .oracle import mincost_c_exact, mincost_cc_exact

FEAS_TOL = 1e-9


@dataclass
class RateSolution:
    columns: list                     # [(Embedding, flow)] with positive flow
    objective: float
    duals: dict                       # network edge -> y(e)
    status: str = "optimal"           # "optimal" or "approx"
    alpha: Optional[float] = 1.0      # certified ratio of the pricing strategy, None if unknown
    upper_bound: Optional[float] = None
    iterations: int = 0
    pool: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def flows(self) -> list:
        return [x for _, x in self.columns]

    def dual_objective(self, net: NetworkGraph) -> float:
        return sum(float(net.capacity[e]) * y for e, y in self.duals.items())

    def status_text(self) -> str:
        if self.status == "optimal":
            return "optimal"
        return f"approx({self.alpha:g})" if self.alpha is not None else "approx(uncertified)"


def usage_vector(net: NetworkGraph, dag: ComputationDag, emb: Embedding) -> np.ndarray:
    r = edge_usage(net, dag, emb).r
    return np.array([float(r[e]) for e in net.edges])


def capacity_violation(net: NetworkGraph, dag: ComputationDag, sol: RateSolution) -> float:
    """Largest excess of load over capacity, recomputed from the columns."""
    load = np.zeros(len(net.edges))
    for emb, x in sol.columns:
        load += usage_vector(net, dag, emb) * float(x)
    cap = np.array([float(net.capacity[e]) for e in net.edges])
    return float(max(0.0, np.max(load - cap))) if len(cap) else 0.0


def _check_column(net, dag, emb):
    rep = validate_rembedding(net, dag, emb) if emb.is_restricted else validate_embedding(net, dag, emb)
    if not rep.ok:
        raise ValueError(f"invalid column: {rep.violations[0].message}")


def solve_packing_lp(net: NetworkGraph, dag: ComputationDag, columns: list, check: bool = True) -> RateSolution:
    """Maximize total flow over the given embeddings subject to edge capacities."""
    columns = list(columns)
    if check:
        for emb in columns:
            _check_column(net, dag, emb)
    if not columns:
        return RateSolution([], 0.0, {e: 0.0 for e in net.edges})
    A = np.column_stack([usage_vector(net, dag, emb) for emb in columns]) if net.edges else np.zeros((0, len(columns)))
    cap = np.array([float(net.capacity[e]) for e in net.edges])
    if A.shape[0] == 0:
        raise ValueError("unbounded rate: embeddings use no capacitated edge")
    unbounded = [j for j in range(len(columns)) if not A[:, j].any()]
    if unbounded:
        raise ValueError("unbounded rate: an embedding uses no network edge")
    res = linprog(-np.ones(len(columns)), A_ub=A, b_ub=cap, bounds=(0, None), method="highs")
    if res.status != 0:
        raise ValueError(f"packing LP failed: {res.message}")
    x = np.where(res.x > 1e-12, res.x, 0.0)
    duals = {e: max(0.0, -float(m)) for e, m in zip(net.edges, res.ineqlin.marginals)}
    kept = [(emb, float(v)) for emb, v in zip(columns, x) if v > 0]
    return RateSolution(kept, float(x.sum()), duals, pool=columns)


# ----------------------------------------------------------------- pricing ----

@dataclass
class Priced:
    embedding: Embedding
    cost: float            # C-cost under the given prices
    lower_bound: float     # certified lower bound on the minimum C-cost


def _ddeg(dag):
    return max(1, dag.max_out_degree)


def _price_oracle(net, dag, prices, dist, seed):
    remb, cost = mincost_c_exact(net, dag, dist=dist)
    return Priced(remb, cost, cost)


def _price_cc_oracle(net, dag, prices, dist, seed):
    remb, cc = mincost_cc_exact(net, dag, dist=dist)
    return Priced(remb, cost_C(net, dag, remb, prices), cc / _ddeg(dag))


def _price_tree(net, dag, prices, dist, seed):
    from .structured import tree_dp_mincost_cc
    remb, cc = tree_dp_mincost_cc(net, dag, dist=dist)
    return Priced(remb, cost_C(net, dag, remb, prices), cc / _ddeg(dag))


def _price_layered(net, dag, prices, dist, seed):
    from .structured import layered_dp_mincost_cc
    remb, cc = layered_dp_mincost_cc(net, dag, dist=dist)
    return Priced(remb, cost_C(net, dag, remb, prices), cc / _ddeg(dag))


def _price_spantree(net, dag, prices, dist, seed):
    from .structured import spanning_tree_approx_mincost_cc
    res = spanning_tree_approx_mincost_cc(net, dag, dist=dist)
    return Priced(res.rembedding, cost_C(net, dag, res.rembedding, prices), res.tree_cost / _ddeg(dag))


def _price_emlp(net, dag, prices, dist, seed):
    from .emlp import emlp_mincost_cc
    remb, _, lp = emlp_mincost_cc(net, dag, dist=dist, seed=seed)
    return Priced(remb, cost_C(net, dag, remb, prices), max(0.0, lp) / _ddeg(dag))


STRATEGIES: dict = {
    "oracle": _price_oracle,
    "cc-oracle": _price_cc_oracle,
    "tree": _price_tree,
    "layered": _price_layered,
    "spantree": _price_spantree,
    "emlp": _price_emlp,
}


def strategy_ratio(dag: ComputationDag, strategy: str) -> Optional[float]:
    """A-priori ratio of a pricing strategy for the per-function cost."""
    D = _ddeg(dag)
    if strategy == "oracle":
        return 1.0
    if strategy in ("cc-oracle", "tree"):
        return float(D)
    if strategy == "layered":
        from .structured import layered_ratio
        return float(layered_ratio(dag))
    if strategy == "spantree":
        from .graphs import spanning_tree_cycle_load
        from .structured import weighted_cycle_load
        return float((1 + weighted_cycle_load(dag, spanning_tree_cycle_load(dag))) * D)
    return None


def price_column(net: NetworkGraph, dag: ComputationDag, duals: Mapping, solver="oracle", seed: int = 0) -> tuple:
    """Cheapest column under prices y; cost below 1 means it improves the master LP."""
    p = _pricer(solver)(net, dag, dict(duals), all_pairs_shortest(net, duals), seed)
    return p.embedding, p.cost


def _pricer(solver) -> Callable:
    if callable(solver):
        return solver
    if solver not in STRATEGIES:
        raise ValueError(f"unknown pricing strategy {solver!r}")
    return STRATEGIES[solver]


def _price(net, dag, y, solver, seed) -> Priced:
    prices = {e: y[e] for e in net.edges}
    return _pricer(solver)(net, dag, prices, all_pairs_shortest(net, prices), seed)


def _initial_prices(net):
    return {e: (1.0 / float(c) if c > 0 else 1e6) for e, c in net.capacity.items()}


def solve_rcalp_colgen(net: NetworkGraph, dag: ComputationDag, strategy="oracle", alpha: Optional[float] = None,
                       columns: Optional[list] = None, max_rounds: Optional[int] = None, seed: int = 0) -> RateSolution:
    """Column generation: master packing LP plus min-cost pricing until no column
    has cost below one under the current duals."""
    if alpha is None and isinstance(strategy, str):
        alpha = strategy_ratio(dag, strategy)
    pool = list(columns or [])
    for emb in pool:
        _check_column(net, dag, emb)
    keys = {emb.key() for emb in pool}
    first = _price(net, dag, _initial_prices(net), strategy, seed).embedding
    if first.key() not in keys:
        pool.append(first)
        keys.add(first.key())
    max_rounds = max_rounds or 10 * max(1, len(net.edges)) * max(1, len(dag.nodes))
    sol, priced, rounds, notes = None, None, 0, []
    while True:
        sol = solve_packing_lp(net, dag, pool, check=False)
        rounds += 1
        priced = _price(net, dag, sol.duals, strategy, seed)
        if priced.cost >= 1 - FEAS_TOL:
            break
        if priced.embedding.key() in keys:
            notes.append("pricing returned an existing column below unit cost; stopped on numerical tolerance")
            break
        if rounds >= max_rounds:
            notes.append("round limit reached; best-so-far solution")
            break
        pool.append(priced.embedding)
        keys.add(priced.embedding.key())
    sol.iterations = rounds
    sol.pool = pool
    sol.notes = notes
    lb = float(priced.lower_bound)
    sol.upper_bound = sol.objective / lb if lb > 0 else math.inf
    exact = strategy == "oracle" and not notes
    sol.status = "optimal" if exact else "approx"
    sol.alpha = 1.0 if exact else alpha
    if sol.status == "approx" and sol.alpha is None and lb > 0 and priced.cost >= 1 - FEAS_TOL:
        notes.append(f"a-posteriori ratio {float(priced.cost) / lb:.4g}")
    return sol


def solve_rcalp_mwu(net: NetworkGraph, dag: ComputationDag, eps: float = 0.05, strategy="oracle",
                    columns: Optional[list] = None, seed: int = 0, max_iter: int = 200000,
                    check_every: int = 20) -> RateSolution:
    """Multiplicative-weights packing (Garg-Koenemann) with the same pricing
    oracle, followed by an exact re-solve over the columns it visited.

    The cheapest visited column is reused while its current cost stays
    within (1+eps) of the last oracle answer; prices only grow, so that
    answer remains a valid reference. Every `check_every` oracle calls the
    visited columns are re-solved exactly; if pricing under those duals finds
    no column below unit cost the loop stops early.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    live = [e for e in net.edges if net.capacity[e] > 0]
    cap = {e: float(net.capacity[e]) for e in live}
    alpha = strategy_ratio(dag, strategy) if isinstance(strategy, str) else None
    if not live:
        return RateSolution([], 0.0, {e: 0.0 for e in net.edges}, status="approx", alpha=alpha)
    m = len(live)
    delta = (1 + eps) * ((1 + eps) * m) ** (-1.0 / eps)
    y = {e: (delta / cap[e] if e in cap else math.inf) for e in net.edges}
    pool, usage, keys = [], [], {}
    ref = None
    it = calls = 0
    certified = False
    while sum(cap[e] * y[e] for e in live) < 1 and it < max_iter:
        it += 1
        col = None
        if ref is not None:
            costs = [sum(r * y[e] for e, r in u.items()) for u in usage]
            j = min(range(len(costs)), key=costs.__getitem__)
            if costs[j] <= (1 + eps) * ref:
                col = j
        if col is None:
            try:
                p = _price(net, dag, y, strategy, seed)
            except ValueError:
                break
            if math.isinf(p.cost):
                break
            k = p.embedding.key()
            if k not in keys:
                keys[k] = len(pool)
                pool.append(p.embedding)
                r = edge_usage(net, dag, p.embedding).r
                usage.append({e: float(v) for e, v in r.items() if v})
            col = keys[k]
            ref = float(p.cost)
            calls += 1
            if check_every and calls % check_every == 0:
                trial = solve_packing_lp(net, dag, pool, check=False)
                if _price(net, dag, trial.duals, strategy, seed).cost >= 1 - FEAS_TOL:
                    certified = True
                    break
        u = usage[col]
        if not u:
            raise ValueError("unbounded rate: an embedding uses no network edge")
        if any(e not in cap for e in u):
            break
        step = min(cap[e] / r for e, r in u.items())
        for e, r in u.items():
            y[e] *= 1 + eps * step * r / cap[e]
    if not pool:
        return RateSolution([], 0.0, {e: 0.0 for e in net.edges}, status="approx", alpha=alpha, iterations=it)
    for emb in columns or []:
        if emb.key() not in keys:
            keys[emb.key()] = len(pool)
            pool.append(emb)
    sol = solve_packing_lp(net, dag, pool, check=bool(columns))
    sol.status = "approx"
    sol.alpha = alpha
    sol.iterations = it
    if certified:
        sol.notes.append("stopped early: no visited-column dual is violated")
    elif it >= max_iter:
        sol.notes.append("iteration limit reached")
    return sol
