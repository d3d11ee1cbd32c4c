"""Exact minimum-cost embedding on a two-node network via a 2-Cut reduction."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .embedding import Embedding, pinned
from .graphs import ComputationDag, NetworkGraph

INF = math.inf
J1, J2 = "j1", "j2"
MAX_SUBSET_VERTICES = 22


def _in(u) -> str:
    return f"{u}.in"


def _out(u) -> str:
    return f"{u}.out"


@dataclass
class CutInstance:
    nodes: list
    edges: dict                  # (i, j) -> weight, math.inf allowed
    j1: str = J1
    j2: str = J2
    gadgets: dict = field(default_factory=dict)   # DAG vertex -> (in, out) or (vertex,) for the sink

    def __post_init__(self):
        self.out = {v: [] for v in self.nodes}
        for (i, j), w in self.edges.items():
            self.out[i].append((j, w))

    def finite_total(self):
        return sum((w for w in self.edges.values() if not math.isinf(w)), 0)

    def to_json(self) -> dict:
        return {"nodes": list(self.nodes), "j1": self.j1, "j2": self.j2,
                "edges": [[i, j, "inf" if math.isinf(w) else _num(w)] for (i, j), w in self.edges.items()]}


def _num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return x


@dataclass
class CutSolution:
    J1: frozenset
    J2: frozenset
    weight: object
    nodes: tuple = ()

    @property
    def J3(self) -> frozenset:
        return frozenset(self.nodes) - self.J1 - self.J2

    def to_json(self) -> dict:
        return {"J1": sorted(self.J1), "J2": sorted(self.J2), "J3": sorted(self.J3),
                "weight": "inf" if math.isinf(self.weight) else _num(self.weight)}


def _two_node_check(net: NetworkGraph):
    if net.n != 2 or len(net.edges) != 1:
        raise ValueError("network must have exactly two nodes joined by one edge")


def build_2cut_instance(net2: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None) -> CutInstance:
    """Split every non-sink vertex into in/out with an edge of weight w(theta)*x;
    out-vertices feed their successors with infinite edges."""
    _two_node_check(net2)
    n1, n2 = net2.nodes
    if net2.sink != n2:
        n1, n2 = n2, n1
    x = net2.prices(prices)[net2.edges[0]]
    reserved = {J1, J2}
    nodes = [J1, J2]
    edges = {}
    gadgets = {}
    for u in dag.topological_order():
        if u == dag.sink:
            names = (u,)
        else:
            names = (_in(u), _out(u))
        if reserved & set(names):
            raise ValueError(f"vertex id {u!r} clashes with a reserved cut vertex name")
        reserved.update(names)
        nodes.extend(names)
        gadgets[u] = names
    for u in dag.nodes:
        if u == dag.sink:
            continue
        edges[(_in(u), _out(u))] = dag.node_weight[u] * x
        for e in dag.out_edges[u]:
            edges[(_out(u), gadgets[e.head][0])] = INF
    pins = pinned(net2, dag)
    for s in dag.sources:
        edges[(J1 if pins[s] == n1 else J2, _in(s))] = INF
    edges[(J2, dag.sink)] = INF
    return CutInstance(nodes, edges, J1, J2, gadgets)


def delta(inst: CutInstance, A: Iterable):
    """Total weight of edges leaving A."""
    A = set(A)
    return sum((w for (i, j), w in inst.edges.items() if i in A and j not in A), 0)


def _max_flow_cut(inst: CutInstance, source, sinks: set):
    """Edmonds-Karp from source to the merged sink set; returns (value, source side).

    Infinite capacities are replaced by the sum of the finite ones plus one.
    """
    big = inst.finite_total() + 1
    T = object()
    cap = {}

    def add(a, b, c):
        cap[(a, b)] = cap.get((a, b), 0) + c
        cap.setdefault((b, a), 0)

    for (i, j), w in inst.edges.items():
        a = T if i in sinks else i
        b = T if j in sinks else j
        if a == b or a is T:
            continue
        add(a, b, big if math.isinf(w) else w)
    adj = {}
    for a, b in cap:
        adj.setdefault(a, []).append(b)
    flow = 0
    if source in sinks:
        return INF, set()
    while True:
        parent = {source: None}
        q = deque([source])
        while q and T not in parent:
            a = q.popleft()
            for b in adj.get(a, ()):
                if b not in parent and cap[(a, b)] > 0:
                    parent[b] = a
                    q.append(b)
        if T not in parent:
            break
        path = []
        b = T
        while parent[b] is not None:
            path.append((parent[b], b))
            b = parent[b]
        push = min(cap[e] for e in path)
        for a, b in path:
            cap[(a, b)] -= push
            cap[(b, a)] += push
        flow += push
    side = {v for v in parent if v is not T}
    return (INF if flow >= big else flow), side


def _split(inst: CutInstance, A) -> set:
    A = set(A)
    if inst.j1 in A or inst.j2 in A:
        raise ValueError("A must avoid both terminals")
    return A


def h_value(inst: CutInstance, A: Iterable):
    """delta(A + j1) plus the cheapest delta(C + j2) with C outside A + j1."""
    A = _split(inst, A)
    first = delta(inst, A | {inst.j1})
    second, _ = _max_flow_cut(inst, inst.j2, A | {inst.j1})
    return first + second


def _solution(inst: CutInstance, A: set) -> CutSolution:
    J1set = frozenset(A | {inst.j1})
    _, side = _max_flow_cut(inst, inst.j2, set(J1set))
    J2set = frozenset(side)
    return CutSolution(J1set, J2set, delta(inst, J1set) + delta(inst, J2set), tuple(inst.nodes))


def _candidate_sets(inst: CutInstance):
    """Sets A worth scoring.

    Targets of infinite edges from j1 are forced in, those from j2 are kept
    out. On generated instances a gadget's out-vertex joins A exactly when its
    in-vertex and all successor in-vertices are in A; any other choice never
    lowers h.
    """
    forced = {j for j, w in inst.out[inst.j1] if math.isinf(w)}
    banned = {j for j, w in inst.out[inst.j2] if math.isinf(w)}
    if not inst.gadgets:
        free = [v for v in inst.nodes if v not in (inst.j1, inst.j2) and v not in forced | banned]
        for r in range(len(free) + 1):
            for combo in itertools.combinations(free, r):
                yield forced | set(combo)
        return
    split = [g for g in inst.gadgets.values() if len(g) == 2]
    choosable = [g for g in split if g[0] not in forced and g[0] not in banned]
    succ = {g[1]: [j for j, w in inst.out[g[1]]] for g in split}
    for r in range(len(choosable) + 1):
        for combo in itertools.combinations(choosable, r):
            A = set(forced) | {g[0] for g in combo}
            for g in split:
                if g[0] in A and all(j in A for j in succ[g[1]]):
                    A.add(g[1])
            yield A


def solve_2cut(inst: CutInstance, exhaustive: bool = False) -> CutSolution:
    """Minimise h over A, then recover J2 from the inner minimum cut.

    With exhaustive=True every subset of the non-terminal vertices is scored.
    """
    others = [v for v in inst.nodes if v not in (inst.j1, inst.j2)]
    if exhaustive:
        if len(inst.nodes) > MAX_SUBSET_VERTICES:
            raise ValueError(f"exhaustive search limited to {MAX_SUBSET_VERTICES} vertices")
        space = (set(c) for r in range(len(others) + 1) for c in itertools.combinations(others, r))
    else:
        choosable = sum(1 for g in inst.gadgets.values() if len(g) == 2) if inst.gadgets else len(others)
        if choosable > MAX_SUBSET_VERTICES:
            raise ValueError(f"subset search limited to {MAX_SUBSET_VERTICES} free vertices")
        space = _candidate_sets(inst)
    best, best_A = None, None
    for A in space:
        val = h_value(inst, A)
        if best is None or val < best:
            best, best_A = val, A
    sol = _solution(inst, best_A)
    if sol.weight != best:
        raise RuntimeError("cut reconstruction disagrees with the minimised value")
    return sol


# ----------------------------------------------------------- placements ----

def _nodes(net2):
    n1, n2 = net2.nodes
    return (n2, n1) if net2.sink == n1 else (n1, n2)


def prune_placement(dag: ComputationDag, place: Mapping) -> dict:
    """Drop copies that no successor reads locally, sweeping sinks first."""
    out = {v: set(s) for v, s in place.items()}
    for u in reversed(dag.topological_order()):
        if u == dag.sink or u in dag.sources or len(out[u]) < 2:
            continue
        used = set()
        for e in dag.out_edges[u]:
            used |= out[e.head]
        keep = out[u] & used
        out[u] = keep if keep else {min(out[u])}
    return out


def placement_cost(net2: NetworkGraph, dag: ComputationDag, place: Mapping, prices: Optional[Mapping] = None):
    """Each function pays w*x once if some successor sits where it is not computed."""
    x = net2.prices(prices)[net2.edges[0]]
    total = 0
    for u in dag.functions:
        need = set()
        for e in dag.out_edges[u]:
            need |= place[e.head]
        if need - place[u]:
            total += dag.node_weight[u] * x
    return total


def placement_to_embedding(net2: NetworkGraph, dag: ComputationDag, place: Mapping) -> Embedding:
    paths = {}
    for e in dag.edges:
        src = place[e.tail]
        ps = []
        for site in sorted(place[e.head]):
            if site in src:
                ps.append((site,))
            else:
                other = next(iter(src))
                ps.append((other, site))
        paths[e.id] = ps
    return Embedding(paths)


def cut_to_embedding(net2: NetworkGraph, dag: ComputationDag, sol: CutSolution,
                     prices: Optional[Mapping] = None):
    """In-vertex in J1 -> computed at n1, J2 -> n2, elsewhere -> both; then prune."""
    if math.isinf(sol.weight):
        raise ValueError("cut has infinite weight")
    _two_node_check(net2)
    n1, n2 = _nodes(net2)
    place = {}
    pins = pinned(net2, dag)
    for u in dag.nodes:
        if u in pins:
            place[u] = {pins[u]}
        elif _in(u) in sol.J1:
            place[u] = {n1}
        elif _in(u) in sol.J2:
            place[u] = {n2}
        else:
            place[u] = {n1, n2}
    place = prune_placement(dag, place)
    return placement_to_embedding(net2, dag, place), placement_cost(net2, dag, place, prices)


def embedding_to_cut(net2: NetworkGraph, dag: ComputationDag, emb: Embedding,
                     prices: Optional[Mapping] = None) -> CutSolution:
    _two_node_check(net2)
    n1, n2 = _nodes(net2)
    inst = build_2cut_instance(net2, dag, prices)
    sites = {v: set(s) for v, s in emb.sites(dag).items()}
    A, B = {inst.j1}, {inst.j2, dag.sink}
    for u in dag.nodes:
        if u == dag.sink:
            continue
        here = sites[u]
        if here == {n1}:
            A.add(_in(u))
        elif here == {n2}:
            B.add(_in(u))
        need = set()
        for e in dag.out_edges[u]:
            need |= sites[e.head]
        if need == {n1} and here != {n1, n2}:
            A.add(_out(u))
        elif need == {n2} and here != {n1, n2}:
            B.add(_out(u))
    return CutSolution(frozenset(A), frozenset(B), delta(inst, A) + delta(inst, B), tuple(inst.nodes))


def solve_two_node(net2: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None):
    """Minimum-cost embedding on a two-node network: (Embedding, cost, CutSolution)."""
    inst = build_2cut_instance(net2, dag, prices)
    sol = solve_2cut(inst)
    emb, cost = cut_to_embedding(net2, dag, sol, prices)
    return emb, cost, sol


def brute_force_two_node(net2: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None):
    """Every free vertex at n1, n2 or both; returns (cost, pruned placement)."""
    _two_node_check(net2)
    n1, n2 = _nodes(net2)
    pins = pinned(net2, dag)
    free = [v for v in dag.nodes if v not in pins]
    options = ({n1}, {n2}, {n1, n2})
    best = None
    for combo in itertools.product(options, repeat=len(free)):
        place = {v: {p} for v, p in pins.items()}
        place.update(zip(free, combo))
        place = prune_placement(dag, place)
        cost = placement_cost(net2, dag, place, prices)
        if best is None or cost < best[0]:
            best = (cost, place)
    return best
