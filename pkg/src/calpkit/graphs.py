"""Network and computation-DAG models, validation and structural metrics."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from numbers import Real
from typing import Iterable, Mapping, Optional

Edge = tuple  # canonical (u, v) pair of network node ids


def same_value(a, b) -> bool:
    """Equality that is exact for int/Fraction and tolerant for floats."""
    if isinstance(a, float) or isinstance(b, float):
        if math.isinf(a) or math.isinf(b):
            return a == b
        return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)
    return a == b


@dataclass
class Violation:
    code: str
    message: str
    where: object = None

    def as_dict(self):
        return {"code": self.code, "message": self.message, "where": _plain(self.where)}


def _plain(obj):
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_plain(o) for o in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    return obj


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code, message, where=None):
        self.violations.append(Violation(code, message, where))

    def warn(self, code, message, where=None):
        self.warnings.append(Violation(code, message, where))

    def codes(self) -> set:
        return {v.code for v in self.violations}

    def extend(self, other: "ValidationReport"):
        self.violations.extend(other.violations)
        self.warnings.extend(other.warnings)

    def as_dict(self):
        return {
            "ok": self.ok,
            "violations": [v.as_dict() for v in self.violations],
            "warnings": [w.as_dict() for w in self.warnings],
        }

    def __bool__(self):
        return self.ok


class NetworkGraph:
    """Undirected network with capacities, prices, sources and a sink.

    Construction only checks what is needed to index the graph; the
    remaining invariants are reported by :func:`validate_network`.
    """

    def __init__(self, nodes, edges, sources, sink):
        # edges: iterable of (u, v, capacity, weight)
        self.nodes = tuple(nodes)
        self.index = {v: i for i, v in enumerate(self.nodes)}
        if len(self.index) != len(self.nodes):
            raise ValueError("duplicate network node ids")
        self.sources = tuple(sources)
        self.sink = sink
        self.edges = []
        self.capacity = {}
        self.weight = {}
        self.raw_edges = []
        self.adj = {v: [] for v in self.nodes}
        for u, v, cap, w in edges:
            if u not in self.index or v not in self.index:
                raise ValueError(f"edge ({u}, {v}) references unknown node")
            self.raw_edges.append((u, v, cap, w))
            if u == v:
                continue
            e = self.key(u, v)
            if e in self.capacity:
                continue
            self.edges.append(e)
            self.capacity[e] = cap
            self.weight[e] = w
            self.adj[u].append(v)
            self.adj[v].append(u)
        for v in self.nodes:
            self.adj[v].sort(key=self.index.__getitem__)
        self.edges = tuple(self.edges)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def key(self, u, v) -> Edge:
        return (u, v) if self.index[u] <= self.index[v] else (v, u)

    def has_edge(self, u, v) -> bool:
        return u != v and u in self.index and v in self.index and self.key(u, v) in self.capacity

    def prices(self, prices: Optional[Mapping] = None) -> dict:
        if prices is None:
            return dict(self.weight)
        return {e: prices.get(e, prices.get((e[1], e[0]), 0)) for e in self.edges}

    def with_capacities(self, capacity: Mapping) -> "NetworkGraph":
        return NetworkGraph(self.nodes,
                            [(u, v, capacity.get((u, v), 0), self.weight[(u, v)]) for u, v in self.edges],
                            self.sources, self.sink)

    def __repr__(self):
        return f"NetworkGraph(n={self.n}, m={len(self.edges)}, sources={self.sources}, sink={self.sink!r})"


def validate_network(net: NetworkGraph, shared_sources: bool = False) -> ValidationReport:
    """Structural checks; shared_sources lets several sources sit on one node
    (two-node and reduction instances need this)."""
    rep = ValidationReport()
    seen = set()
    for u, v, cap, w in net.raw_edges:
        if u == v:
            rep.add("self_loop", f"network edge ({u}, {v}) is a self-loop", (u, v))
            continue
        e = net.key(u, v)
        if e in seen:
            rep.add("parallel_edge", f"network edge {e} listed more than once", e)
        seen.add(e)
        for name, val in (("capacity", cap), ("weight", w)):
            if not isinstance(val, Real) or isinstance(val, bool):
                rep.add("bad_number", f"{name} of {e} is not a number", e)
            elif val < 0 or (isinstance(val, float) and not math.isfinite(val)):
                rep.add(f"bad_{name}", f"{name} of {e} must be finite and non-negative", e)
    if len(set(net.sources)) != len(net.sources):
        if shared_sources:
            rep.warn("shared_sources", "several sources share a network node", list(net.sources))
        else:
            rep.add("duplicate_sources", "network sources must be distinct", list(net.sources))
    for s in net.sources:
        if s not in net.index:
            rep.add("unknown_source", f"source {s!r} is not a network node", s)
    if net.sink not in net.index:
        rep.add("unknown_sink", f"sink {net.sink!r} is not a network node", net.sink)
    if net.sink in net.sources:
        rep.warn("sink_is_source", "sink coincides with a source position", net.sink)
    return rep


@dataclass(frozen=True)
class DagEdge:
    id: str
    tail: str
    head: str
    weight: Optional[Real] = None


class ComputationDag:
    """Computation schema: vertices are functions, edges carry them downstream."""

    def __init__(self, nodes, edges, sources, sink, node_weight=None):
        self.nodes = tuple(nodes)
        self.index = {v: i for i, v in enumerate(self.nodes)}
        if len(self.index) != len(self.nodes):
            raise ValueError("duplicate DAG vertex ids")
        self.node_weight = {v: 1 for v in self.nodes}
        if node_weight:
            self.node_weight.update(node_weight)
        es = []
        for e in edges:
            if not isinstance(e, DagEdge):
                tail, head = e[0], e[1]
                w = e[2] if len(e) > 2 else None
                eid = e[3] if len(e) > 3 and e[3] is not None else f"{tail}->{head}"
                e = DagEdge(eid, tail, head, w)
            if e.tail not in self.index or e.head not in self.index:
                raise ValueError(f"DAG edge {e.id} references unknown vertex")
            es.append(e)
        self.edges = tuple(es)
        self.edge = {e.id: e for e in self.edges}
        if len(self.edge) != len(self.edges):
            raise ValueError("duplicate DAG edge ids")
        self.sources = tuple(sources)
        self.sink = sink
        self.out_edges = {v: [] for v in self.nodes}
        self.in_edges = {v: [] for v in self.nodes}
        for e in self.edges:
            self.out_edges[e.tail].append(e)
            self.in_edges[e.head].append(e)

    def edge_weight(self, e) -> Real:
        if isinstance(e, str):
            e = self.edge[e]
        return self.node_weight[e.tail] if e.weight is None else e.weight

    def succ(self, v) -> list:
        out = []
        for e in self.out_edges[v]:
            if e.head not in out:
                out.append(e.head)
        return out

    def pred(self, v) -> list:
        out = []
        for e in self.in_edges[v]:
            if e.tail not in out:
                out.append(e.tail)
        return out

    @property
    def functions(self) -> list:
        """Vertices whose value travels along edges (every non-sink vertex)."""
        return [v for v in self.nodes if v != self.sink]

    @property
    def free_vertices(self) -> list:
        pinned = set(self.sources) | {self.sink}
        return [v for v in self.topological_order() if v not in pinned]

    @property
    def max_out_degree(self) -> int:
        return max((len(self.out_edges[v]) for v in self.nodes), default=0)

    def topological_order(self) -> list:
        """Kahn order with ties broken by vertex declaration order."""
        indeg = {v: len(self.in_edges[v]) for v in self.nodes}
        heap = [self.index[v] for v in self.nodes if indeg[v] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            v = self.nodes[heapq.heappop(heap)]
            order.append(v)
            for e in self.out_edges[v]:
                indeg[e.head] -= 1
                if indeg[e.head] == 0:
                    heapq.heappush(heap, self.index[e.head])
        if len(order) != len(self.nodes):
            raise ValueError("computation graph has a directed cycle")
        return order

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
        except ValueError:
            return False
        return True

    def is_tree_shaped(self) -> bool:
        return all(len(self.out_edges[v]) == 1 for v in self.nodes if v != self.sink)

    def __repr__(self):
        return f"ComputationDag(|V|={len(self.nodes)}, |E|={len(self.edges)}, sources={self.sources}, sink={self.sink!r})"


def validate_computation_dag(dag: ComputationDag, model: str = "C") -> ValidationReport:
    """Report every violated structural property of a computation DAG.

    ``model="C"`` additionally requires all out-edges of a vertex to carry
    the same weight; ``model="CC"`` allows per-edge weights.
    """
    rep = ValidationReport()
    for e in dag.edges:
        if e.tail == e.head:
            rep.add("cycle", f"edge {e.id} is a self-loop on {e.tail}", e.id)
    if not dag.is_acyclic():
        rep.add("cycle", "computation graph has a directed cycle")
    src = set(dag.sources)
    if len(src) != len(dag.sources):
        rep.add("duplicate_sources", "DAG sources must be distinct", list(dag.sources))
    if dag.sink not in dag.index:
        rep.add("unknown_sink", f"sink {dag.sink!r} is not a DAG vertex", dag.sink)
        return rep
    for s in dag.sources:
        if s not in dag.index:
            rep.add("unknown_source", f"source {s!r} is not a DAG vertex", s)
            continue
        if dag.in_edges[s]:
            rep.add("source_in_degree", f"source {s} has incoming edges", s)
        if s == dag.sink:
            rep.add("source_is_sink", f"vertex {s} is both a source and the sink", s)
        elif not dag.out_edges[s]:
            rep.add("source_out_degree", f"source {s} has no outgoing edge", s)
    if dag.out_edges[dag.sink]:
        rep.add("sink_out_degree", f"sink {dag.sink} has outgoing edges", dag.sink)
    if not dag.in_edges[dag.sink] and dag.sink not in src:
        rep.add("sink_in_degree", f"sink {dag.sink} receives nothing", dag.sink)
    for v in dag.nodes:
        if v in src or v == dag.sink:
            continue
        if not dag.in_edges[v]:
            rep.add("intermediate_in_degree", f"vertex {v} is not a source but has no inputs", v)
        if not dag.out_edges[v]:
            rep.add("intermediate_out_degree", f"vertex {v} is not the sink but has no outputs", v)
    for v in dag.nodes:
        w = dag.node_weight.get(v)
        if v != dag.sink and (not isinstance(w, Real) or isinstance(w, bool) or w <= 0):
            rep.add("bad_weight", f"function weight of {v} must be positive", v)
    for e in dag.edges:
        if e.weight is not None and (not isinstance(e.weight, Real) or e.weight <= 0):
            rep.add("bad_weight", f"edge weight of {e.id} must be positive", e.id)
    if model == "C":
        for v in dag.nodes:
            ws = {dag.edge_weight(e) for e in dag.out_edges[v]}
            if len(ws) > 1:
                rep.add("nonuniform_out_weights",
                        f"out-edges of {v} carry different weights {sorted(ws)}", v)
    return rep


def validate_instance(net: NetworkGraph, dag: ComputationDag, model: str = "C",
                      shared_sources: bool = False) -> ValidationReport:
    rep = validate_network(net, shared_sources)
    rep.extend(validate_computation_dag(dag, model))
    if len(net.sources) != len(dag.sources):
        rep.add("source_count", f"network has {len(net.sources)} sources, DAG has {len(dag.sources)}")
    return rep


class DistanceMatrix:
    """All-pairs shortest paths; absent entries mean unreachable.

    Paths are chosen as the lexicographically smallest vertex sequence
    (by node index) among the minimum-cost, minimum-hop paths.
    """

    def __init__(self, net: NetworkGraph, prices: Mapping):
        self.net = net
        self.prices = prices
        self._d = {}
        for s in net.nodes:
            self._d[s] = self._dijkstra(s)

    def _dijkstra(self, s):
        net, price = self.net, self.prices
        best = {s: (0, 0)}
        heap = [(0, 0, net.index[s], s)]
        done = set()
        while heap:
            c, h, _, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v in net.adj[u]:
                w = price[net.key(u, v)]
                if math.isinf(w):
                    continue
                cand = (c + w, h + 1)
                old = best.get(v)
                if old is None or cand < old:
                    best[v] = cand
                    heapq.heappush(heap, (cand[0], cand[1], net.index[v], v))
        return best

    def __call__(self, u, v):
        entry = self._d[u].get(v)
        return math.inf if entry is None else entry[0]

    def hops(self, u, v):
        entry = self._d[u].get(v)
        return None if entry is None else entry[1]

    def reachable(self, u, v) -> bool:
        return v in self._d[u]

    def path(self, u, v) -> tuple:
        if v not in self._d[u]:
            raise ValueError(f"no path between {u} and {v}")
        net, dv = self.net, self._d[v]
        out = [u]
        a = u
        while a != v:
            ca, ha = dv[a]
            for b in net.adj[a]:
                entry = dv.get(b)
                if entry is None or entry[1] != ha - 1:
                    continue
                w = self.prices[net.key(a, b)]
                if same_value(w + entry[0], ca):
                    out.append(b)
                    a = b
                    break
            else:  # pragma: no cover - guarded by Dijkstra invariants
                raise RuntimeError("shortest-path reconstruction failed")
        return tuple(out)

    def matrix(self):
        """Dense list-of-lists in node index order (inf where unreachable); shared, do not mutate."""
        if getattr(self, "_matrix", None) is None:
            self._matrix = [[self(u, v) for v in self.net.nodes] for u in self.net.nodes]
        return self._matrix


def all_pairs_shortest(net: NetworkGraph, prices: Optional[Mapping] = None) -> DistanceMatrix:
    p = net.prices(prices)
    for e, w in p.items():
        if w < 0:
            raise ValueError(f"negative weight on {e}")
    return DistanceMatrix(net, p)


@dataclass
class SpanningTreeInfo:
    tree: tuple                 # DAG edge ids in the tree
    counts: dict                # tree edge id -> number of fundamental cycles through it
    cycles: dict                # non-tree edge id -> tree edge ids on its cycle
    F: int

    @property
    def non_tree(self) -> tuple:
        return tuple(self.cycles)


def _skeleton(dag: ComputationDag):
    adj = {v: [] for v in dag.nodes}
    for e in dag.edges:
        adj[e.tail].append((e.head, e.id))
        adj[e.head].append((e.tail, e.id))
    for v in adj:
        adj[v].sort(key=lambda t: (dag.index[t[0]], t[1]))
    return adj


def bfs_tree(dag: ComputationDag, root=None) -> tuple:
    root = dag.sink if root is None else root
    adj = _skeleton(dag)
    seen = {root}
    tree = []
    q = deque([root])
    while q:
        u = q.popleft()
        for v, eid in adj[u]:
            if v not in seen:
                seen.add(v)
                tree.append(eid)
                q.append(v)
    if len(seen) != len(dag.nodes):
        raise ValueError("undirected skeleton of the computation graph is disconnected")
    return tuple(tree)


def spanning_tree_cycle_load(dag: ComputationDag, tree: Optional[Iterable] = None) -> SpanningTreeInfo:
    if tree is None:
        tree = bfs_tree(dag)
    tree = tuple(tree)
    tset = set(tree)
    if len(tset) != len(dag.nodes) - 1 or not tset <= set(dag.edge):
        raise ValueError("tree must contain exactly |V|-1 DAG edges")
    # root the tree and keep parent pointers
    tadj = {v: [] for v in dag.nodes}
    for eid in tree:
        e = dag.edge[eid]
        tadj[e.tail].append((e.head, eid))
        tadj[e.head].append((e.tail, eid))
    root = dag.sink
    parent = {root: (None, None)}
    depth = {root: 0}
    q = deque([root])
    while q:
        u = q.popleft()
        for v, eid in tadj[u]:
            if v not in parent:
                parent[v] = (u, eid)
                depth[v] = depth[u] + 1
                q.append(v)
    if len(parent) != len(dag.nodes):
        raise ValueError("given edge set is not a spanning tree")
    counts = {eid: 0 for eid in tree}
    cycles = {}
    for e in dag.edges:
        if e.id in tset:
            continue
        a, b = e.tail, e.head
        path = []
        while a != b:
            if depth[a] >= depth[b]:
                a, eid = parent[a]
            else:
                b, eid = parent[b]
            path.append(eid)
        cycles[e.id] = path
        for eid in path:
            counts[eid] += 1
    return SpanningTreeInfo(tree, counts, cycles, max(counts.values(), default=0))
