"""Conversion between rate solutions and explicit routing-computing schedules."""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .calp import RateSolution
from .embedding import Embedding, REmbedding, edge_usage, pinned, validate_embedding, validate_rembedding
from .graphs import ComputationDag, NetworkGraph, ValidationReport

DEFAULT_EPS = 1e-2
MAX_DENOMINATOR = 10 ** 6


@dataclass(frozen=True)
class Compute:
    node: str
    theta: str
    k: int = 0

    def as_dict(self) -> dict:
        return {"type": "compute", "node": self.node, "theta": self.theta, "k": self.k}


@dataclass(frozen=True)
class Communicate:
    edge: tuple        # directed (u, v)
    theta: str
    k: int = 0

    def as_dict(self) -> dict:
        return {"type": "communicate", "edge": list(self.edge), "theta": self.theta, "k": self.k}


@dataclass
class ScheduleTrace:
    K: int
    events: list
    N: dict = field(default_factory=dict)       # canonical network edge -> bits sent
    d: int = 1
    columns: list = field(default_factory=list)  # [(Embedding, rational flow)] in emission order

    @property
    def L(self) -> int:
        return len(self.events)

    def counters(self) -> Counter:
        """Initial m counters: how often each (node, symbol, function) is used or sent."""
        return _counters(self.events, None)

    def to_jsonl(self) -> str:
        header = {"type": "header", "K": self.K, "L": self.L, "d": self.d,
                  "N": [[u, v, _num(b)] for (u, v), b in self.N.items()]}
        lines = [json.dumps(header, sort_keys=True)]
        lines += [json.dumps(e.as_dict(), sort_keys=True) for e in self.events]
        return "\n".join(lines) + "\n"


def _num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    return x


def _counters(events, dag: Optional[ComputationDag]) -> Counter:
    m = Counter()
    for ev in events:
        if isinstance(ev, Communicate):
            m[(ev.edge[0], ev.k, ev.theta)] += 1
        elif dag is not None and ev.theta in dag.node_weight:
            for eta in dag.pred(ev.theta):
                m[(ev.node, ev.k, eta)] += 1
    return m


def trace_from_jsonl(text: str) -> ScheduleTrace:
    K, d, N, events = None, 1, {}, []
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            kind = obj["type"]
            if kind == "header":
                K = int(obj["K"])
                d = int(obj.get("d", 1))
                N = {(u, v): Fraction(b) if isinstance(b, str) else b for u, v, b in obj.get("N", [])}
            elif kind == "compute":
                events.append(Compute(obj["node"], obj["theta"], int(obj["k"])))
            elif kind == "communicate":
                u, v = obj["edge"]
                events.append(Communicate((u, v), obj["theta"], int(obj["k"])))
            else:
                raise ValueError(f"unknown event type {kind!r}")
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ValueError(f"trace line {i + 1}: {exc}") from exc
    if K is None:
        raise ValueError("trace has no header line")
    return ScheduleTrace(K, events, N, d)


# --------------------------------------------------------- rationalising ----

def _fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _feasible(net, dag, columns, flows) -> bool:
    load = defaultdict(Fraction)
    for emb, x in zip(columns, flows):
        if x:
            for e, r in edge_usage(net, dag, emb).r.items():
                load[e] += _fraction(r) * x
    return all(load[e] <= _fraction(net.capacity[e]) for e in load)


def _grid(flows):
    d = 1
    for x in flows:
        d = d * x.denominator // math.gcd(d, x.denominator)
    return flows, d, int(d * sum(flows, Fraction(0)))


def rationalize_flows(sol: RateSolution, eps: float = DEFAULT_EPS, net: Optional[NetworkGraph] = None,
                      dag: Optional[ComputationDag] = None):
    """Snap flows down to the coarsest grid 1/q losing at most eps in total.

    Returns (flows, d, K) with flows as Fractions in column order. When net
    and dag are given the snapped flows must also fit the capacities exactly.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    flows = [x for _, x in sol.columns]
    cols = [emb for emb, _ in sol.columns]
    if all(isinstance(x, (int, Fraction)) for x in flows):
        exact = [Fraction(x) for x in flows]
        if net is None or _feasible(net, dag, cols, exact):
            return _grid(exact)
    total = sum(float(x) for x in flows)
    for q in range(1, MAX_DENOMINATOR + 1):
        snapped = [Fraction(math.floor(float(x) * q + 1e-9), q) for x in flows]
        if float(sum(snapped)) < total - eps:
            continue
        if net is None or _feasible(net, dag, cols, snapped):
            return _grid(snapped)
    raise ValueError("no rational flows within eps fit the capacities")


# ------------------------------------------------------------- ordering ----

def _sites(net, dag, emb):
    pins = pinned(net, dag)
    sites = {}
    for v in dag.functions:
        if v in dag.sources:
            sites[v] = [pins[v]]
        else:
            sites[v] = sorted({p[0] for e in dag.out_edges[v] for p in emb.paths.get(e.id, ())},
                              key=net.index.__getitem__)
    return sites


def _ordered_arcs(net, theta, arcs):
    """Arcs sorted so that every node has received theta before it forwards it."""
    arcs = sorted(arcs, key=lambda a: (net.index[a[0]], net.index[a[1]]))
    seen = set()
    for a, b in arcs:
        if (b, a) in seen:
            raise ValueError(f"function {theta} crosses edge {net.key(a, b)} in both directions")
        seen.add((a, b))
    indeg = Counter(b for _, b in arcs)
    out = defaultdict(list)
    for a, b in arcs:
        out[a].append((a, b))
    # a site that also receives theta waits for it, so no copy arrives after its last use
    ready = sorted({a for a, _ in arcs if indeg[a] == 0}, key=net.index.__getitem__)
    order, done = [], set()
    i = 0
    while i < len(ready):
        a = ready[i]
        i += 1
        if a in done:
            continue
        done.add(a)
        for arc in out[a]:
            order.append(arc)
            indeg[arc[1]] -= 1
            if indeg[arc[1]] == 0:
                ready.append(arc[1])
    if len(order) != len(arcs):
        raise ValueError(f"arcs of function {theta} contain a directed cycle")
    return order


def embedding_order(net: NetworkGraph, dag: ComputationDag, emb: Embedding) -> list:
    """One symbol's events: functions in topological order, each computed at
    its sites and then forwarded along its arcs."""
    use = edge_usage(net, dag, emb)
    sites = _sites(net, dag, emb)
    events = []
    for v in dag.topological_order():
        if v == dag.sink:
            continue
        if v not in dag.sources:
            events.extend(Compute(u, v) for u in sites[v])
        for arc in _ordered_arcs(net, v, use.arcs.get(v, ())):
            events.append(Communicate(arc, v))
    return events


# ------------------------------------------------------------- building ----

def build_schedule(net: NetworkGraph, dag: ComputationDag, sol: RateSolution, eps: float = DEFAULT_EPS) -> ScheduleTrace:
    for emb, _ in sol.columns:
        rep = validate_rembedding(net, dag, emb) if emb.is_restricted else validate_embedding(net, dag, emb)
        if not rep.ok:
            raise ValueError(f"invalid column: {rep.violations[0].message}")
    flows, d, K = rationalize_flows(sol, eps, net, dag)
    order = sorted(range(len(flows)), key=lambda i: (-float(sol.columns[i][1]), i))
    events, columns = [], []
    N = {e: 0 for e in net.edges}
    k = 0
    for i in order:
        emb = sol.columns[i][0]
        count = int(d * flows[i])
        if count == 0:
            continue
        columns.append((emb, flows[i]))
        template = embedding_order(net, dag, emb)
        for _ in range(count):
            k += 1
            for ev in template:
                if isinstance(ev, Compute):
                    events.append(Compute(ev.node, ev.theta, k))
                else:
                    events.append(Communicate(ev.edge, ev.theta, k))
                    N[net.key(*ev.edge)] += dag.node_weight[ev.theta]
    return ScheduleTrace(K, events, {e: b for e, b in N.items() if b}, d, columns)


# ----------------------------------------------------------- validation ----

def achieved_rate(net: NetworkGraph, K: int, N: dict):
    """Largest lambda with N_e * lambda <= K * c(e) on every edge."""
    if K == 0:
        return 0
    best = math.inf
    for e, bits in N.items():
        if bits:
            cap = net.capacity[e]
            val = (Fraction(K) * _fraction(cap) / _fraction(bits)) if not isinstance(cap, float) \
                else K * cap / float(bits)
            best = min(best, val)
    return best


def validate_schedule(net: NetworkGraph, dag: ComputationDag, trace: ScheduleTrace):
    """Replay the trace against the state-set rules.

    Returns (ValidationReport, lambda). Counters are the use counts found in
    the trace; an item is dropped from a node once its counter for that symbol
    reaches zero, except the sink's final inputs at the sink node.
    """
    rep = ValidationReport()
    K = trace.K
    pins = pinned(net, dag)
    finals = set(dag.pred(dag.sink))
    t = net.sink
    state = {u: set() for u in net.nodes}
    for s in dag.sources:
        state[pins[s]].update((s, k) for k in range(1, K + 1))
    m = _counters(trace.events, dag)
    N = defaultdict(int)

    def collect(u, k):
        drop = {(g, kk) for g, kk in state[u] if kk == k and m[(u, k, g)] <= 0}
        if u == t:
            drop = {item for item in drop if item[0] not in finals}
        state[u] -= drop

    for i, ev in enumerate(trace.events):
        if not (isinstance(ev.k, int) and 1 <= ev.k <= K):
            rep.add("bad_symbol", f"event {i}: symbol {ev.k} outside 1..{K}", i)
            continue
        if ev.theta not in dag.node_weight or ev.theta == dag.sink:
            rep.add("unknown_function", f"event {i}: {ev.theta!r} is not a function", i)
            continue
        if isinstance(ev, Compute):
            u = ev.node
            if u not in net.index:
                rep.add("unknown_node", f"event {i}: unknown node {u!r}", i)
                continue
            if ev.theta in dag.sources:
                rep.add("computes_source", f"event {i}: source function {ev.theta} cannot be computed", i)
                continue
            missing = [eta for eta in dag.pred(ev.theta) if (eta, ev.k) not in state[u]]
            if missing:
                rep.add("missing_input", f"event {i}: {u} lacks {missing} for symbol {ev.k}", i)
                continue
            for eta in dag.pred(ev.theta):
                m[(u, ev.k, eta)] -= 1
            collect(u, ev.k)
            state[u].add((ev.theta, ev.k))
        else:
            u, v = ev.edge
            if not net.has_edge(u, v):
                rep.add("unknown_edge", f"event {i}: ({u}, {v}) is not a network edge", i)
                continue
            if (ev.theta, ev.k) not in state[u]:
                rep.add("missing_payload", f"event {i}: {u} does not hold {ev.theta} symbol {ev.k}", i)
                continue
            m[(u, ev.k, ev.theta)] -= 1
            collect(u, ev.k)
            state[v].add((ev.theta, ev.k))
            N[net.key(u, v)] += dag.node_weight[ev.theta]
    if rep.ok:
        want = {(f, k) for f in finals for k in range(1, K + 1)}
        if state[t] != want:
            extra = sorted(state[t] - want)[:5]
            lack = sorted(want - state[t])[:5]
            rep.add("final_sink", f"sink state differs: extra {extra}, missing {lack}", t)
        for u in net.nodes:
            if u != t and state[u]:
                rep.add("final_residue", f"node {u} still holds {sorted(state[u])[:5]}", u)
        left = [key for key, c in m.items() if c != 0]
        if left:
            rep.add("counters", f"counters not zero: {left[:5]}", left[:5])
    for e, bits in trace.N.items():
        if N.get(e, 0) != bits:
            rep.add("declared_bits", f"edge {e}: header says {bits}, replay gives {N.get(e, 0)}", e)
    lam = achieved_rate(net, K, N) if rep.ok else 0
    return rep, lam


# ------------------------------------------------------------- recovery ----

def _symbol_embedding(net, dag, events):
    sites = defaultdict(list)
    arcs = defaultdict(list)
    pins = pinned(net, dag)
    for s in dag.sources:
        sites[s].append(pins[s])
    for ev in events:
        if isinstance(ev, Compute):
            if ev.node not in sites[ev.theta]:
                sites[ev.theta].append(ev.node)
        else:
            arcs[ev.theta].append(tuple(ev.edge))
    paths = {}
    for e in dag.edges:
        ends = [net.sink] if e.head == dag.sink else sites[e.head]
        found = []
        for z in sorted(ends, key=net.index.__getitem__):
            path = [z]
            while path[-1] not in sites[e.tail]:
                into = [a for a, b in arcs[e.tail] if b == path[-1]]
                if not into or into[0] in path:
                    raise ValueError(f"cannot trace {e.tail} back from {z}")
                path.append(into[0])
            found.append(tuple(reversed(path)))
        paths[e.id] = found
    if all(len(ps) == 1 for ps in paths.values()):
        return REmbedding({g: ps[0] for g, ps in paths.items()})
    return Embedding(paths)


def schedule_to_flows(net: NetworkGraph, dag: ComputationDag, trace: ScheduleTrace) -> RateSolution:
    """Per-symbol embeddings weighted by their share of the achieved rate."""
    rep, lam = validate_schedule(net, dag, trace)
    if not rep.ok:
        raise ValueError(f"invalid schedule: {rep.violations[0].message}")
    if trace.K == 0:
        return RateSolution([], 0.0, {}, status="approx", alpha=None)
    per_symbol = defaultdict(list)
    for ev in trace.events:
        per_symbol[ev.k].append(ev)
    counts, first = Counter(), {}
    for k in range(1, trace.K + 1):
        emb = _symbol_embedding(net, dag, per_symbol[k])
        key = emb.key()
        counts[key] += 1
        first.setdefault(key, emb)
    lam_f = float(lam)
    columns = [(first[key], lam_f * c / trace.K) for key, c in counts.items()]
    return RateSolution(columns, lam_f, {}, status="approx", alpha=None,
                        notes=["recovered from a schedule"], pool=[e for e, _ in columns])
