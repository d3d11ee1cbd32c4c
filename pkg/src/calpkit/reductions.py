"""MAX-CUT hardness gadgets: instance construction, cut/embedding conversion,
canonical single-site embeddings and exhaustive gadget certification."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .embedding import Embedding, REmbedding, assignment_to_rembedding, cost_C, pinned
from .graphs import ComputationDag, DagEdge, NetworkGraph
from .twonode import prune_placement

S1, S2, T = "S1", "S2", "t"
SINK = "omega"
NODES = (S1, S2, T)
SOURCE_WEIGHT = 4
SPLIT_COST, SAME_COST = 27, 28

# per H-edge gadget: 8 sources (name, network node, target) and the weighted
# edges among x, y, a, b, c, d and the sink
_SOURCES = [("S1x", S1, "x"), ("S2x", S2, "x"), ("S1y", S1, "y"), ("S2y", S2, "y"),
            ("S1a", S1, "a"), ("S2c", S2, "c"), ("S2b", S2, "b"), ("S1d", S1, "d")]
_INNER = [("x", "a", 1), ("x", "c", 1), ("y", "b", 1), ("y", "d", 1), ("a", "b", 1), ("d", "c", 1),
          ("a", SINK, 4), ("b", SINK, 4), ("c", SINK, 4), ("d", SINK, 4)]


@dataclass
class MaxCutInstance:
    dag: ComputationDag
    net: NetworkGraph
    vertices: list                  # H vertices
    edges: list                     # H edges (x, y)
    gadgets: list                   # per H edge: role -> DAG vertex id
    parent: dict = field(default_factory=dict)   # primed copy -> vertex it splits

    @property
    def m(self) -> int:
        return len(self.edges)

    def hv(self, x) -> str:
        return f"H_{x}"


def _check_cubic(edges, require_cubic):
    seen = set()
    for x, y in edges:
        if x == y:
            raise ValueError(f"self-loop at {x}")
        key = frozenset((x, y))
        if key in seen:
            raise ValueError(f"parallel edge {x}-{y}")
        seen.add(key)
    deg = Counter(v for e in edges for v in e)
    if require_cubic:
        bad = sorted(str(v) for v, d in deg.items() if d != 3)
        if bad:
            raise ValueError(f"graph is not cubic: vertices {bad} do not have degree 3")


def build_maxcut_instance(H_edges: Iterable, require_cubic: bool = True) -> MaxCutInstance:
    """Network K3 {S1, S2, t} with unit prices and one diamond gadget per H edge;
    vertices with several out-edges are split through primed copies."""
    edges = [(str(x), str(y)) for x, y in H_edges]
    _check_cubic(edges, require_cubic)
    vertices = sorted({v for e in edges for v in e})
    raw = []                         # (tail, head, weight of that edge in the undivided graph)
    sources, positions, gadgets = [], [], []
    for i, (x, y) in enumerate(edges):
        role = {"x": f"H_{x}", "y": f"H_{y}", SINK: SINK}
        for r in "abcd":
            role[r] = f"{r}{i}"
        for name, node, target in _SOURCES:
            sid = f"{name}{i}"
            role[name] = sid
            sources.append(sid)
            positions.append(node)
            raw.append((sid, role[target], SOURCE_WEIGHT))
        for u, v, w in _INNER:
            raw.append((role[u], role[v], w))
        gadgets.append(role)
    out = {}
    for u, v, w in raw:
        out.setdefault(u, []).append((v, w))
    weight = {s: SOURCE_WEIGHT for s in sources}
    dag_edges, parent = [], {}
    for u, targets in out.items():
        if len(targets) == 1:
            v, w = targets[0]
            weight[u] = w
            dag_edges.append((u, v))
            continue
        h = len(targets)
        weight[u] = h * max(w for _, w in targets) + 1
        for v, w in targets:
            p = f"{u}>{v}"
            parent[p] = u
            weight[p] = w
            dag_edges += [(u, p), (p, v)]
    nodes = list(sources) + [f"H_{x}" for x in vertices]
    nodes += [g[r] for g in gadgets for r in "abcd"] + sorted(parent) + [SINK]
    dag = ComputationDag(nodes, [DagEdge(f"{u}->{v}", u, v) for u, v in dag_edges], sources, SINK, weight)
    net = NetworkGraph(list(NODES), [(S1, S2, 1, 1), (S1, T, 1, 1), (S2, T, 1, 1)], positions, T)
    return MaxCutInstance(dag, net, vertices, edges, gadgets, parent)


# ------------------------------------------------------------ placements ----

def _templates(x_side, y_side):
    """a, b, c, d images for the standard gadget placements."""
    if (x_side, y_side) == (S1, S2):
        return {"a": S1, "b": S2, "c": T, "d": T}
    if (x_side, y_side) == (S2, S1):
        return {"a": T, "b": T, "c": S2, "d": S1}
    if x_side == y_side == S1:
        return {"a": S1, "b": S2, "c": T, "d": T}
    if x_side == y_side == S2:
        return {"a": T, "b": T, "c": S2, "d": S1}
    raise ValueError("templates need x and y on S1 or S2")


def _complete(inst: MaxCutInstance, mu: dict) -> dict:
    """Pin sources and sink, put primed copies with their parents."""
    full = dict(mu)
    for s, node in zip(inst.dag.sources, inst.net.sources):
        full[s] = node
    full[SINK] = T
    for p, u in inst.parent.items():
        full[p] = full[u]
    return full


def maxcut_to_embedding(cut: Iterable, inst: MaxCutInstance):
    """V1 to S1, the rest to S2; each gadget placed by its split or same-side template."""
    V1 = {str(v) for v in cut}
    unknown = V1 - set(inst.vertices)
    if unknown:
        raise ValueError(f"cut mentions unknown vertices {sorted(unknown)}")
    mu = {inst.hv(v): (S1 if v in V1 else S2) for v in inst.vertices}
    for (x, y), g in zip(inst.edges, inst.gadgets):
        for r, node in _templates(mu[g["x"]], mu[g["y"]]).items():
            mu[g[r]] = node
    mu = _complete(inst, mu)
    remb = assignment_to_rembedding(inst.net, inst.dag, mu)
    return remb, cost_C(inst.net, inst.dag, remb)


def embedding_from_sites(inst: MaxCutInstance, place: Mapping) -> Embedding:
    """General embedding computing each vertex at every node of its site set;
    copies nobody reads locally are dropped first."""
    full = {v: {p} for v, p in pinned(inst.net, inst.dag).items()}
    full.update({v: set(s) for v, s in place.items() if v not in full})
    full = prune_placement(inst.dag, full)
    paths = {}
    for e in inst.dag.edges:
        src = sorted(full[e.tail])
        paths[e.id] = [(h,) if h in src else (src[0], h) for h in sorted(full[e.head])]
    return Embedding(paths)


def cut_size(edges, V1) -> int:
    V1 = set(V1)
    return sum(1 for x, y in edges if (x in V1) != (y in V1))


def brute_force_maxcut(vertices, edges):
    """(size, V1) of a maximum cut; the first vertex is kept in V1."""
    vertices = list(vertices)
    best = (-1, None)
    if not vertices:
        return 0, set()
    for bits in range(1 << (len(vertices) - 1)):
        V1 = {vertices[0]} | {v for i, v in enumerate(vertices[1:]) if bits >> i & 1}
        k = cut_size(edges, V1)
        if k > best[0]:
            best = (k, V1)
    return best


# ------------------------------------------------------- canonical forms ----

def placement_cost(inst: MaxCutInstance, place: Mapping) -> int:
    """Lower bound on the per-function cost of any embedding with these sites:
    each function pays its weight for every needed node where it is absent."""
    dag = inst.dag
    total = 0
    for u in dag.functions:
        need = set()
        for e in dag.out_edges[u]:
            need |= place[e.head]
        total += dag.node_weight[u] * len(need - place[u])
    return total


def _single_cost(inst, mu):
    return placement_cost(inst, {v: {p} for v, p in mu.items()})


_PREFER = {"a": (S1, T, S2), "d": (S1, T, S2)}


def _rule_choice(inst, sites):
    """Single site per vertex following the case rules: a and d keep their
    source side else t; H vertices prefer S1, then S2; copies follow parents."""
    role_of = {}
    for g in inst.gadgets:
        for r in "abcd":
            role_of[g[r]] = r
    mu = {}
    for v, here in sites.items():
        if v in inst.parent:
            continue
        order = _PREFER.get(role_of.get(v), (S1, S2, T))
        mu[v] = next(p for p in order if p in here) if here else T
    return _complete(inst, mu)


def _improve(inst, mu):
    """Single-vertex moves plus re-attaching primed copies, until no gain."""
    free = [v for v in inst.dag.free_vertices]
    cost = _single_cost(inst, mu)
    changed = True
    while changed:
        changed = False
        for v in free:
            keep = mu[v]
            for p in NODES:
                if p == keep:
                    continue
                mu[v] = p
                c = _single_cost(inst, mu)
                if c < cost:
                    cost, keep, changed = c, p, True
            mu[v] = keep
        trial = _complete(inst, {v: mu[v] for v in free if v not in inst.parent})
        c = _single_cost(inst, trial)
        if c < cost:
            mu, cost, changed = trial, c, True
    return mu, cost


def canonicalize_embedding(emb: Embedding, inst: MaxCutInstance):
    """Single site per vertex with copies beside their parents; returns
    (REmbedding, cost) with cost never above cost_C(emb)."""
    before = cost_C(inst.net, inst.dag, emb)
    sites = {v: set(s) for v, s in emb.sites(inst.dag).items()}
    for s, node in zip(inst.dag.sources, inst.net.sources):
        sites[s] = {node}
    sites[SINK] = {T}
    mu, cost = _improve(inst, _rule_choice(inst, sites))
    remb = assignment_to_rembedding(inst.net, inst.dag, mu)
    after = cost_C(inst.net, inst.dag, remb)
    if after > before:
        raise RuntimeError(f"no canonical form found below cost {before} (best {after})")
    return remb, after


def embedding_to_maxcut(emb: Embedding, inst: MaxCutInstance):
    """Cut read off a canonical form: H vertices at S2 form V2, the rest
    (S1 or the sink node) form V1. Returns (V1, V2, crossing count)."""
    remb, _ = canonicalize_embedding(emb, inst)
    mu = remb.assignment(inst.dag)
    V1 = {x for x in inst.vertices if mu[inst.hv(x)] != S2}
    V2 = set(inst.vertices) - V1
    return V1, V2, cut_size(inst.edges, V1)


def certify_cost_bound(inst: MaxCutInstance, cost) -> dict:
    """An embedding of this cost would imply a cut of size 28|E_H| - cost."""
    implied = SAME_COST * inst.m - cost
    best, _ = brute_force_maxcut(inst.vertices, inst.edges)
    return {"cost": cost, "implied_cut": implied, "max_cut": best, "consistent": implied <= best}


# ------------------------------------------------------- certification ----

def _collapsed(inst: MaxCutInstance, i: int) -> list:
    """Weighted edges of gadget i with primed copies folded into their parents."""
    g = inst.gadgets[i]
    members = set(g.values())
    out = []
    for e in inst.dag.edges:
        u, v = e.tail, e.head
        if u in inst.parent:
            u = inst.parent[u]
            if u not in members or v not in members:
                continue
            out.append((u, v, inst.dag.node_weight[e.tail]))
        elif v not in inst.parent and u in members and v in members:
            out.append((u, v, inst.dag.node_weight[u]))
    return out


def gadget_cost(inst: MaxCutInstance, i: int, mu: Mapping) -> int:
    """Cost contributed by gadget i under a canonical placement."""
    full = dict(mu)
    for s, node in zip(inst.dag.sources, inst.net.sources):
        full[s] = node
    full[SINK] = T
    return sum(w for u, v, w in _collapsed(inst, i) if full[u] != full[v])


def certify_gadget(inst: Optional[MaxCutInstance] = None) -> dict:
    """Exhaustive search over the 3^6 canonical placements of x, y, a, b, c, d
    in one gadget, grouped by where x and y sit."""
    inst = inst or build_maxcut_instance([("x", "y")], require_cubic=False)
    g = inst.gadgets[0]
    roles = ["x", "y", "a", "b", "c", "d"]
    by_class = {}
    for combo in itertools.product(NODES, repeat=6):
        mu = {g[r]: p for r, p in zip(roles, combo)}
        c = gadget_cost(inst, 0, mu)
        key = (combo[0], combo[1])
        if key not in by_class or c < by_class[key]:
            by_class[key] = c
    split = [by_class[(S1, S2)], by_class[(S2, S1)]]
    same = [by_class[(S1, S1)], by_class[(S2, S2)]]
    mixed = [c for (px, py), c in by_class.items() if (px, py) not in ((S1, S2), (S2, S1))]
    templates = {}
    for xs, ys in ((S1, S2), (S2, S1), (S1, S1), (S2, S2)):
        mu = {g["x"]: xs, g["y"]: ys}
        mu.update({g[r]: p for r, p in _templates(xs, ys).items()})
        templates[f"{xs}/{ys}"] = gadget_cost(inst, 0, mu)
    return {
        "class_minimum": {f"{px}/{py}": c for (px, py), c in sorted(by_class.items())},
        "split_min": min(split),
        "same_side_min": min(same),
        "non_split_min": min(mixed),
        "templates": templates,
        "ok": (min(split) == SPLIT_COST and min(same) == SAME_COST and min(mixed) > SPLIT_COST
               and templates[f"{S1}/{S1}"] == SAME_COST and templates[f"{S2}/{S2}"] == SAME_COST
               and templates[f"{S1}/{S2}"] == SPLIT_COST and templates[f"{S2}/{S1}"] == SPLIT_COST),
    }


def canonical_minimum(inst: MaxCutInstance):
    """Minimum cost over canonical placements: H vertices anywhere, each gadget's
    a, b, c, d chosen optimally for the given x and y. Returns (cost, H placement)."""
    tables = []
    for i, g in enumerate(inst.gadgets):
        table = {}
        for xs, ys in itertools.product(NODES, repeat=2):
            best = None
            for combo in itertools.product(NODES, repeat=4):
                mu = {g["x"]: xs, g["y"]: ys}
                mu.update({g[r]: p for r, p in zip("abcd", combo)})
                c = gadget_cost(inst, i, mu)
                best = c if best is None else min(best, c)
            table[(xs, ys)] = best
        tables.append(table)
    best = None
    for combo in itertools.product(NODES, repeat=len(inst.vertices)):
        side = dict(zip(inst.vertices, combo))
        c = sum(t[(side[x], side[y])] for t, (x, y) in zip(tables, inst.edges))
        if best is None or c < best[0]:
            best = (c, side)
    return best


def certification_report(inst: MaxCutInstance) -> dict:
    maxcut, V1 = brute_force_maxcut(inst.vertices, inst.edges)
    canon, _ = canonical_minimum(inst)
    remb, cost = maxcut_to_embedding(V1, inst)
    return {
        "H_vertices": len(inst.vertices), "H_edges": inst.m,
        "dag_vertices": len(inst.dag.nodes), "dag_sources": len(inst.dag.sources),
        "sink_in_degree": len(inst.dag.in_edges[SINK]),
        "max_edge_weight": max(inst.dag.edge_weight(e) for e in inst.dag.edges),
        "max_cut": maxcut, "embedding_cost_of_max_cut": cost,
        "canonical_minimum": canon, "expected": SAME_COST * inst.m - maxcut,
        "gadget": certify_gadget(),
        "ok": canon == cost == SAME_COST * inst.m - maxcut,
    }
