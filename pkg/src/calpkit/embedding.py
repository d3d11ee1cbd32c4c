"""Embeddings of a computation DAG into a network, their validation and costs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .graphs import ComputationDag, DistanceMatrix, NetworkGraph, ValidationReport, all_pairs_shortest


def _as_path(p) -> tuple:
    if isinstance(p, str):
        return (p,)
    return tuple(p)


class Embedding:
    """Map from DAG edge id to a non-empty tuple of network paths."""

    def __init__(self, paths: Mapping):
        self.paths = {g: tuple(_as_path(p) for p in ps) for g, ps in paths.items()}

    def key(self) -> tuple:
        return tuple(sorted((g, tuple(sorted(ps))) for g, ps in self.paths.items()))

    def __eq__(self, other):
        return isinstance(other, Embedding) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    @property
    def is_restricted(self) -> bool:
        return all(len(ps) == 1 for ps in self.paths.values())

    def sites(self, dag: ComputationDag) -> dict:
        """Network nodes where each vertex's value is available at the start of
        its outgoing paths (computation sites; pinned position for sources)."""
        out = {}
        for v in dag.nodes:
            if v == dag.sink:
                out[v] = sorted({p[-1] for e in dag.in_edges[v] for p in self.paths.get(e.id, ())})
            else:
                out[v] = sorted({p[0] for e in dag.out_edges[v] for p in self.paths.get(e.id, ())})
        return out

    def to_json(self) -> dict:
        return {g: [list(p) for p in ps] for g, ps in self.paths.items()}

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()})"


class REmbedding(Embedding):
    """Restricted embedding: a single path per DAG edge."""

    def __init__(self, paths: Mapping):
        norm = {}
        for g, p in paths.items():
            if isinstance(p, (list, tuple)) and p and isinstance(p[0], (list, tuple)):
                if len(p) != 1:
                    raise ValueError(f"R-embedding edge {g} needs exactly one path")
                p = p[0]
            norm[g] = (_as_path(p),)
        super().__init__(norm)

    def path(self, g) -> tuple:
        return self.paths[g][0]

    def assignment(self, dag: ComputationDag) -> dict:
        mu = {}
        for e in dag.edges:
            p = self.path(e.id)
            mu.setdefault(e.tail, p[0])
            mu.setdefault(e.head, p[-1])
        return mu

    @classmethod
    def from_embedding(cls, emb: Embedding) -> "REmbedding":
        return cls({g: ps for g, ps in emb.paths.items()})


def _check_paths(net, dag, emb, rep) -> bool:
    fine = True
    for g in emb.paths:
        if g not in dag.edge:
            rep.add("unknown_edge", f"embedding maps unknown DAG edge {g}", g)
            fine = False
    for e in dag.edges:
        ps = emb.paths.get(e.id)
        if not ps:
            rep.add("missing_edge", f"DAG edge {e.id} has no path", e.id)
            fine = False
            continue
        for p in ps:
            if not p:
                rep.add("bad_path", f"empty path for {e.id}", e.id)
                fine = False
                continue
            if any(v not in net.index for v in p):
                rep.add("bad_path", f"path {p} of {e.id} visits an unknown node", (e.id, p))
                fine = False
                continue
            if len(set(p)) != len(p):
                rep.add("bad_path", f"path {p} of {e.id} repeats a node", (e.id, p))
                fine = False
            for a, b in zip(p, p[1:]):
                if not net.has_edge(a, b):
                    rep.add("bad_path", f"path {p} of {e.id} uses non-edge ({a}, {b})", (e.id, p))
                    fine = False
                    break
    return fine


def _check_pins(net, dag, emb, rep):
    for i, s in enumerate(dag.sources):
        if i >= len(net.sources):
            rep.add("source_count", "more DAG sources than network sources")
            break
        for e in dag.out_edges[s]:
            for p in emb.paths.get(e.id, ()):
                if p and p[0] != net.sources[i]:
                    rep.add("source_start", f"path {p} of {e.id} must start at {net.sources[i]}", (e.id, p))
    for e in dag.in_edges[dag.sink]:
        for p in emb.paths.get(e.id, ()):
            if p and p[-1] != net.sink:
                rep.add("sink_end", f"path {p} of {e.id} must end at {net.sink}", (e.id, p))


def validate_embedding(net: NetworkGraph, dag: ComputationDag, emb: Embedding) -> ValidationReport:
    """Check the five structural embedding properties.

    Matching of endpoints is checked in both directions: every path of an
    out-edge of v must find, for every in-edge of v, a path ending at its
    start; and every path of an in-edge must end where some out-edge path
    of v starts.  Paths of one DAG edge with distinct starts must be fully
    vertex-disjoint.
    """
    rep = ValidationReport()
    if not _check_paths(net, dag, emb, rep):
        return rep
    _check_pins(net, dag, emb, rep)
    for e in dag.edges:
        ends = {p[-1] for p in emb.paths[e.id]}
        outs = dag.out_edges[e.head]
        for s in outs:
            for p in emb.paths[s.id]:
                if p[0] not in ends:
                    rep.add("endpoint_mismatch",
                            f"path {p} of {s.id} starts at {p[0]} where {e.id} delivers nothing", (e.id, s.id, p))
        if outs:
            starts = {p[0] for s in outs for p in emb.paths[s.id]}
            for p in emb.paths[e.id]:
                if p[-1] not in starts:
                    rep.add("endpoint_unused",
                            f"path {p} of {e.id} ends at {p[-1]} where no successor starts", (e.id, p))
    for e in dag.edges:
        ps = emb.paths[e.id]
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                p, q = ps[i], ps[j]
                if p[-1] == q[-1]:
                    rep.add("shared_end", f"paths {p} and {q} of {e.id} share end {p[-1]}", (e.id, p, q))
                if p[0] != q[0] and set(p) & set(q):
                    rep.add("not_disjoint", f"paths {p} and {q} of {e.id} start apart but meet", (e.id, p, q))
    return rep


def validate_rembedding(net: NetworkGraph, dag: ComputationDag, remb: Embedding) -> ValidationReport:
    rep = ValidationReport()
    for e in dag.edges:
        ps = remb.paths.get(e.id, ())
        if len(ps) > 1:
            rep.add("multiple_paths", f"DAG edge {e.id} maps to {len(ps)} paths", e.id)
    if not rep.ok:
        return rep
    if not _check_paths(net, dag, remb, rep):
        return rep
    _check_pins(net, dag, remb, rep)
    for e in dag.edges:
        end = remb.paths[e.id][0][-1]
        for s in dag.out_edges[e.head]:
            start = remb.paths[s.id][0][0]
            if start != end:
                rep.add("endpoint_mismatch", f"{e.id} ends at {end} but {s.id} starts at {start}", (e.id, s.id))
    return rep


@dataclass
class Usage:
    per_function: dict   # function (vertex id) -> set of canonical network edges
    arcs: dict           # function -> set of directed (a, b) hops
    r: dict              # canonical edge -> sum of w(theta) over functions using it

    def r_theta(self, e, theta) -> int:
        return int(e in self.per_function.get(theta, ()))


def edge_usage(net: NetworkGraph, dag: ComputationDag, emb: Embedding) -> Usage:
    per_function = {}
    arcs = {}
    for e in dag.edges:
        used = per_function.setdefault(e.tail, set())
        hops = arcs.setdefault(e.tail, set())
        for p in emb.paths.get(e.id, ()):
            for a, b in zip(p, p[1:]):
                used.add(net.key(a, b))
                hops.add((a, b))
    r = {e: 0 for e in net.edges}
    for theta, used in per_function.items():
        w = dag.node_weight[theta]
        for e in used:
            r[e] += w
    return Usage(per_function, arcs, r)


def cost_C(net: NetworkGraph, dag: ComputationDag, emb: Embedding, prices: Optional[Mapping] = None):
    """Total price of the edges used, each counted once per function."""
    p = net.prices(prices)
    use = edge_usage(net, dag, emb)
    total = 0
    for e, r in use.r.items():
        if r:
            total += r * p[e]
    return total


def cost_CC(net: NetworkGraph, dag: ComputationDag, remb: Embedding, prices: Optional[Mapping] = None):
    """Price of every DAG edge's path, weighted by that edge's weight."""
    p = net.prices(prices)
    total = 0
    for e in dag.edges:
        w = dag.edge_weight(e)
        for path in remb.paths[e.id]:
            for a, b in zip(path, path[1:]):
                total += w * p[net.key(a, b)]
    return total


def check_assignment(net: NetworkGraph, dag: ComputationDag, mu: Mapping):
    for i, s in enumerate(dag.sources):
        if mu.get(s) != net.sources[i]:
            raise ValueError(f"assignment must pin source {s} to {net.sources[i]}")
    if mu.get(dag.sink) != net.sink:
        raise ValueError(f"assignment must pin sink {dag.sink} to {net.sink}")
    for v in dag.nodes:
        if mu.get(v) not in net.index:
            raise ValueError(f"vertex {v} is not assigned to a network node")


def pinned(net: NetworkGraph, dag: ComputationDag) -> dict:
    mu = {s: net.sources[i] for i, s in enumerate(dag.sources)}
    mu[dag.sink] = net.sink
    return mu


def assignment_to_rembedding(net: NetworkGraph, dag: ComputationDag, mu: Mapping,
                             prices: Optional[Mapping] = None,
                             dist: Optional[DistanceMatrix] = None) -> REmbedding:
    """Route every DAG edge on a shortest path between its endpoints' images."""
    check_assignment(net, dag, mu)
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    return REmbedding({e.id: dist.path(mu[e.tail], mu[e.head]) for e in dag.edges})
