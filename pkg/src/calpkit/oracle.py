"""Exhaustive exact minimum-cost solvers used as ground truth and for pricing."""

from __future__ import annotations

import itertools
import math
import os
from fractions import Fraction
from typing import Iterator, Mapping, Optional

import numpy as np

from .embedding import REmbedding, assignment_to_rembedding, cost_C, cost_CC, pinned
from .graphs import ComputationDag, DistanceMatrix, NetworkGraph, all_pairs_shortest

DEFAULT_BUDGET = 24
_BLOCK = 1 << 16


class BudgetExceeded(RuntimeError):
    pass


def budget(kind: str = "cc") -> float:
    """Enumeration budget in bits: |free vertices| * log2(n) must not exceed it."""
    base = float(os.environ.get("CALPKIT_BUDGET", DEFAULT_BUDGET))
    return base if kind == "cc" else base * 2 / 3


def _check_budget(k: int, n: int, kind: str):
    bits = k * math.log2(n) if n > 1 else 0.0
    if bits > budget(kind) + 1e-9:
        raise BudgetExceeded(
            f"{k} free vertices on {n} nodes needs {bits:.1f} bits of enumeration "
            f"(budget {budget(kind):.0f}); use an approximate solver or raise CALPKIT_BUDGET")


def integerize(values):
    """Scale exact numbers to integers: returns (ints, scale) or (None, None)
    when a float or infinity is present."""
    den = 1
    for v in values:
        if isinstance(v, float) or isinstance(v, np.floating):
            return None, None
        if isinstance(v, Fraction):
            den = den * v.denominator // math.gcd(den, v.denominator)
    return [int(v * den) for v in values], den


def distance_array(dist: DistanceMatrix):
    """Distances as a numpy array plus a scale making it exact when possible."""
    flat = [x for row in dist.matrix() for x in row]
    n = dist.net.n
    ints, scale = integerize(flat) if all(not math.isinf(x) for x in flat) else (None, None)
    if ints is None:
        return np.array(flat, dtype=float).reshape(n, n), None
    return np.array(ints, dtype=np.int64).reshape(n, n), scale


def mincost_cc_exact(net: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None,
                     dist: Optional[DistanceMatrix] = None):
    """Minimum per-DAG-edge cost over all vertex assignments.

    Assignments are scanned in mixed-radix order over the topologically
    ordered free vertices; the first optimum wins.
    """
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    free = dag.free_vertices
    n, k = net.n, len(free)
    _check_budget(k, n, "cc")
    pins = pinned(net, dag)
    D, _ = distance_array(dist)
    weights = [dag.edge_weight(e) for e in dag.edges]
    wints, _ = integerize(weights)
    if wints is None or D.dtype != np.int64:
        W = np.array([float(w) for w in weights])
        D = D.astype(float)
    else:
        W = np.array(wints, dtype=np.int64)
    slot = {v: j for j, v in enumerate(free)}
    terms = []
    for e in dag.edges:
        a = ("free", slot[e.tail]) if e.tail in slot else ("fixed", net.index[pins[e.tail]])
        b = ("free", slot[e.head]) if e.head in slot else ("fixed", net.index[pins[e.head]])
        terms.append((a, b))
    total = n ** k
    best_val, best_idx = None, None
    for lo in range(0, total, _BLOCK):
        hi = min(total, lo + _BLOCK)
        idx = np.arange(lo, hi)
        digits = np.unravel_index(idx, (n,) * k) if k else ()
        cost = np.zeros(hi - lo, dtype=D.dtype)
        for w, (a, b), in zip(W, terms):
            ia = digits[a[1]] if a[0] == "free" else a[1]
            ib = digits[b[1]] if b[0] == "free" else b[1]
            cost = cost + w * D[ia, ib]
        j = int(np.argmin(cost))
        if best_val is None or cost[j] < best_val:
            best_val, best_idx = cost[j], lo + j
    if best_val is None or (isinstance(best_val, (float, np.floating)) and math.isinf(best_val)):
        raise ValueError("no assignment connects all mapped pairs")
    digits = np.unravel_index(best_idx, (n,) * k) if k else ()
    mu = dict(pins)
    for j, v in enumerate(free):
        mu[v] = net.nodes[int(digits[j])]
    remb = assignment_to_rembedding(net, dag, mu, dist=dist)
    return remb, cost_CC(net, dag, remb, dist.prices)


def _dreyfus_wagner(dist: DistanceMatrix, root, terminals, value_only: bool = False):
    net = dist.net
    terms = [t for t in dict.fromkeys(terminals) if t != root]
    if not terms:
        return set(), 0
    if len(terms) > 8:
        raise BudgetExceeded("Steiner oracle supports at most 8 terminals")
    nodes = net.nodes
    n, k = len(nodes), len(terms)
    d = dist.matrix()
    full = (1 << k) - 1
    dp = [None] * (full + 1)
    arg = [None] * (full + 1)
    for i, t in enumerate(terms):
        dp[1 << i] = list(d[net.index[t]])
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        merge = [math.inf] * n
        split = [None] * n
        sub = (mask - 1) & mask
        while sub:
            rest = mask ^ sub
            if sub < rest:
                a, b = dp[sub], dp[rest]
                for v in range(n):
                    c = a[v] + b[v]
                    if c < merge[v]:
                        merge[v], split[v] = c, sub
            sub = (sub - 1) & mask
        row = [math.inf] * n
        back = [None] * n
        for v in range(n):
            for u in range(n):
                c = merge[u] + d[u][v]
                if c < row[v]:
                    row[v], back[v] = c, (u, split[u])
        dp[mask], arg[mask] = row, back
    r = net.index[root]
    if math.isinf(dp[full][r]):
        raise ValueError("terminals are not connected to the root")
    if value_only:
        return None, dp[full][r]

    edges = set()

    def add_path(a, b):
        p = dist.path(nodes[a], nodes[b])
        for x, y in zip(p, p[1:]):
            edges.add(net.key(x, y))

    def build(mask, v):
        if mask & (mask - 1) == 0:
            add_path(net.index[terms[mask.bit_length() - 1]], v)
            return
        u, sub = arg[mask][v]
        add_path(u, v)
        build(sub, u)
        build(mask ^ sub, u)

    build(full, r)
    return _prune_tree(net, edges, root, set(terms)), dp[full][r]


def _prune_tree(net, edges, root, terms):
    """Spanning tree of the edge union from root with non-terminal leaves removed."""
    adj = {}
    for u, v in sorted(edges, key=lambda e: (net.index[e[0]], net.index[e[1]])):
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    parent = {root: None}
    order = [root]
    for u in order:
        for v in sorted(adj.get(u, ()), key=net.index.__getitem__):
            if v not in parent:
                parent[v] = u
                order.append(v)
    keep = set()
    for v in reversed(order):
        if v in terms or v in keep:
            if parent[v] is not None:
                keep.add(parent[v])
            keep.add(v)
    return {net.key(v, parent[v]) for v in keep if parent[v] is not None}


def steiner_tree(net: NetworkGraph, root, terminals, prices: Optional[Mapping] = None,
                 dist: Optional[DistanceMatrix] = None):
    """Minimum-price tree containing root and terminals: returns (cost, edge set)."""
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    edges, _ = _dreyfus_wagner(dist, root, terminals)
    return sum((dist.prices[e] for e in edges), 0), edges


def steiner_cost(net: NetworkGraph, prices: Optional[Mapping], root, terminals):
    return steiner_tree(net, root, terminals, prices)[0]


def tree_paths(net: NetworkGraph, edges, root, targets) -> dict:
    """Unique tree path from root to every target."""
    adj = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    parent = {root: None}
    order = [root]
    for u in order:
        for v in adj.get(u, ()):
            if v not in parent:
                parent[v] = u
                order.append(v)
    out = {}
    for t in targets:
        p = [t]
        while p[-1] != root:
            p.append(parent[p[-1]])
        out[t] = tuple(reversed(p))
    return out


class SteinerCache:
    """Memoized per-function delivery trees under one price vector."""

    def __init__(self, net: NetworkGraph, dist: DistanceMatrix):
        self.net, self.dist = net, dist
        self._memo = {}
        self._value = {}

    def get(self, root, terminals):
        key = (root, frozenset(terminals) - {root})
        if key not in self._memo:
            edges, _ = _dreyfus_wagner(self.dist, root, key[1])
            cost = sum((self.dist.prices[e] for e in edges), 0)
            self._memo[key] = (cost, edges)
        return self._memo[key]

    def cost(self, root, terminals):
        """Optimal tree price only; inf when some terminal is unreachable."""
        key = (root, frozenset(terminals) - {root})
        if key in self._memo:
            return self._memo[key][0]
        if key not in self._value:
            try:
                self._value[key] = _dreyfus_wagner(self.dist, root, key[1], value_only=True)[1]
            except ValueError:
                self._value[key] = math.inf
        return self._value[key]


def rembedding_from_trees(net, dag, mu, cache: SteinerCache) -> REmbedding:
    paths = {}
    for v in dag.functions:
        heads = [e.head for e in dag.out_edges[v]]
        _, edges = cache.get(mu[v], [mu[h] for h in heads])
        routes = tree_paths(net, edges, mu[v], {mu[h] for h in heads})
        for e in dag.out_edges[v]:
            paths[e.id] = routes[mu[e.head]]
    return REmbedding(paths)


_TABLE_LIMIT = 1 << 18


def _function_tables(net, dag, free, pins, cache):
    """Per-function Steiner cost as a table indexed by the images of the
    function and its successors; None when a table would be too large."""
    n = net.n
    slot = {v: j for j, v in enumerate(free)}
    tables = []
    for v in dag.functions:
        heads = [e.head for e in dag.out_edges[v]]
        axes = list(dict.fromkeys([v] + heads))
        if n ** len(axes) > _TABLE_LIMIT:
            return None
        choices = [[net.index[pins[a]]] if a in pins else range(n) for a in axes]
        vals = {}
        for combo in itertools.product(*choices):
            pos = dict(zip(axes, combo))
            vals[combo] = cache.cost(net.nodes[pos[v]], [net.nodes[pos[h]] for h in heads])
        tables.append((dag.node_weight[v], axes, choices, vals))
    return tables, slot


def _enumerate_tables(net, free, tables, slot):
    """First assignment (mixed-radix order) minimising the sum of weighted tables."""
    flat = [w * x for w, _, _, vals in tables for x in vals.values()]
    exact = all(not (isinstance(x, float) and math.isinf(x)) for x in flat)
    ints, _ = integerize(flat) if exact else (None, None)
    dtype = np.int64 if ints is not None else float
    arrays = []
    pos = 0
    for w, axes, choices, vals in tables:
        shape = tuple(len(c) for c in choices)
        chunk = ints[pos:pos + len(vals)] if ints is not None else [float(w * x) for x in vals.values()]
        pos += len(vals)
        arr = np.array(chunk, dtype=dtype).reshape(shape)
        arrays.append((arr, [slot.get(a) for a in axes]))
    n, k = net.n, len(free)
    total = n ** k
    best_val, best_idx = None, None
    for lo in range(0, total, _BLOCK):
        hi = min(total, lo + _BLOCK)
        digits = np.unravel_index(np.arange(lo, hi), (n,) * k) if k else ()
        cost = np.zeros(hi - lo, dtype=dtype)
        for arr, slots in arrays:
            index = tuple(digits[j] if j is not None else 0 for j in slots)
            cost = cost + arr[index]
        j = int(np.argmin(cost))
        if best_val is None or cost[j] < best_val:
            best_val, best_idx = cost[j], lo + j
    if dtype is float and math.isinf(best_val):
        return None
    return np.unravel_index(best_idx, (n,) * k) if k else ()


def mincost_c_exact(net: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None,
                    dist: Optional[DistanceMatrix] = None):
    """Minimum per-function (shared edge counted once) cost over R-embeddings.

    For a fixed assignment the cheapest delivery of a function is a Steiner
    tree from its image to the images of its successors.
    """
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    free = dag.free_vertices
    n, k = net.n, len(free)
    _check_budget(k, n, "c")
    pins = pinned(net, dag)
    cache = SteinerCache(net, dist)
    built = _function_tables(net, dag, free, pins, cache)
    if built is not None:
        digits = _enumerate_tables(net, free, *built)
        if digits is None:
            raise ValueError("no assignment connects all mapped pairs")
        best_mu = dict(pins)
        for j, v in enumerate(free):
            best_mu[v] = net.nodes[int(digits[j])]
    else:
        best_mu = _scan_assignments(net, dag, free, pins, cache)
    remb = rembedding_from_trees(net, dag, best_mu, cache)
    return remb, cost_C(net, dag, remb, dist.prices)


def _scan_assignments(net, dag, free, pins, cache):
    funcs = [(v, dag.node_weight[v], [e.head for e in dag.out_edges[v]]) for v in dag.functions]
    best, best_mu = None, None
    mu = dict(pins)
    for combo in itertools.product(net.nodes, repeat=len(free)):
        for v, u in zip(free, combo):
            mu[v] = u
        total = 0
        for v, w, heads in funcs:
            total += w * cache.get(mu[v], [mu[h] for h in heads])[0]
            if best is not None and total >= best:
                break
        else:
            if best is None or total < best:
                best, best_mu = total, dict(mu)
    if best is None or math.isinf(best):
        raise ValueError("no assignment connects all mapped pairs")
    return best_mu


def simple_paths(net: NetworkGraph, u, v) -> list:
    """All simple paths from u to v in adjacency order (zero-length when u == v)."""
    if u == v:
        return [(u,)]
    out = []
    stack = [(u, [u])]
    while stack:
        a, path = stack.pop()
        for b in reversed(net.adj[a]):
            if b in path:
                continue
            if b == v:
                out.append(tuple(path + [b]))
            else:
                stack.append((b, path + [b]))
    out.sort(key=lambda p: (len(p), [net.index[x] for x in p]))
    return out


def enumerate_assignments(net: NetworkGraph, dag: ComputationDag) -> Iterator[dict]:
    pins = pinned(net, dag)
    free = dag.free_vertices
    for combo in itertools.product(net.nodes, repeat=len(free)):
        mu = dict(pins)
        mu.update(zip(free, combo))
        yield mu


def enumerate_rembeddings(net: NetworkGraph, dag: ComputationDag, limit: Optional[int] = None) -> Iterator[REmbedding]:
    """Every R-embedding: each assignment times every choice of simple paths."""
    count = 0
    cache = {}
    for mu in enumerate_assignments(net, dag):
        options = []
        for e in dag.edges:
            key = (mu[e.tail], mu[e.head])
            if key not in cache:
                cache[key] = simple_paths(net, *key)
            options.append(cache[key])
        for choice in itertools.product(*options):
            yield REmbedding({e.id: p for e, p in zip(dag.edges, choice)})
            count += 1
            if limit is not None and count >= limit:
                return
