"""Exact and approximate placement solvers for structured schemas."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .embedding import REmbedding, assignment_to_rembedding, cost_CC, pinned
from .graphs import (ComputationDag, DistanceMatrix, NetworkGraph, SpanningTreeInfo,
                     all_pairs_shortest, spanning_tree_cycle_load)
from .oracle import distance_array, integerize

DEFAULT_MAX_WIDTH = 4


def _tree_dp(net: NetworkGraph, dag: ComputationDag, tree_ids, dist: DistanceMatrix):
    """Placement DP on an undirected spanning tree of the schema rooted at the sink.

    Returns (assignment, optimal cost restricted to the tree edges).
    """
    pins = pinned(net, dag)
    adj = {v: [] for v in dag.nodes}
    for eid in tree_ids:
        e = dag.edge[eid]
        adj[e.tail].append((e.head, e))
        adj[e.head].append((e.tail, e))
    root = dag.sink
    parent = {root: None}
    order = [root]
    for u in order:
        for v, e in adj[u]:
            if v not in parent:
                parent[v] = (u, e)
                order.append(v)
    if len(order) != len(dag.nodes):
        raise ValueError("tree does not span the computation graph")
    nodes = net.nodes
    d = dist.matrix()
    cost, choice = {}, {}
    for a in reversed(order):
        row = []
        for vi, v in enumerate(nodes):
            if a in pins and pins[a] != v:
                row.append(math.inf)
                continue
            total = 0
            for c, e in adj[a]:
                if parent.get(c) is None or parent[c][0] != a:
                    continue
                w = dag.edge_weight(e)
                best, arg = math.inf, None
                for ui in range(len(nodes)):
                    val = cost[c][ui] + w * d[ui][vi] if not math.isinf(cost[c][ui]) else math.inf
                    if val < best:
                        best, arg = val, ui
                choice[(c, vi)] = arg
                total = total + best
            row.append(total)
        cost[a] = row
    ri = net.index[pins[root]]
    if math.isinf(cost[root][ri]):
        raise ValueError("no finite placement exists")
    mu = {root: pins[root]}
    for a in order[1:]:
        mu[a] = nodes[choice[(a, net.index[mu[parent[a][0]]])]]
    return mu, cost[root][ri]


def tree_dp_mincost_cc(net: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None,
                       dist: Optional[DistanceMatrix] = None):
    """Exact per-DAG-edge minimum cost when every non-sink vertex has one successor."""
    if not dag.is_tree_shaped():
        raise ValueError("computation graph is not tree-shaped")
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    mu, _ = _tree_dp(net, dag, [e.id for e in dag.edges], dist)
    remb = assignment_to_rembedding(net, dag, mu, dist=dist)
    return remb, cost_CC(net, dag, remb, dist.prices)


def dag_layers(dag: ComputationDag) -> list:
    """Longest-path layering from the sources; raises if an edge skips a layer."""
    level = {}
    for v in dag.topological_order():
        preds = dag.pred(v)
        level[v] = 0 if not preds else 1 + max(level[p] for p in preds)
    for e in dag.edges:
        if level[e.head] != level[e.tail] + 1:
            raise ValueError(f"edge {e.id} skips from layer {level[e.tail]} to {level[e.head]}")
    layers = [[] for _ in range(max(level.values()) + 1)]
    for v in dag.nodes:
        layers[level[v]].append(v)
    return layers


def layered_ratio(dag: ComputationDag) -> int:
    """Approximation ratio exposed for layered pricing: min(width, max out-degree)."""
    width = max(len(layer) for layer in dag_layers(dag))
    return max(1, min(width, dag.max_out_degree))


def layered_dp_mincost_cc(net: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None,
                          dist: Optional[DistanceMatrix] = None, max_width: int = DEFAULT_MAX_WIDTH):
    """Exact per-DAG-edge minimum cost by DP over joint placements of whole layers."""
    layers = dag_layers(dag)
    width = max(len(layer) for layer in layers)
    if width > max_width:
        raise ValueError(f"layer width {width} exceeds the limit {max_width}")
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    pins = pinned(net, dag)
    D, _ = distance_array(dist)
    wvals = [dag.edge_weight(e) for e in dag.edges]
    wints, _ = integerize(wvals)
    exact = wints is not None and D.dtype == np.int64
    if not exact:
        D = D.astype(float)
    weight = {e.id: (wints[i] if exact else float(wvals[i])) for i, e in enumerate(dag.edges)}
    n = net.n

    def states(layer):
        choices = [[net.index[pins[v]]] if v in pins else range(n) for v in layer]
        return np.array(list(itertools.product(*choices)), dtype=np.int64).reshape(-1, len(layer))

    S = states(layers[0])
    best = np.zeros(len(S), dtype=D.dtype)
    history = []
    for la, lb in zip(layers, layers[1:]):
        T = states(lb)
        pos_a = {v: i for i, v in enumerate(la)}
        pos_b = {v: i for i, v in enumerate(lb)}
        trans = np.zeros((len(S), len(T)), dtype=D.dtype)
        for v in la:
            for e in dag.out_edges[v]:
                trans += weight[e.id] * D[S[:, pos_a[v]][:, None], T[:, pos_b[e.head]][None, :]]
        total = best[:, None] + trans
        arg = np.argmin(total, axis=0)
        best = total[arg, np.arange(len(T))]
        history.append((S, arg))
        S = T
    j = int(np.argmin(best))
    if not exact and math.isinf(best[j]):
        raise ValueError("no finite placement exists")
    mu = {}
    for v, i in zip(layers[-1], S[j]):
        mu[v] = net.nodes[int(i)]
    for layer, (Sprev, arg) in zip(reversed(layers[:-1]), reversed(history)):
        j = int(arg[j])
        for v, i in zip(layer, Sprev[j]):
            mu[v] = net.nodes[int(i)]
    remb = assignment_to_rembedding(net, dag, mu, dist=dist)
    return remb, cost_CC(net, dag, remb, dist.prices)


@dataclass
class TreeApproximation:
    rembedding: REmbedding
    cost: object             # per-DAG-edge cost of the full output
    ratio_bound: object      # certified: cost <= ratio_bound * tree_cost <= ratio_bound * optimum
    tree_cost: object        # optimum restricted to the tree edges (a lower bound)
    info: SpanningTreeInfo

    def __iter__(self):
        return iter((self.rembedding, self.cost, self.ratio_bound))


def weighted_cycle_load(dag: ComputationDag, info: SpanningTreeInfo):
    """max over tree edges of (sum of weights of non-tree edges whose cycle uses it) / own weight.

    Equals F when all edge weights are equal.
    """
    load = {eid: 0 for eid in info.tree}
    for nt, path in info.cycles.items():
        for eid in path:
            load[eid] += dag.edge_weight(nt)
    ratios = [Fraction(load[eid]) / Fraction(dag.edge_weight(eid)) for eid in info.tree]
    return max(ratios, default=0)


def spanning_tree_approx_mincost_cc(net: NetworkGraph, dag: ComputationDag, prices: Optional[Mapping] = None,
                                    tree=None, dist: Optional[DistanceMatrix] = None) -> TreeApproximation:
    """Solve the placement on a spanning tree of the schema, then route the
    remaining edges on shortest paths between the chosen images."""
    if dist is None:
        dist = all_pairs_shortest(net, prices)
    info = spanning_tree_cycle_load(dag, tree)
    mu, tree_cost = _tree_dp(net, dag, info.tree, dist)
    remb = assignment_to_rembedding(net, dag, mu, dist=dist)
    cost = cost_CC(net, dag, remb, dist.prices)
    return TreeApproximation(remb, cost, 1 + weighted_cycle_load(dag, info), tree_cost, info)
